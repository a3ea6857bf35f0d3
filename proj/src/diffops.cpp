#include "paratts/diffops.hpp"

#include <algorithm>
#include <cmath>

#include "paratts/errors.hpp"

namespace paratts::diffops {

using ag::Mat;
using ag::Tape;

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kLogEps = 1e-7;  // matches the plain spectral-loss floor
}  // namespace

Var stft_magnitude(Var wave, int fft_size, int hop, int window, double eps) {
  Tape& t = *wave.tape;
  const Mat& w = t.val(wave);
  if (w.cols() != 1) throw ShapeError("diff stft: wave must be T x 1");
  const int len = static_cast<int>(w.rows());
  if (len == 0) throw DomainError("diff stft: empty wave");
  const int frames = (len + hop - 1) / hop;
  const int bins = fft_size / 2 + 1;
  const int half = window / 2;

  std::vector<int> index;
  index.reserve(static_cast<size_t>(frames) * window);
  for (int f = 0; f < frames; ++f)
    for (int n = 0; n < window; ++n)
      index.push_back(dsp::reflect_index(f * hop - half + n, len));

  const std::vector<double> win = dsp::hann_window(window);
  Mat winrow(1, window);
  for (int n = 0; n < window; ++n) winrow(0, n) = win[n];
  Mat cosb(window, bins), sinb(window, bins);
  for (int n = 0; n < window; ++n) {
    for (int k = 0; k < bins; ++k) {
      double ang = 2.0 * kPi * k * n / fft_size;
      cosb(n, k) = std::cos(ang);
      sinb(n, k) = -std::sin(ang);
    }
  }

  Var framed = ag::reshape_rowmajor(ag::gather_rows(wave, index), frames, window);
  framed = ag::mul(framed, ag::broadcast_rows(t.constant(winrow), frames));
  Var re = ag::matmul(framed, t.constant(cosb));
  Var im = ag::matmul(framed, t.constant(sinb));
  return ag::sqrt_(ag::add_scalar(ag::add(ag::square(re), ag::square(im)), eps));
}

Var mel_spectrogram(Var linear_mag, const dsp::SpectrogramConfig& cfg) {
  Tape& t = *linear_mag.tape;
  if (t.val(linear_mag).cols() != cfg.bins())
    throw ShapeError("diff mel: bin mismatch");
  Var mel = ag::matmul(linear_mag, t.constant(dsp::mel_filterbank(cfg)));
  return ag::log_(ag::clamp_min(mel, dsp::kMelFloor));
}

Var mel_l1(Var pred_wave, Var target_wave, const dsp::SpectrogramConfig& cfg) {
  Tape& t = *pred_wave.tape;
  int n = static_cast<int>(
      std::min(t.val(pred_wave).rows(), t.val(target_wave).rows()));
  if (n == 0) throw DomainError("diff mel_l1: empty input");
  Var a = ag::slice_rows(pred_wave, 0, n);
  Var b = ag::slice_rows(target_wave, 0, n);
  Var ma = mel_spectrogram(stft_magnitude(a, cfg.fft_size, cfg.hop, cfg.window), cfg);
  Var mb = mel_spectrogram(stft_magnitude(b, cfg.fft_size, cfg.hop, cfg.window), cfg);
  return ag::mean(ag::abs_(ag::sub(ma, mb)));
}

Var multi_res_stft_loss(Var x_ref, Var y,
                        const std::vector<dsp::StftResolution>& resolutions) {
  Tape& t = *x_ref.tape;
  if (t.val(x_ref).rows() != t.val(y).rows())
    throw ShapeError("diff multi_res_stft_loss: length mismatch");
  if (resolutions.empty())
    throw DomainError("diff multi_res_stft_loss: no resolutions");
  Var total = t.constant_scalar(0.0);
  for (const auto& res : resolutions) {
    Var sx = stft_magnitude(x_ref, res.fft_size, res.hop, res.window, 1e-16);
    Var sy = stft_magnitude(y, res.fft_size, res.hop, res.window, 1e-16);
    Var sc = ag::div(ag::frobenius(ag::sub(sx, sy)), ag::frobenius(sx));
    Var mag = ag::mean(ag::abs_(ag::sub(ag::log_(ag::clamp_min(sx, kLogEps)),
                                        ag::log_(ag::clamp_min(sy, kLogEps)))));
    total = ag::add(total, ag::add(sc, mag));
  }
  return ag::scale(total, 1.0 / resolutions.size());
}

Var linear_spec_loss(Var pred_spec, Var target_spec) {
  Tape& t = *pred_spec.tape;
  if (t.val(pred_spec).rows() != t.val(target_spec).rows() ||
      t.val(pred_spec).cols() != t.val(target_spec).cols())
    throw ShapeError("diff linear_spec_loss: shape mismatch");
  Var p = ag::clamp_min(pred_spec, 0.0);
  Var sc = ag::div(ag::frobenius(ag::sub(target_spec, p)),
                   ag::frobenius(target_spec));
  Var mag =
      ag::mean(ag::abs_(ag::sub(ag::log_(ag::clamp_min(target_spec, kLogEps)),
                                ag::log_(ag::clamp_min(p, kLogEps)))));
  return ag::add(sc, mag);
}

Var gaussian_kl(const LatentStatsVar& q, const LatentStatsVar& p) {
  Tape& t = *q.mean.tape;
  if (t.val(q.mean).rows() != t.val(p.mean).rows() ||
      t.val(q.mean).cols() != t.val(p.mean).cols())
    throw ShapeError("diff gaussian_kl: stats shape mismatch");
  Var ratio = ag::sub(ag::log_(p.std), ag::log_(q.std));
  Var num = ag::add(ag::square(q.std), ag::square(ag::sub(q.mean, p.mean)));
  Var frac = ag::div(num, ag::scale(ag::square(p.std), 2.0));
  return ag::mean(ag::add_scalar(ag::add(ratio, frac), -0.5));
}

Var duration_l2(Var pred_logdur, Var target_logdur) {
  Tape& t = *pred_logdur.tape;
  if (t.val(pred_logdur).rows() != t.val(target_logdur).rows() ||
      t.val(pred_logdur).cols() != 1 || t.val(target_logdur).cols() != 1)
    throw ShapeError("diff duration_l2: shape mismatch");
  return ag::mean(ag::square(ag::sub(pred_logdur, target_logdur)));
}

std::pair<Var, Var> adversarial_losses(const std::vector<Var>& scores_real,
                                       const std::vector<Var>& scores_fake) {
  if (scores_real.size() != scores_fake.size() || scores_real.empty())
    throw ShapeError("diff adversarial_losses: branch mismatch");
  Tape& t = *scores_real[0].tape;
  Var l_g = t.constant_scalar(0.0);
  Var l_d = t.constant_scalar(0.0);
  for (size_t i = 0; i < scores_real.size(); ++i) {
    Var r = scores_real[i], f = scores_fake[i];
    l_g = ag::add(l_g, ag::mean(ag::square(ag::add_scalar(f, -1.0))));
    l_d = ag::add(l_d, ag::add(ag::mean(ag::square(ag::add_scalar(r, -1.0))),
                               ag::mean(ag::square(f))));
  }
  double n = static_cast<double>(scores_real.size());
  return {ag::scale(l_g, 1.0 / n), ag::scale(l_d, 1.0 / n)};
}

}  // namespace paratts::diffops
