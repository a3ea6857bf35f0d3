#include "paratts/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "paratts/errors.hpp"

namespace paratts::dsp {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kLogEps = 1e-7;  // floor for log-magnitude terms
}  // namespace

void SpectrogramConfig::validate() const {
  if (window > fft_size) throw ConfigError("dsp: window > fft_size");
  if (hop > window) throw ConfigError("dsp: hop > window");
  if (fmax > sample_rate / 2.0 + 1e-9)
    throw ConfigError("dsp: fmax above Nyquist");
  if (hop <= 0 || window <= 0 || fft_size <= 0 || n_mels <= 0)
    throw ConfigError("dsp: non-positive size");
}

SpectrogramConfig SpectrogramConfig::preset(const std::string& name) {
  SpectrogramConfig cfg;
  if (name == "paper") {
    cfg.sample_rate = 22050;
    cfg.hop = 300;
    cfg.window = 800;
    cfg.fft_size = 1024;
    cfg.n_mels = 80;
    cfg.fmax = 11025.0;
  } else if (name == "desk") {
    cfg.sample_rate = 16000;
    cfg.hop = 200;
    cfg.window = 800;
    cfg.fft_size = 1024;
    cfg.n_mels = 80;
    cfg.fmax = 8000.0;
  } else if (name == "micro") {
    // tiny profile for gradient checks and structural tests
    cfg.sample_rate = 2000;
    cfg.hop = 20;
    cfg.window = 40;
    cfg.fft_size = 64;
    cfg.n_mels = 8;
    cfg.fmax = 1000.0;
    cfg.f0_min = 50.0;
    cfg.f0_max = 400.0;
  } else {
    throw ConfigError("unknown dsp profile: " + name);
  }
  cfg.profile_name = name;
  cfg.validate();
  return cfg;
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
  return w;
}

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  int period = 2 * (n - 1);
  i = ((i % period) + period) % period;
  return i < n ? i : period - i;
}

namespace {

Spec stft_impl(const std::vector<double>& wave, int fft_size, int hop,
               int window) {
  if (wave.empty()) throw DomainError("stft: empty wave");
  const int len = static_cast<int>(wave.size());
  const int frames = static_cast<int>((wave.size() + hop - 1) / hop);
  const int bins = fft_size / 2 + 1;
  const std::vector<double> win = hann_window(window);

  // DFT bases over the windowed span (frame zero-padded to fft_size).
  Eigen::MatrixXd cosb(window, bins), sinb(window, bins);
  for (int n = 0; n < window; ++n) {
    for (int k = 0; k < bins; ++k) {
      double ang = 2.0 * kPi * k * n / fft_size;
      cosb(n, k) = std::cos(ang);
      sinb(n, k) = -std::sin(ang);
    }
  }

  Eigen::MatrixXd framed(frames, window);
  const int half = window / 2;
  for (int f = 0; f < frames; ++f) {
    int center = f * hop;
    for (int n = 0; n < window; ++n) {
      int idx = reflect_index(center - half + n, len);
      framed(f, n) = wave[idx] * win[n];
    }
  }
  Eigen::MatrixXd re = framed * cosb;
  Eigen::MatrixXd im = framed * sinb;
  return (re.array().square() + im.array().square()).sqrt().matrix();
}

}  // namespace

Spec stft_magnitude(const std::vector<double>& wave,
                    const SpectrogramConfig& cfg) {
  cfg.validate();
  return stft_impl(wave, cfg.fft_size, cfg.hop, cfg.window);
}

Spec stft_magnitude_res(const std::vector<double>& wave,
                        const StftResolution& res) {
  return stft_impl(wave, res.fft_size, res.hop, res.window);
}

Eigen::MatrixXd mel_filterbank(const SpectrogramConfig& cfg) {
  auto hz_to_mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto mel_to_hz = [](double m) {
    return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0);
  };
  const int bins = cfg.bins();
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(bins, cfg.n_mels);
  double mlo = hz_to_mel(cfg.fmin), mhi = hz_to_mel(cfg.fmax);
  std::vector<double> centers(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i)
    centers[i] = mel_to_hz(mlo + (mhi - mlo) * i / (cfg.n_mels + 1));
  for (int k = 0; k < bins; ++k) {
    double f = static_cast<double>(k) * cfg.sample_rate / cfg.fft_size;
    for (int m = 0; m < cfg.n_mels; ++m) {
      double lo = centers[m], mid = centers[m + 1], hi = centers[m + 2];
      if (f > lo && f < hi)
        fb(k, m) = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
    }
  }
  return fb;
}

Spec mel_spectrogram(const Spec& linear, const SpectrogramConfig& cfg) {
  if (linear.cols() != cfg.bins())
    throw ShapeError("mel_spectrogram: expected " + std::to_string(cfg.bins()) +
                     " bins, got " + std::to_string(linear.cols()));
  Eigen::MatrixXd fb = mel_filterbank(cfg);
  Spec mel = linear * fb;
  return mel.array().max(kMelFloor).log().matrix();
}

F0Track estimate_f0(const std::vector<double>& wave,
                    const SpectrogramConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(wave.size()) < cfg.window)
    throw DomainError("estimate_f0: wave shorter than one analysis window");
  const int len = static_cast<int>(wave.size());
  const int frames = cfg.num_frames(wave.size());
  const int lag_min =
      std::max(2, static_cast<int>(std::floor(cfg.sample_rate / cfg.f0_max)));
  const int lag_max = static_cast<int>(std::ceil(cfg.sample_rate / cfg.f0_min));
  const int awin = 2 * lag_max;  // two max-periods of context
  const double kVoicingThreshold = 0.5;
  const double kEnergyThreshold = 1e-7;

  F0Track out;
  out.f0.assign(frames, 0.0);
  std::vector<double> seg(awin + lag_max);
  for (int f = 0; f < frames; ++f) {
    int center = f * cfg.hop;
    for (int n = 0; n < static_cast<int>(seg.size()); ++n)
      seg[n] = wave[reflect_index(center - awin / 2 + n, len)];
    double r0 = 0.0;
    for (int n = 0; n < awin; ++n) r0 += seg[n] * seg[n];
    if (r0 / awin < kEnergyThreshold) continue;  // silence
    int best_lag = 0;
    double best_r = 0.0;
    std::vector<double> rs(lag_max + 1, 0.0);
    for (int lag = lag_min; lag <= lag_max; ++lag) {
      double r = 0.0, e = 0.0;
      for (int n = 0; n < awin; ++n) {
        r += seg[n] * seg[n + lag];
        e += seg[n + lag] * seg[n + lag];
      }
      double norm = std::sqrt(r0 * e) + 1e-12;
      rs[lag] = r / norm;
      if (rs[lag] > best_r) {
        best_r = rs[lag];
        best_lag = lag;
      }
    }
    if (best_lag == 0 || best_r < kVoicingThreshold) continue;
    // Harmonics of the true period score nearly as high as the period itself;
    // take the shortest lag competitive with the global peak to avoid
    // sub-octave errors.
    for (int lag = lag_min; lag < best_lag; ++lag) {
      if (rs[lag] >= 0.9 * best_r &&
          (lag == lag_min || rs[lag] >= rs[lag - 1]) &&
          rs[lag] >= rs[lag + 1]) {
        best_lag = lag;
        best_r = rs[lag];
        break;
      }
    }
    // parabolic refinement around the peak
    double lag = best_lag;
    if (best_lag > lag_min && best_lag < lag_max) {
      double a = rs[best_lag - 1], b = rs[best_lag], c = rs[best_lag + 1];
      double denom = a - 2 * b + c;
      if (std::abs(denom) > 1e-12) {
        double delta = 0.5 * (a - c) / denom;
        if (std::abs(delta) <= 1.0) lag += delta;
      }
    }
    double f0 = cfg.sample_rate / lag;
    if (f0 >= cfg.f0_min && f0 <= cfg.f0_max) out.f0[f] = f0;
  }
  return out;
}

std::vector<StftResolution> default_resolutions() {
  return {{512, 50, 240}, {1024, 120, 600}, {2048, 240, 1200}};
}

double multi_res_stft_loss(const std::vector<double>& x,
                           const std::vector<double>& y,
                           const std::vector<StftResolution>& resolutions) {
  if (x.size() != y.size())
    throw ShapeError("multi_res_stft_loss: length mismatch");
  if (x.empty()) throw DomainError("multi_res_stft_loss: empty input");
  double total = 0.0;
  for (const auto& res : resolutions) {
    Spec sx = stft_magnitude_res(x, res);
    Spec sy = stft_magnitude_res(y, res);
    double nx = sx.norm();
    double sc = (sx - sy).norm() / std::max(nx, 1e-12);
    double mag = (sx.array().max(kLogEps).log() -
                  sy.array().max(kLogEps).log())
                     .abs()
                     .mean();
    total += sc + mag;
  }
  return total / resolutions.size();
}

}  // namespace paratts::dsp
