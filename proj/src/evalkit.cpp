#include "paratts/evalkit.hpp"

#include <cmath>
#include <limits>

#include "paratts/diffops.hpp"
#include "paratts/errors.hpp"
#include "paratts/losses.hpp"
#include "paratts/msae.hpp"
#include "paratts/mste.hpp"
#include "paratts/trainer.hpp"

namespace paratts::evalkit {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Symmetric DTW (diagonal/vertical/horizontal steps, unit weights) returning
// the mean local cost along the optimal path.
double dtw_mean_cost(const Eigen::MatrixXd& cost) {
  const long n = cost.rows(), m = cost.cols();
  if (n == 0 || m == 0) throw DomainError("dtw: empty sequence");
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd acc(n, m);
  Eigen::MatrixXi len(n, m);
  acc(0, 0) = cost(0, 0);
  len(0, 0) = 1;
  for (long i = 1; i < n; ++i) {
    acc(i, 0) = acc(i - 1, 0) + cost(i, 0);
    len(i, 0) = len(i - 1, 0) + 1;
  }
  for (long j = 1; j < m; ++j) {
    acc(0, j) = acc(0, j - 1) + cost(0, j);
    len(0, j) = len(0, j - 1) + 1;
  }
  for (long i = 1; i < n; ++i) {
    for (long j = 1; j < m; ++j) {
      double best = acc(i - 1, j - 1);
      int from = 0;
      if (acc(i - 1, j) < best) {
        best = acc(i - 1, j);
        from = 1;
      }
      if (acc(i, j - 1) < best) {
        best = acc(i, j - 1);
        from = 2;
      }
      acc(i, j) = best + cost(i, j);
      len(i, j) = (from == 0   ? len(i - 1, j - 1)
                   : from == 1 ? len(i - 1, j)
                               : len(i, j - 1)) +
                  1;
    }
  }
  (void)inf;
  return acc(n - 1, m - 1) / len(n - 1, m - 1);
}

}  // namespace

Eigen::MatrixXd mel_cepstra(const std::vector<double>& wave,
                            const dsp::SpectrogramConfig& cfg, int order) {
  if (wave.empty()) throw DomainError("mel_cepstra: empty wave");
  dsp::Spec logmel = dsp::mel_spectrogram(dsp::stft_magnitude(wave, cfg), cfg);
  const int M = cfg.n_mels;
  const int D = std::min(order, M - 1);
  // DCT-II basis, coefficients 1..D (c0 dropped)
  Eigen::MatrixXd basis(M, D);
  for (int m = 0; m < M; ++m)
    for (int d = 0; d < D; ++d)
      basis(m, d) = std::cos(kPi * (d + 1) * (m + 0.5) / M);
  return logmel * basis * std::sqrt(2.0 / M);
}

double mcd_from_cepstra(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw ShapeError("mcd: cepstral order mismatch");
  if (a.rows() == 0 || b.rows() == 0) throw DomainError("mcd: empty cepstra");
  Eigen::MatrixXd cost(a.rows(), b.rows());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < b.rows(); ++j) {
      double d2 = (a.row(i) - b.row(j)).squaredNorm();
      cost(i, j) = 10.0 / std::log(10.0) * std::sqrt(2.0 * d2);
    }
  return dtw_mean_cost(cost);
}

double mcd(const std::vector<double>& ref_wave,
           const std::vector<double>& syn_wave,
           const dsp::SpectrogramConfig& cfg) {
  return mcd_from_cepstra(mel_cepstra(ref_wave, cfg),
                          mel_cepstra(syn_wave, cfg));
}

F0RmseResult log_f0_rmse(const std::vector<double>& ref_wave,
                         const std::vector<double>& syn_wave,
                         const dsp::SpectrogramConfig& cfg) {
  if (ref_wave.empty() || syn_wave.empty())
    throw DomainError("log_f0_rmse: empty wave");
  std::vector<double> lr, ls;
  for (double f : dsp::estimate_f0(ref_wave, cfg).f0)
    if (f > 0) lr.push_back(std::log(f));
  for (double f : dsp::estimate_f0(syn_wave, cfg).f0)
    if (f > 0) ls.push_back(std::log(f));
  F0RmseResult out;
  if (lr.empty() || ls.empty()) {
    out.no_voiced_overlap = true;
    return out;
  }
  Eigen::MatrixXd cost(lr.size(), ls.size());
  for (size_t i = 0; i < lr.size(); ++i)
    for (size_t j = 0; j < ls.size(); ++j)
      cost(static_cast<long>(i), static_cast<long>(j)) =
          (lr[i] - ls[j]) * (lr[i] - ls[j]);
  out.rmse = std::sqrt(dtw_mean_cost(cost));
  return out;
}

KlReport kl_report(const trainer::Checkpoint& ck,
                   const std::string& corpus_dir) {
  dsp::SpectrogramConfig prof = dsp::SpectrogramConfig::preset(ck.dsp_profile);
  std::vector<corpus::Paragraph> ps = corpus::load_corpus(corpus_dir);
  if (ps.empty()) throw ValidationError("kl_report: empty corpus");
  nn::ParamStore params = ck.params;

  KlReport out;
  for (const auto& p : ps) {
    trainer::ParagraphData pd =
        trainer::prepare_paragraph(p, corpus_dir, prof);
    ag::Tape t;
    nn::Ctx c(t, params);
    msae::Msae enc(ck.model);
    mste::Mste tex(ck.model);
    mste::TextFeaturesVar text = tex.embed_text(c, pd.p);
    std::optional<ag::Var> txt_for_enc;
    if (ck.model.text_in_msae) txt_for_enc = text.phoneme_hidden;
    auto post = enc.encode_all(c, t.constant(pd.spec), prof.bins(), pd.segs,
                               txt_for_enc);
    std::vector<LatentSampleVar> samples;
    for (const auto& st : post) {
      const ag::Mat& mean = t.val(st.mean);
      samples.push_back(msae::Msae::sample_latent(
          st, t.constant(ag::Mat::Zero(mean.rows(), mean.cols()))));
    }
    auto prior = tex.run_prior_chain_teacher(c, text, pd.segs, samples);
    for (int i = 0; i < 5; ++i) {
      LatentStats q{t.val(post[i].mean), t.val(post[i].std), post[i].level,
                    StatsSource::posterior};
      const auto& pr = prior.stats[4 - i];
      LatentStats pstats{t.val(pr.mean), t.val(pr.std), pr.level,
                         StatsSource::prior};
      out.kl[i] += losses::gaussian_kl(q, pstats) / ps.size();
    }
  }
  for (int i = 0; i < 5; ++i) out.collapsed[i] = out.kl[i] < kCollapseThreshold;
  return out;
}

std::vector<BoundaryStats> boundary_continuity(
    const std::vector<double>& wave, const std::vector<long>& boundaries,
    const dsp::SpectrogramConfig& cfg) {
  const long len = static_cast<long>(wave.size());
  const long w = std::lround(0.05 * cfg.sample_rate);
  if (w < 2) throw ConfigError("boundary_continuity: window too small");

  auto rms = [&](long start) {
    double s = 0.0;
    for (long i = 0; i < w; ++i) s += wave[start + i] * wave[start + i];
    return std::sqrt(s / w);
  };
  auto centroid = [&](long start) {
    // single-window periodogram over the 50 ms span
    int fft = 1;
    while (fft < w) fft <<= 1;
    double num = 0.0, den = 0.0;
    for (int k = 0; k <= fft / 2; ++k) {
      double re = 0.0, im = 0.0;
      for (long n = 0; n < w; ++n) {
        double win = 0.5 - 0.5 * std::cos(2.0 * kPi * n / w);
        double ang = 2.0 * kPi * k * n / fft;
        re += wave[start + n] * win * std::cos(ang);
        im -= wave[start + n] * win * std::sin(ang);
      }
      double mag = std::sqrt(re * re + im * im);
      num += mag * (static_cast<double>(k) * cfg.sample_rate / fft);
      den += mag;
    }
    return den > 1e-12 ? num / den : 0.0;
  };

  std::vector<BoundaryStats> out;
  for (long b : boundaries) {
    if (b - w < 0 || b + w > len)
      throw DomainError("boundary_continuity: boundary " + std::to_string(b) +
                        " too close to an edge");
    BoundaryStats s;
    double before = rms(b - w), after = rms(b);
    s.rms_jump_db =
        std::abs(20.0 * std::log10((after + 1e-12) / (before + 1e-12)));
    s.centroid_jump_hz = std::abs(centroid(b) - centroid(b - w));
    out.push_back(s);
  }
  return out;
}

}  // namespace paratts::evalkit
