#ifndef PARATTS_EVALKIT_HPP_
#define PARATTS_EVALKIT_HPP_

#include <array>
#include <string>
#include <vector>

#include "paratts/checkpoint.hpp"
#include "paratts/dsp.hpp"

namespace paratts::evalkit {

// Mel-cepstra per frame: log-mel -> DCT-II, coefficients 1..order (c0
// excluded). order is capped at n_mels - 1.
Eigen::MatrixXd mel_cepstra(const std::vector<double>& wave,
                            const dsp::SpectrogramConfig& cfg, int order = 24);

// DTW-aligned mel-cepstral distortion in dB: mean over the alignment path of
// (10/ln10) * sqrt(2 * sum_d (c_d - c'_d)^2). Exposed at the cepstral level
// so constructed-offset oracles can bypass the audio front end.
double mcd_from_cepstra(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

double mcd(const std::vector<double>& ref_wave,
           const std::vector<double>& syn_wave,
           const dsp::SpectrogramConfig& cfg);

struct F0RmseResult {
  double rmse = 0.0;
  bool no_voiced_overlap = false;  // true when either track has no voicing
};

// RMSE of natural-log F0 over DTW-aligned voiced frames.
F0RmseResult log_f0_rmse(const std::vector<double>& ref_wave,
                         const std::vector<double>& syn_wave,
                         const dsp::SpectrogramConfig& cfg);

constexpr double kCollapseThreshold = 1e-3;  // nats per dimension

struct KlReport {
  std::array<double, 5> kl{};  // L1..L5, mean nats/dim over the corpus
  std::array<bool, 5> collapsed{};
};

// Teacher-forced zero-noise forward over a corpus; per-level posterior/prior
// KL averaged across paragraphs.
KlReport kl_report(const trainer::Checkpoint& ck,
                   const std::string& corpus_dir);

struct BoundaryStats {
  double rms_jump_db = 0.0;
  double centroid_jump_hz = 0.0;
};

// Compare 50 ms windows either side of each boundary sample index.
std::vector<BoundaryStats> boundary_continuity(
    const std::vector<double>& wave, const std::vector<long>& boundaries,
    const dsp::SpectrogramConfig& cfg);

}  // namespace paratts::evalkit

#endif  // PARATTS_EVALKIT_HPP_
