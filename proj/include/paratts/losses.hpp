#ifndef PARATTS_LOSSES_HPP_
#define PARATTS_LOSSES_HPP_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "paratts/dsp.hpp"
#include "paratts/latents.hpp"

namespace paratts::losses {

// Eq. 4 per-level weights, frame -> paragraph.
struct KlWeights {
  std::array<double, 5> alpha{1.0, 0.25, 0.07, 0.01, 0.005};
};

// Stage-formula coefficients, frozen to the paper's values.
inline constexpr double kStage12CoeffS2 = 2.5;
inline constexpr double kStage12CoeffD = 5.0;
inline constexpr double kStage3CoeffG = 1.0;
inline constexpr double kStage3CoeffS1 = 1.5;
inline constexpr double kStage3CoeffM = 2.5;
inline constexpr double kStage3CoeffD = 1.0;

struct LossBreakdown {
  long step = 0;
  int stage = 1;
  double lambda_kl = 0.0;
  std::array<double, 5> l_kl_per_level{};  // frame -> paragraph, unweighted
  double l_kl = 0.0;                       // Eq. 4 combination
  std::optional<double> l_g;
  std::optional<double> l_disc;
  std::optional<double> l_s1;
  std::optional<double> l_s2;
  std::optional<double> l_m;
  double l_d = 0.0;
  double l_tot = 0.0;

  std::string to_json_line() const;
  static LossBreakdown from_json_line(const std::string& line);
};

// Diagonal-Gaussian KL(q || p), mean over positions and dimensions.
double gaussian_kl(const LatentStats& q, const LatentStats& p);

double combine_kl(const std::array<double, 5>& levels, const KlWeights& w);

// Least-squares GAN objectives over per-branch score tensors.
std::pair<double, double> adversarial_losses(
    const std::vector<ag::Mat>& scores_real,
    const std::vector<ag::Mat>& scores_fake);

double mel_l1(const std::vector<double>& pred_wave,
              const std::vector<double>& target_wave,
              const dsp::SpectrogramConfig& cfg);

double duration_l2(const std::vector<double>& pred_logdur,
                   const std::vector<double>& target_logdur);

// Spectral-convergence + log-magnitude L1 on a predicted linear spectrogram
// versus the target (single native resolution; the prediction is clamped at
// zero before the log term).
double linear_spec_loss(const dsp::Spec& pred, const dsp::Spec& target);

struct TotalLossParts {
  std::optional<double> l_s2;
  std::optional<double> l_d;
  std::optional<double> l_kl;
  std::optional<double> l_g;
  std::optional<double> l_s1;
  std::optional<double> l_m;
};

double total_loss(int stage, const TotalLossParts& parts, double lambda_kl);

}  // namespace paratts::losses

#endif  // PARATTS_LOSSES_HPP_
