#include "paratts/losses.hpp"

#include <cmath>

#include "json.hpp"
#include "paratts/errors.hpp"

using ordered_json = nlohmann::ordered_json;

namespace paratts::losses {

std::string LossBreakdown::to_json_line() const {
  ordered_json j;
  j["step"] = step;
  j["stage"] = stage;
  j["lambda_kl"] = lambda_kl;
  j["l_kl_per_level"] = l_kl_per_level;
  auto opt = [](const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
  };
  j["l_g"] = opt(l_g);
  j["l_disc"] = opt(l_disc);
  j["l_s1"] = opt(l_s1);
  j["l_s2"] = opt(l_s2);
  j["l_m"] = opt(l_m);
  j["l_d"] = l_d;
  j["l_kl"] = l_kl;
  j["l_tot"] = l_tot;
  return j.dump();
}

LossBreakdown LossBreakdown::from_json_line(const std::string& line) {
  ordered_json j = ordered_json::parse(line);
  LossBreakdown b;
  b.step = j.at("step").get<long>();
  b.stage = j.at("stage").get<int>();
  b.lambda_kl = j.at("lambda_kl").get<double>();
  auto arr = j.at("l_kl_per_level");
  for (int i = 0; i < 5; ++i) b.l_kl_per_level[i] = arr.at(i).get<double>();
  auto opt = [&j](const char* key) -> std::optional<double> {
    if (j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
  };
  b.l_g = opt("l_g");
  b.l_disc = opt("l_disc");
  b.l_s1 = opt("l_s1");
  b.l_s2 = opt("l_s2");
  b.l_m = opt("l_m");
  b.l_d = j.at("l_d").get<double>();
  b.l_kl = j.at("l_kl").get<double>();
  b.l_tot = j.at("l_tot").get<double>();
  return b;
}

double gaussian_kl(const LatentStats& q, const LatentStats& p) {
  if (q.mean.rows() != p.mean.rows() || q.mean.cols() != p.mean.cols())
    throw ShapeError("gaussian_kl: stats shape mismatch");
  if ((q.std.array() <= 0).any() || (p.std.array() <= 0).any())
    throw DomainError("gaussian_kl: non-positive std");
  auto sq = q.std.array();
  auto sp = p.std.array();
  auto term = (sp / sq).log() +
              (sq.square() + (q.mean.array() - p.mean.array()).square()) /
                  (2.0 * sp.square()) -
              0.5;
  return term.mean();
}

double combine_kl(const std::array<double, 5>& levels, const KlWeights& w) {
  double total = 0.0;
  for (int i = 0; i < 5; ++i) {
    if (!(levels[i] >= 0.0))
      throw DomainError("combine_kl: negative or NaN level KL");
    total += w.alpha[i] * levels[i];
  }
  return total;
}

std::pair<double, double> adversarial_losses(
    const std::vector<ag::Mat>& scores_real,
    const std::vector<ag::Mat>& scores_fake) {
  if (scores_real.size() != scores_fake.size())
    throw ShapeError("adversarial_losses: branch count mismatch");
  if (scores_real.empty()) throw ShapeError("adversarial_losses: no branches");
  double l_g = 0.0, l_disc = 0.0;
  for (size_t i = 0; i < scores_real.size(); ++i) {
    const auto r = scores_real[i].array();
    const auto f = scores_fake[i].array();
    l_disc += (r - 1.0).square().mean() + f.square().mean();
    l_g += (f - 1.0).square().mean();
  }
  double n = static_cast<double>(scores_real.size());
  return {l_g / n, l_disc / n};
}

double mel_l1(const std::vector<double>& pred_wave,
              const std::vector<double>& target_wave,
              const dsp::SpectrogramConfig& cfg) {
  if (pred_wave.empty() || target_wave.empty())
    throw DomainError("mel_l1: empty input");
  size_t n = std::min(pred_wave.size(), target_wave.size());
  std::vector<double> a(pred_wave.begin(), pred_wave.begin() + n);
  std::vector<double> b(target_wave.begin(), target_wave.begin() + n);
  dsp::Spec ma = dsp::mel_spectrogram(dsp::stft_magnitude(a, cfg), cfg);
  dsp::Spec mb = dsp::mel_spectrogram(dsp::stft_magnitude(b, cfg), cfg);
  return (ma - mb).cwiseAbs().mean();
}

double duration_l2(const std::vector<double>& pred_logdur,
                   const std::vector<double>& target_logdur) {
  if (pred_logdur.empty() || pred_logdur.size() != target_logdur.size())
    throw ShapeError("duration_l2: size mismatch or empty");
  double s = 0.0;
  for (size_t i = 0; i < pred_logdur.size(); ++i) {
    double d = pred_logdur[i] - target_logdur[i];
    s += d * d;
  }
  return s / pred_logdur.size();
}

double linear_spec_loss(const dsp::Spec& pred, const dsp::Spec& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ShapeError("linear_spec_loss: shape mismatch");
  dsp::Spec p = pred.cwiseMax(0.0);
  double sc = (target - p).norm() / std::max(target.norm(), 1e-12);
  double mag = (target.array().max(1e-7).log() - p.array().max(1e-7).log())
                   .abs()
                   .mean();
  return sc + mag;
}

double total_loss(int stage, const TotalLossParts& parts, double lambda_kl) {
  auto need = [stage](const std::optional<double>& v, const char* name) {
    if (!v)
      throw ContractError(std::string("total_loss: stage ") +
                          std::to_string(stage) + " requires " + name);
    return *v;
  };
  switch (stage) {
    case 1:
    case 2:
      return kStage12CoeffS2 * need(parts.l_s2, "L_s2") +
             kStage12CoeffD * need(parts.l_d, "L_d") +
             lambda_kl * need(parts.l_kl, "L_kl");
    case 3:
      return kStage3CoeffG * need(parts.l_g, "L_g") +
             kStage3CoeffS1 * need(parts.l_s1, "L_s1") +
             kStage3CoeffM * need(parts.l_m, "L_m") +
             lambda_kl * need(parts.l_kl, "L_kl") +
             kStage3CoeffD * need(parts.l_d, "L_d");
    default:
      throw DomainError("total_loss: stage must be 1, 2 or 3");
  }
}

}  // namespace paratts::losses
