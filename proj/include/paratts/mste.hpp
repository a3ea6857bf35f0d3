#ifndef PARATTS_MSTE_HPP_
#define PARATTS_MSTE_HPP_

#include <optional>
#include <vector>

#include "paratts/corpus.hpp"
#include "paratts/latents.hpp"
#include "paratts/model_config.hpp"
#include "paratts/nn.hpp"
#include "paratts/rng.hpp"

namespace paratts::mste {

using ag::Var;
using hier::HiddenSeq;
using hier::LevelId;
using hier::Segmentation;

// Per-level text hiddens; no frame-level entry by design.
struct TextFeaturesVar {
  Var phoneme_hidden;
  Var word_hidden;
  Var sentence_hidden;
  Var paragraph_hidden;
};

struct PriorChainResult {
  std::vector<LatentStatsVar> stats;     // visit order L5..L1
  std::vector<LatentSampleVar> samples;  // filled in free-running mode only
};

// Text tower + recursive coarse-to-fine prior chain + duration predictor.
class Mste {
 public:
  explicit Mste(const ModelConfig& cfg) : cfg_(cfg) {}

  TextFeaturesVar embed_text(nn::Ctx& c, const corpus::Paragraph& p) const;

  // One recursion step: regulate (s_prev + adapted z_prev) to the finer
  // length, condition on h_txt when present, run the level's transformer
  // blocks, and emit (s_i, prior stats).
  std::pair<HiddenSeq, LatentStatsVar> prior_step(
      nn::Ctx& c, const HiddenSeq& s_prev, const LatentSampleVar& z_prev,
      const Segmentation& seg_to_finer, std::optional<Var> h_txt,
      LevelId out_level) const;

  // Teacher-forced: z_prev taken from posterior samples (index 0 = L1 ..
  // index 4 = L5); missing samples are a contract error.
  PriorChainResult run_prior_chain_teacher(
      nn::Ctx& c, const TextFeaturesVar& text, const corpus::LevelSegs& segs,
      const std::vector<LatentSampleVar>& posterior_samples) const;

  // Free-running: z_i ~ N(u_i, (temperature*sigma_i)^2) with the given rng.
  PriorChainResult run_prior_chain_free(nn::Ctx& c, const TextFeaturesVar& text,
                                        const corpus::LevelSegs& segs,
                                        double temperature, Rng& rng) const;

  // Per-phoneme log-durations (P x 1).
  Var predict_durations(nn::Ctx& c, Var phoneme_hidden) const;

  // Inference conversion: max(1, round-half-even(exp(x))).
  static int duration_frames_from_log(double log_duration);

  const ModelConfig& config() const { return cfg_; }

 private:
  ModelConfig cfg_;
};

}  // namespace paratts::mste

#endif  // PARATTS_MSTE_HPP_
