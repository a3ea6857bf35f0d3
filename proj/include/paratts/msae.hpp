#ifndef PARATTS_MSAE_HPP_
#define PARATTS_MSAE_HPP_

#include <optional>
#include <vector>

#include "paratts/corpus.hpp"
#include "paratts/latents.hpp"
#include "paratts/model_config.hpp"
#include "paratts/nn.hpp"

namespace paratts::msae {

using ag::Var;
using hier::HiddenSeq;
using hier::LevelId;
using hier::Segmentation;

// Posterior tower: spectrogram -> per-level Gaussian stats, coarse levels by
// attention-pooling the finer hidden state. Audio-only; the text_in_msae
// ablation below is the single exception.
class Msae {
 public:
  explicit Msae(const ModelConfig& cfg) : cfg_(cfg) {}

  // Frame-level posterior from a linear spectrogram (frames x bins).
  std::pair<HiddenSeq, LatentStatsVar> encode_frame_posterior(nn::Ctx& c,
                                                              Var spec,
                                                              int bins) const;

  // One pooling step: finer hidden -> next-coarser hidden + stats.
  std::pair<HiddenSeq, LatentStatsVar> encode_level(
      nn::Ctx& c, const HiddenSeq& h_finer, const Segmentation& seg) const;

  // Full tower. Returns stats ordered L1..L5 (lengths: frames, #phonemes,
  // #words, #sentences, 1). phoneme_text is consulted only when
  // cfg.text_in_msae is set: it is length-regulated to frames and concatenated
  // onto the frame hidden before the L1->L2 pooling.
  std::vector<LatentStatsVar> encode_all(
      nn::Ctx& c, Var spec, int bins, const corpus::LevelSegs& segs,
      std::optional<Var> phoneme_text = std::nullopt) const;

  // Reparameterization: z = u + sigma * noise.
  static LatentSampleVar sample_latent(const LatentStatsVar& stats, Var noise);

  const ModelConfig& config() const { return cfg_; }

 private:
  ModelConfig cfg_;
};

}  // namespace paratts::msae

#endif  // PARATTS_MSAE_HPP_
