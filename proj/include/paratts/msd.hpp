#ifndef PARATTS_MSD_HPP_
#define PARATTS_MSD_HPP_

#include <vector>

#include "paratts/corpus.hpp"
#include "paratts/latents.hpp"
#include "paratts/model_config.hpp"
#include "paratts/nn.hpp"
#include "paratts/rng.hpp"

namespace paratts::msd {

using ag::Var;
using hier::HiddenSeq;

// Decoder: fuse the five latent levels into a frame-level hidden, decode to
// waveform, and predict the linear spectrogram in parallel; also hosts the
// period and resolution discriminators.
class Msd {
 public:
  explicit Msd(const ModelConfig& cfg) : cfg_(cfg) {}

  // Additive fusion with per-level bias-free width adapters (superposition in
  // each z holds exactly); fusion="concat" switches to concatenation +
  // bias-free projection. With msd_enabled=false only z_L1 passes through.
  // samples ordered L1..L5. Output: frames x hidden_width.
  HiddenSeq fuse_latents(nn::Ctx& c,
                         const std::vector<LatentSampleVar>& samples,
                         const corpus::LevelSegs& segs) const;

  // Upsampling vocoder; output length = frames * hop exactly, tanh-bounded.
  // noise must be frames x noise_channels (see make_vocoder_noise).
  Var vocode(nn::Ctx& c, Var h, Var noise, int hop) const;

  Var make_vocoder_noise(ag::Tape& t, int frames, uint64_t seed) const;

  // Parallel branch: one affine map per frame to the profile's bin count.
  Var project_linear(nn::Ctx& c, Var h, int bins) const;

  // One score sequence per period branch and per resolution branch.
  std::vector<Var> discriminate(nn::Ctx& c, Var wave) const;

  // Trailing-crop both waves to the shorter length.
  static void crop_to_min(ag::Mat& real, ag::Mat& fake);

  const ModelConfig& config() const { return cfg_; }

 private:
  ModelConfig cfg_;
};

}  // namespace paratts::msd

#endif  // PARATTS_MSD_HPP_
