#ifndef PARATTS_MODEL_CONFIG_HPP_
#define PARATTS_MODEL_CONFIG_HPP_

#include <array>
#include <string>
#include <vector>

#include "paratts/dsp.hpp"

namespace paratts {

// Hyperparameters shared by the three towers and the discriminators.
struct ModelConfig {
  int hidden_width = 96;
  int latent_width = 16;
  int frame_enc_layers = 8;
  int frame_enc_kernel = 5;
  int phoneme_vocab = 64;
  int subword_vocab = 256;

  // FFT blocks per prior level, ordered frame -> paragraph.
  std::array<int, 5> prior_blocks{4, 4, 3, 3, 2};
  int fft_heads = 2;
  int ffn_hidden = 192;
  int ffn_kernel = 3;

  // decoder
  std::vector<int> vocoder_factors;  // product must equal the profile hop
  int vocoder_channels = 32;
  int vocoder_noise_channels = 4;
  std::string fusion = "add";  // "add" (Eq.-style) or "concat"
  bool msd_enabled = true;
  bool text_in_msae = false;

  // discriminators
  std::vector<int> periods{2, 3, 5, 7, 11};
  std::vector<dsp::StftResolution> resolutions = dsp::default_resolutions();

  double sigma_floor = 1e-4;

  void validate(int hop) const;

  static std::vector<int> default_factors(int hop);
  static ModelConfig desk_defaults(int hop);
  // Tiny widths for gradient checks and structural sweeps.
  static ModelConfig micro(int hop);
};

}  // namespace paratts

#endif  // PARATTS_MODEL_CONFIG_HPP_
