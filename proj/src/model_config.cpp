#include "paratts/model_config.hpp"

#include <set>

#include "paratts/errors.hpp"

namespace paratts {

void ModelConfig::validate(int hop) const {
  if (hidden_width <= 0 || latent_width <= 0)
    throw ConfigError("model: non-positive width");
  if (hidden_width % fft_heads != 0)
    throw ConfigError("model: hidden_width must be divisible by fft_heads");
  if (frame_enc_layers <= 0 || frame_enc_kernel <= 0 || ffn_hidden <= 0)
    throw ConfigError("model: non-positive encoder size");
  for (int b : prior_blocks)
    if (b < 1) throw ConfigError("model: prior block depth < 1");
  if (fusion != "add" && fusion != "concat")
    throw ConfigError("model: fusion must be 'add' or 'concat'");
  if (vocoder_factors.empty())
    throw ConfigError("model: empty vocoder factor list");
  long prod = 1;
  for (int f : vocoder_factors) {
    if (f < 2) throw ConfigError("model: vocoder factor < 2");
    prod *= f;
  }
  if (prod != hop)
    throw ConfigError("model: vocoder factors multiply to " +
                      std::to_string(prod) + ", hop is " + std::to_string(hop));
  std::set<int> seen;
  for (int p : periods) {
    if (p < 2) throw ConfigError("model: period < 2");
    if (!seen.insert(p).second) throw ConfigError("model: duplicate period");
  }
  if (periods.empty() || resolutions.empty())
    throw ConfigError("model: empty discriminator branch list");
  if (sigma_floor <= 0) throw ConfigError("model: sigma_floor <= 0");
}

std::vector<int> ModelConfig::default_factors(int hop) {
  switch (hop) {
    case 200: return {5, 5, 8};
    case 300: return {5, 5, 4, 3};
    case 20: return {5, 4};
    default: break;
  }
  std::vector<int> out;
  int rest = hop;
  while (rest > 1) {
    int picked = 0;
    for (int d = 8; d >= 2; --d) {
      if (rest % d == 0) {
        picked = d;
        break;
      }
    }
    if (picked == 0) {  // prime remainder; take it whole
      picked = rest;
    }
    out.push_back(picked);
    rest /= picked;
  }
  if (out.empty()) throw ConfigError("model: hop must be >= 2");
  return out;
}

ModelConfig ModelConfig::desk_defaults(int hop) {
  ModelConfig cfg;
  cfg.vocoder_factors = default_factors(hop);
  cfg.validate(hop);
  return cfg;
}

ModelConfig ModelConfig::micro(int hop) {
  ModelConfig cfg;
  cfg.hidden_width = 8;
  cfg.latent_width = 4;
  cfg.frame_enc_layers = 2;
  cfg.frame_enc_kernel = 3;
  cfg.prior_blocks = {1, 1, 1, 1, 1};
  cfg.fft_heads = 2;
  cfg.ffn_hidden = 8;
  cfg.ffn_kernel = 3;
  cfg.vocoder_channels = 8;
  cfg.vocoder_noise_channels = 2;
  cfg.vocoder_factors = default_factors(hop);
  cfg.periods = {2, 3};
  cfg.resolutions = {{64, 20, 40}, {32, 10, 20}};
  cfg.validate(hop);
  return cfg;
}

}  // namespace paratts
