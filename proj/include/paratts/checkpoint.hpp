#ifndef PARATTS_CHECKPOINT_HPP_
#define PARATTS_CHECKPOINT_HPP_

#include <map>
#include <string>

#include "paratts/model_config.hpp"
#include "paratts/nn.hpp"
#include "paratts/schedule.hpp"

namespace paratts::trainer {

// Self-contained training snapshot: parameters, optimizer moments, the model
// and schedule configuration needed to rebuild the towers, and the RNG state.
// Binary format with a versioned magic; round-trips bit-exactly.
struct Checkpoint {
  static constexpr uint32_t kVersion = 1;

  long step = 0;
  long epoch = 0;
  std::string dsp_profile = "desk";
  ModelConfig model;
  schedule::StageConfig stages;
  nn::ParamStore params;
  std::map<std::string, ag::Mat> adam_m, adam_v;
  long adam_t_gen = 0, adam_t_disc = 0;
  double lr_scale = 1.0;  // epoch-decay accumulator
  std::string rng_state;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace paratts::trainer

#endif  // PARATTS_CHECKPOINT_HPP_
