#include "paratts/schedule.hpp"

#include <algorithm>

#include "paratts/errors.hpp"

namespace paratts::schedule {

void StageConfig::validate() const {
  if (step_w < 0) throw ConfigError("schedule: step_w < 0");
  if (stage2_len < 0) throw ConfigError("schedule: stage2_len < 0");
  if (lambda_slope <= 0) throw ConfigError("schedule: lambda_slope <= 0");
  if (lambda_cap != 1.0) throw ConfigError("schedule: lambda_cap must be 1.0");
}

double lambda_kl(long step_g, const StageConfig& cfg) {
  if (step_g < 0) throw DomainError("lambda_kl: negative step");
  if (step_g <= cfg.step_w) return cfg.lambda_stage1;
  return std::min(cfg.lambda_cap, cfg.lambda_slope * (step_g - cfg.step_w));
}

int stage_of(long step_g, const StageConfig& cfg) {
  if (step_g < 0) throw DomainError("stage_of: negative step");
  if (step_g < cfg.step_w) return 1;
  if (step_g < cfg.step_w + cfg.stage2_len) return 2;
  return 3;
}

std::set<std::string> active_loss_set(int stage) {
  switch (stage) {
    case 1:
    case 2:
      return {"L_s2", "L_d", "L_kl"};
    case 3:
      return {"L_g", "L_disc", "L_s1", "L_m", "L_kl", "L_d"};
    default:
      throw DomainError("active_loss_set: stage must be 1, 2 or 3");
  }
}

}  // namespace paratts::schedule
