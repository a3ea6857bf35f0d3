#ifndef PARATTS_SCHEDULE_HPP_
#define PARATTS_SCHEDULE_HPP_

#include <set>
#include <string>

namespace paratts::schedule {

// Three-stage training schedule. Stage intervals are half-open with stage 2
// beginning at step_w; lambda_kl keeps the stage-1 value at step_w itself so
// no step ever trains with a zero KL weight.
struct StageConfig {
  long step_w = 10000;       // length of stage 1
  long stage2_len = 30000;   // length of stage 2
  double lambda_slope = 1e-5;  // per-step increase after step_w
  double lambda_cap = 1.0;
  double lambda_stage1 = 1e-5;

  void validate() const;

  static StageConfig paper_defaults() { return StageConfig{}; }
  // Same shape, 30x faster; acceptance runs finish in minutes.
  static StageConfig desk_defaults() {
    StageConfig c;
    c.step_w = 300;
    c.stage2_len = 900;
    c.lambda_slope = 1.0 / 3000.0;
    return c;
  }
};

double lambda_kl(long step_g, const StageConfig& cfg);
int stage_of(long step_g, const StageConfig& cfg);
std::set<std::string> active_loss_set(int stage);

}  // namespace paratts::schedule

#endif  // PARATTS_SCHEDULE_HPP_
