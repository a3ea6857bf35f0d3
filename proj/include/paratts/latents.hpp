#ifndef PARATTS_LATENTS_HPP_
#define PARATTS_LATENTS_HPP_

#include <vector>

#include "paratts/ag.hpp"
#include "paratts/hier.hpp"

namespace paratts {

enum class StatsSource { posterior, prior };

// Per-level Gaussian stats: length x latent-width mean and (positive) std.
struct LatentStats {
  ag::Mat mean;
  ag::Mat std;
  hier::LevelId level = hier::LevelId::L1_Frame;
  StatsSource source = StatsSource::posterior;
};

struct LatentSample {
  ag::Mat z;
  hier::LevelId level = hier::LevelId::L1_Frame;
};

// Graph-side counterparts used while a tape is alive.
struct LatentStatsVar {
  ag::Var mean;
  ag::Var std;
  hier::LevelId level = hier::LevelId::L1_Frame;
  StatsSource source = StatsSource::posterior;
};

struct LatentSampleVar {
  ag::Var z;
  hier::LevelId level = hier::LevelId::L1_Frame;
};

}  // namespace paratts

#endif  // PARATTS_LATENTS_HPP_
