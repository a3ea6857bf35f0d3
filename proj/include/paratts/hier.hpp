#ifndef PARATTS_HIER_HPP_
#define PARATTS_HIER_HPP_

#include <string>
#include <vector>

#include "paratts/ag.hpp"
#include "paratts/nn.hpp"

namespace paratts::hier {

using ag::Mat;
using ag::Var;

// Grammatical levels, fine to coarse.
enum class LevelId { L1_Frame = 1, L2_Phoneme, L3_Word, L4_Sentence, L5_Paragraph };

inline const char* level_name(LevelId l) {
  switch (l) {
    case LevelId::L1_Frame: return "frame";
    case LevelId::L2_Phoneme: return "phoneme";
    case LevelId::L3_Word: return "word";
    case LevelId::L4_Sentence: return "sentence";
    case LevelId::L5_Paragraph: return "paragraph";
  }
  return "?";
}

// For each coarse unit, how many fine units it spans.
struct Segmentation {
  std::vector<int> child_counts;

  int total() const;
  int size() const { return static_cast<int>(child_counts.size()); }
  void validate() const;  // all counts >= 1
};

// A level-tagged hidden sequence (length x width).
struct HiddenSeq {
  Var h;
  LevelId level;
};

// True iff coarse boundaries, expressed in fine units, land on fine unit
// boundaries — with positive counts this reduces to the totals matching.
bool nest_check(const Segmentation& fine, const Segmentation& coarse);

// Length-Regulator upsampling: unit j repeated durations[j] times.
Mat length_regulate(const Mat& seq, const Segmentation& durations);
Var length_regulate(Var seq, const Segmentation& durations);

struct AttentionPoolOptions {
  bool identity_context = false;  // skip the BiGRU (tests, ablations)
};

// Downsampling: BiGRU contextualization then per-segment softmax-weighted
// convex combination. Output length = number of segments.
Var attention_pool(nn::Ctx& c, const std::string& prefix, Var seq,
                   const Segmentation& seg, int width,
                   const AttentionPoolOptions& opts = {});

// Compose durations: counts of grandchildren per coarse unit.
Segmentation compose(const Segmentation& coarse_to_mid,
                     const Segmentation& mid_to_fine);

}  // namespace paratts::hier

#endif  // PARATTS_HIER_HPP_
