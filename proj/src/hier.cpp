#include "paratts/hier.hpp"

#include <numeric>

#include "paratts/errors.hpp"

namespace paratts::hier {

int Segmentation::total() const {
  return std::accumulate(child_counts.begin(), child_counts.end(), 0);
}

void Segmentation::validate() const {
  for (int c : child_counts)
    if (c < 1) throw DomainError("segmentation: child count must be >= 1");
}

bool nest_check(const Segmentation& fine, const Segmentation& coarse) {
  for (int c : coarse.child_counts)
    if (c < 1) return false;
  for (int c : fine.child_counts)
    if (c < 1) return false;
  return coarse.total() == fine.size();
}

Mat length_regulate(const Mat& seq, const Segmentation& durations) {
  durations.validate();
  if (seq.rows() != durations.size())
    throw ShapeError("length_regulate: " + std::to_string(seq.rows()) +
                     " units vs " + std::to_string(durations.size()) +
                     " durations");
  Mat out(durations.total(), seq.cols());
  int r = 0;
  for (int j = 0; j < durations.size(); ++j)
    for (int k = 0; k < durations.child_counts[j]; ++k) out.row(r++) = seq.row(j);
  return out;
}

Var length_regulate(Var seq, const Segmentation& durations) {
  durations.validate();
  if (seq.tape->val(seq).rows() != durations.size())
    throw ShapeError("length_regulate: unit count vs durations mismatch");
  return ag::repeat_rows(seq, durations.child_counts);
}

Var attention_pool(nn::Ctx& c, const std::string& prefix, Var seq,
                   const Segmentation& seg, int width,
                   const AttentionPoolOptions& opts) {
  if (seg.total() != static_cast<int>(c.tape().val(seq).rows()))
    throw ShapeError("attention_pool: segmentation sum " +
                     std::to_string(seg.total()) + " vs sequence length " +
                     std::to_string(c.tape().val(seq).rows()));
  Var ctx_states =
      opts.identity_context ? seq : nn::bigru(c, prefix + "/gru", seq, width, width);
  Var scores = nn::linear(c, prefix + "/score", ctx_states, width, 1);
  std::vector<Var> pooled;
  pooled.reserve(seg.size());
  int r = 0;
  for (int j = 0; j < seg.size(); ++j) {
    int n = seg.child_counts[j];
    Var s = ag::transpose(ag::slice_rows(scores, r, n));  // 1 x n
    Var w = ag::softmax_rows(s);
    pooled.push_back(ag::matmul(w, ag::slice_rows(ctx_states, r, n)));
    r += n;
  }
  return ag::concat_rows(pooled);
}

Segmentation compose(const Segmentation& coarse_to_mid,
                     const Segmentation& mid_to_fine) {
  if (coarse_to_mid.total() != mid_to_fine.size())
    throw ShapeError("compose: totals do not chain");
  Segmentation out;
  int m = 0;
  for (int c : coarse_to_mid.child_counts) {
    int total = 0;
    for (int k = 0; k < c; ++k) total += mid_to_fine.child_counts[m++];
    out.child_counts.push_back(total);
  }
  return out;
}

}  // namespace paratts::hier
