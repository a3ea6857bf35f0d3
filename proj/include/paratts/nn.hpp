#ifndef PARATTS_NN_HPP_
#define PARATTS_NN_HPP_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "paratts/ag.hpp"
#include "paratts/rng.hpp"

namespace paratts::nn {

using ag::Mat;
using ag::Tape;
using ag::Var;

// Named parameter tensors. std::map keeps iteration order stable, which the
// checkpoint format and the parameter-hash tests rely on.
struct ParamStore {
  std::map<std::string, Mat> tensors;
  std::set<std::string> frozen;  // excluded from optimizer updates
  uint64_t init_seed = 0;

  bool has(const std::string& name) const { return tensors.count(name) != 0; }

  // Creates with N(0, scale^2) entries on first use, seeded by (init_seed,
  // name) so creation order does not matter.
  Mat& get_or_init(const std::string& name, int rows, int cols, double scale);
  Mat& get_or_zeros(const std::string& name, int rows, int cols);
  Mat& get_or_const(const std::string& name, int rows, int cols, double fill);
};

// Per-graph binding of store tensors to tape leaves. One Ctx per Tape.
class Ctx {
 public:
  Ctx(Tape& tape, ParamStore& store) : tape_(tape), store_(store) {}

  Tape& tape() { return tape_; }
  ParamStore& store() { return store_; }

  Var param(const std::string& name, int rows, int cols, double scale);
  Var param_zeros(const std::string& name, int rows, int cols);
  Var param_ones(const std::string& name, int rows, int cols);
  // Frozen tensor: bound without gradient tracking.
  Var frozen(const std::string& name, int rows, int cols, double scale);

  const std::map<std::string, Var>& bound() const { return bound_; }

 private:
  Tape& tape_;
  ParamStore& store_;
  std::map<std::string, Var> bound_;
};

// ----- layers (all shapes are length x channels) -----

Var linear(Ctx& c, const std::string& prefix, Var x, int in, int out,
           bool bias = true);

// Same-padded 1D convolution over rows. Weight layout: (k*in) x out.
Var conv1d(Ctx& c, const std::string& prefix, Var x, int in, int out, int k,
           int dilation = 1, bool bias = true);

Var embedding(Ctx& c, const std::string& name, const std::vector<int>& ids,
              int vocab, int width);
Var embedding_frozen(Ctx& c, const std::string& name,
                     const std::vector<int>& ids, int vocab, int width);

Var layer_norm(Ctx& c, const std::string& prefix, Var x, int width);

// Unidirectional GRU, h0 = 0. Returns the full state sequence.
Var gru(Ctx& c, const std::string& prefix, Var x, int in, int width);
// Bidirectional GRU with the two directions summed (widths stay uniform).
Var bigru(Ctx& c, const std::string& prefix, Var x, int in, int width);

// FastSpeech-style feed-forward transformer block: multi-head self-attention
// and a two-layer 1D-conv feed-forward, both with residual + layer norm.
Var fft_block(Ctx& c, const std::string& prefix, Var x, int width, int heads,
              int ffn_hidden, int kernel);

}  // namespace paratts::nn

#endif  // PARATTS_NN_HPP_
