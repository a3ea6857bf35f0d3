#include "paratts/nn.hpp"

#include <cmath>
#include <functional>

#include "paratts/errors.hpp"

namespace paratts::nn {

namespace {
uint64_t name_hash(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}
}  // namespace

Mat& ParamStore::get_or_init(const std::string& name, int rows, int cols,
                             double scale) {
  auto it = tensors.find(name);
  if (it != tensors.end()) {
    if (it->second.rows() != rows || it->second.cols() != cols)
      throw ShapeError("param shape mismatch for " + name);
    return it->second;
  }
  Rng rng(mix_seed(init_seed, name_hash(name)));
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return tensors.emplace(name, std::move(m)).first->second;
}

Mat& ParamStore::get_or_zeros(const std::string& name, int rows, int cols) {
  auto it = tensors.find(name);
  if (it != tensors.end()) return it->second;
  return tensors.emplace(name, Mat::Zero(rows, cols)).first->second;
}

Mat& ParamStore::get_or_const(const std::string& name, int rows, int cols,
                              double fill) {
  auto it = tensors.find(name);
  if (it != tensors.end()) return it->second;
  return tensors.emplace(name, Mat::Constant(rows, cols, fill)).first->second;
}

Var Ctx::param(const std::string& name, int rows, int cols, double scale) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  Mat& m = store_.get_or_init(name, rows, cols, scale);
  bool trainable = store_.frozen.count(name) == 0;
  Var v = tape_.leaf(m, trainable);
  bound_.emplace(name, v);
  return v;
}

Var Ctx::param_zeros(const std::string& name, int rows, int cols) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  Mat& m = store_.get_or_zeros(name, rows, cols);
  bool trainable = store_.frozen.count(name) == 0;
  Var v = tape_.leaf(m, trainable);
  bound_.emplace(name, v);
  return v;
}

Var Ctx::param_ones(const std::string& name, int rows, int cols) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  Mat& m = store_.get_or_const(name, rows, cols, 1.0);
  bool trainable = store_.frozen.count(name) == 0;
  Var v = tape_.leaf(m, trainable);
  bound_.emplace(name, v);
  return v;
}

Var Ctx::frozen(const std::string& name, int rows, int cols, double scale) {
  store_.frozen.insert(name);
  return param(name, rows, cols, scale);
}

Var linear(Ctx& c, const std::string& prefix, Var x, int in, int out,
           bool bias) {
  Var w = c.param(prefix + "/W", in, out, 1.0 / std::sqrt(double(in)));
  Var y = ag::matmul(x, w);
  if (bias) {
    Var b = c.param_zeros(prefix + "/b", 1, out);
    y = ag::add(y, ag::broadcast_rows(b, static_cast<int>(c.tape().val(y).rows())));
  }
  return y;
}

Var conv1d(Ctx& c, const std::string& prefix, Var x, int in, int out, int k,
           int dilation, bool bias) {
  Var w = c.param(prefix + "/W", k * in, out,
                  1.0 / std::sqrt(double(k * in)));
  int half = (k - 1) / 2;
  Var acc;
  for (int j = 0; j < k; ++j) {
    Var wj = ag::slice_rows(w, j * in, in);
    int offset = (half - j) * dilation;  // tap j reads x[i + (j-half)*dil]
    Var xs = offset == 0 ? x : ag::shift_rows(x, offset);
    Var term = ag::matmul(xs, wj);
    acc = acc.valid() ? ag::add(acc, term) : term;
  }
  if (bias) {
    Var b = c.param_zeros(prefix + "/b", 1, out);
    acc = ag::add(acc,
                  ag::broadcast_rows(b, static_cast<int>(c.tape().val(acc).rows())));
  }
  return acc;
}

Var embedding(Ctx& c, const std::string& name, const std::vector<int>& ids,
              int vocab, int width) {
  for (int id : ids)
    if (id < 0 || id >= vocab)
      throw DomainError("embedding " + name + ": id " + std::to_string(id) +
                        " outside vocab " + std::to_string(vocab));
  Var table = c.param(name, vocab, width, 1.0 / std::sqrt(double(width)));
  return ag::gather_rows(table, ids);
}

Var embedding_frozen(Ctx& c, const std::string& name,
                     const std::vector<int>& ids, int vocab, int width) {
  for (int id : ids)
    if (id < 0 || id >= vocab)
      throw DomainError("embedding " + name + ": id " + std::to_string(id) +
                        " outside vocab " + std::to_string(vocab));
  Var table = c.frozen(name, vocab, width, 1.0 / std::sqrt(double(width)));
  return ag::gather_rows(table, ids);
}

Var layer_norm(Ctx& c, const std::string& prefix, Var x, int width) {
  const double eps = 1e-6;
  int n = static_cast<int>(c.tape().val(x).rows());
  Var mu = ag::rowwise_mean(x);
  Var centered = ag::sub(x, ag::broadcast_cols(mu, width));
  Var var = ag::rowwise_mean(ag::square(centered));
  Var denom = ag::broadcast_cols(ag::sqrt_(ag::add_scalar(var, eps)), width);
  Var norm = ag::div(centered, denom);
  Var g = c.param_ones(prefix + "/g", 1, width);
  Var b = c.param_zeros(prefix + "/b", 1, width);
  Var y = ag::add(ag::mul(norm, ag::broadcast_rows(g, n)),
                  ag::broadcast_rows(b, n));
  return y;
}

namespace {
// One GRU direction. xproj = x*Wx + bx precomputed (N x 3W).
Var gru_direction(Ctx& c, const std::string& prefix, Var x, int in, int w) {
  Tape& t = c.tape();
  int n = static_cast<int>(t.val(x).rows());
  Var wx = c.param(prefix + "/Wx", in, 3 * w, 1.0 / std::sqrt(double(in)));
  Var wh = c.param(prefix + "/Wh", w, 3 * w, 1.0 / std::sqrt(double(w)));
  Var bx = c.param_zeros(prefix + "/b", 1, 3 * w);
  Var xproj = ag::add(ag::matmul(x, wx), ag::broadcast_rows(bx, n));
  Var h = t.constant(Mat::Zero(1, w));
  std::vector<Var> states;
  states.reserve(n);
  for (int i = 0; i < n; ++i) {
    Var xp = ag::slice_rows(xproj, i, 1);
    Var hp = ag::matmul(h, wh);
    Var r = ag::sigmoid_(ag::add(ag::slice_cols(xp, 0, w), ag::slice_cols(hp, 0, w)));
    Var u = ag::sigmoid_(
        ag::add(ag::slice_cols(xp, w, w), ag::slice_cols(hp, w, w)));
    Var cand_h = ag::matmul(ag::mul(r, h), ag::slice_cols(wh, 2 * w, w));
    // note: slice_cols(wh,...) inside matmul needs wh sliced before matmul
    Var cand = ag::tanh_(ag::add(ag::slice_cols(xp, 2 * w, w), cand_h));
    Var one_minus_u = ag::sub(t.constant(Mat::Ones(1, w)), u);
    h = ag::add(ag::mul(u, h), ag::mul(one_minus_u, cand));
    states.push_back(h);
  }
  return ag::concat_rows(states);
}
}  // namespace

Var gru(Ctx& c, const std::string& prefix, Var x, int in, int width) {
  return gru_direction(c, prefix, x, in, width);
}

Var bigru(Ctx& c, const std::string& prefix, Var x, int in, int width) {
  Var fwd = gru_direction(c, prefix + "/fwd", x, in, width);
  Var bwd = ag::reverse_rows(
      gru_direction(c, prefix + "/bwd", ag::reverse_rows(x), in, width));
  return ag::add(fwd, bwd);
}

Var fft_block(Ctx& c, const std::string& prefix, Var x, int width, int heads,
              int ffn_hidden, int kernel) {
  Tape& t = c.tape();
  int n = static_cast<int>(t.val(x).rows());
  if (width % heads != 0) throw ShapeError("fft_block: width % heads != 0");
  int dh = width / heads;
  Var qkv = linear(c, prefix + "/qkv", x, width, 3 * width);
  std::vector<Var> head_outs;
  double sc = 1.0 / std::sqrt(double(dh));
  for (int h = 0; h < heads; ++h) {
    Var q = ag::slice_cols(qkv, h * dh, dh);
    Var k = ag::slice_cols(qkv, width + h * dh, dh);
    Var v = ag::slice_cols(qkv, 2 * width + h * dh, dh);
    Var scores = ag::scale(ag::matmul(q, ag::transpose(k)), sc);
    Var attn = ag::softmax_rows(scores);
    head_outs.push_back(ag::matmul(attn, v));
  }
  Var attn_out =
      linear(c, prefix + "/proj", ag::concat_cols(head_outs), width, width);
  Var y = layer_norm(c, prefix + "/ln1", ag::add(x, attn_out), width);
  Var f = conv1d(c, prefix + "/ffn1", y, width, ffn_hidden, kernel);
  f = ag::leaky_relu(f, 0.0);  // plain ReLU
  f = conv1d(c, prefix + "/ffn2", f, ffn_hidden, width, kernel);
  Var out = layer_norm(c, prefix + "/ln2", ag::add(y, f), width);
  (void)n;
  return out;
}

}  // namespace paratts::nn
