#include "paratts/ag.hpp"

#include <cmath>
#include <numeric>

#include "paratts/errors.hpp"

namespace paratts::ag {

Var Tape::leaf(const Mat& v, bool requires_grad) {
  nodes_.push_back(Node{v, Mat(), nullptr, requires_grad});
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::make(Mat value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), Mat(), nullptr, requires_grad});
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

void Tape::set_backward(Var v, std::function<void()> back) {
  nodes_[v.idx].backward = std::move(back);
}

Mat& Tape::grad(Var v) {
  Node& n = nodes_[v.idx];
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accum(Var v, const Mat& g) {
  if (!nodes_[v.idx].requires_grad) return;
  grad(v) += g;
}

void Tape::backward(Var loss) {
  if (val(loss).size() != 1) throw ShapeError("backward: loss must be 1x1");
  grad(loss)(0, 0) = 1.0;
  for (int i = loss.idx; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.backward && n.grad.size() != 0) n.backward();
  }
}

namespace {

Tape& tp(Var a) { return *a.tape; }
bool rg(Var a) { return tp(a).requires_grad(a); }

void check_same_shape(Var a, Var b, const char* op) {
  const Mat& x = tp(a).val(a);
  const Mat& y = tp(b).val(b);
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                     " vs " + std::to_string(y.rows()) + "x" +
                     std::to_string(y.cols()));
}

}  // namespace

Var add(Var a, Var b) {
  check_same_shape(a, b, "add");
  Tape* t = a.tape;
  Var out = t->make(t->val(a) + t->val(b), rg(a) || rg(b));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, b, out] {
      t->accum(a, t->grad(out));
      t->accum(b, t->grad(out));
    });
  return out;
}

Var sub(Var a, Var b) {
  check_same_shape(a, b, "sub");
  Tape* t = a.tape;
  Var out = t->make(t->val(a) - t->val(b), rg(a) || rg(b));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, b, out] {
      t->accum(a, t->grad(out));
      t->accum(b, -t->grad(out));
    });
  return out;
}

Var mul(Var a, Var b) {
  check_same_shape(a, b, "mul");
  Tape* t = a.tape;
  Var out = t->make(t->val(a).cwiseProduct(t->val(b)), rg(a) || rg(b));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, b, out] {
      t->accum(a, t->grad(out).cwiseProduct(t->val(b)));
      t->accum(b, t->grad(out).cwiseProduct(t->val(a)));
    });
  return out;
}

Var div(Var a, Var b) {
  check_same_shape(a, b, "div");
  Tape* t = a.tape;
  Var out = t->make(t->val(a).cwiseQuotient(t->val(b)), rg(a) || rg(b));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, b, out] {
      t->accum(a, t->grad(out).cwiseQuotient(t->val(b)));
      t->accum(b, -t->grad(out)
                       .cwiseProduct(t->val(a))
                       .cwiseQuotient(t->val(b).cwiseProduct(t->val(b))));
    });
  return out;
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double s) {
  Tape* t = a.tape;
  Var out = t->make(t->val(a) * s, rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out, s] { t->accum(a, t->grad(out) * s); });
  return out;
}

Var add_scalar(Var a, double c) {
  Tape* t = a.tape;
  Var out = t->make(t->val(a).array() + c, rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out] { t->accum(a, t->grad(out)); });
  return out;
}

Var square(Var a) { return mul(a, a); }

Var abs_(Var a) {
  Tape* t = a.tape;
  Var out = t->make(t->val(a).cwiseAbs(), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out] {
      Mat sgn = t->val(a).unaryExpr(
          [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
      t->accum(a, t->grad(out).cwiseProduct(sgn));
    });
  return out;
}

Var sqrt_(Var a) {
  Tape* t = a.tape;
  Var out = t->make(t->val(a).cwiseSqrt(), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out] {
      t->accum(a, (t->grad(out).array() / (2.0 * t->val(out).array())).matrix());
    });
  return out;
}

Var exp_(Var a) {
  Tape* t = a.tape;
  Var out = t->make(t->val(a).array().exp(), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out] {
      t->accum(a, t->grad(out).cwiseProduct(t->val(out)));
    });
  return out;
}

Var log_(Var a) {
  Tape* t = a.tape;
  Var out = t->make(t->val(a).array().log(), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out] {
      t->accum(a, t->grad(out).cwiseQuotient(t->val(a)));
    });
  return out;
}

Var tanh_(Var a) {
  Tape* t = a.tape;
  Var out = t->make(t->val(a).array().tanh(), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out] {
      Mat d = (1.0 - t->val(out).array().square()).matrix();
      t->accum(a, t->grad(out).cwiseProduct(d));
    });
  return out;
}

Var sigmoid_(Var a) {
  Tape* t = a.tape;
  Mat v = t->val(a).unaryExpr([](double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
  });
  Var out = t->make(std::move(v), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out] {
      Mat d = (t->val(out).array() * (1.0 - t->val(out).array())).matrix();
      t->accum(a, t->grad(out).cwiseProduct(d));
    });
  return out;
}

Var softplus(Var a) {
  Tape* t = a.tape;
  Mat v = t->val(a).unaryExpr([](double x) {
    return x > 30.0 ? x : std::log1p(std::exp(x));
  });
  Var out = t->make(std::move(v), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out] {
      Mat d = t->val(a).unaryExpr([](double x) {
        return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
      });
      t->accum(a, t->grad(out).cwiseProduct(d));
    });
  return out;
}

Var leaky_relu(Var a, double slope) {
  Tape* t = a.tape;
  Mat v = t->val(a).unaryExpr(
      [slope](double x) { return x >= 0 ? x : slope * x; });
  Var out = t->make(std::move(v), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out, slope] {
      Mat d = t->val(a).unaryExpr(
          [slope](double x) { return x >= 0 ? 1.0 : slope; });
      t->accum(a, t->grad(out).cwiseProduct(d));
    });
  return out;
}

Var clamp_min(Var a, double floor) {
  Tape* t = a.tape;
  Mat v = t->val(a).cwiseMax(floor);
  Var out = t->make(std::move(v), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out, floor] {
      Mat d = t->val(a).unaryExpr(
          [floor](double x) { return x > floor ? 1.0 : 0.0; });
      t->accum(a, t->grad(out).cwiseProduct(d));
    });
  return out;
}

Var matmul(Var a, Var b) {
  Tape* t = a.tape;
  if (t->val(a).cols() != t->val(b).rows())
    throw ShapeError("matmul: inner dims " + std::to_string(t->val(a).cols()) +
                     " vs " + std::to_string(t->val(b).rows()));
  Var out = t->make(t->val(a) * t->val(b), rg(a) || rg(b));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, b, out] {
      if (t->requires_grad(a)) t->accum(a, t->grad(out) * t->val(b).transpose());
      if (t->requires_grad(b)) t->accum(b, t->val(a).transpose() * t->grad(out));
    });
  return out;
}

Var transpose(Var a) {
  Tape* t = a.tape;
  Var out = t->make(t->val(a).transpose(), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out,
                    [t, a, out] { t->accum(a, t->grad(out).transpose()); });
  return out;
}

Var reshape_rowmajor(Var a, int rows, int cols) {
  Tape* t = a.tape;
  const Mat& x = t->val(a);
  if (x.size() != static_cast<long>(rows) * cols)
    throw ShapeError("reshape: element count mismatch");
  using RowMajor =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor rm = x;
  Eigen::Map<RowMajor> re(rm.data(), rows, cols);
  Var out = t->make(Mat(re), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out, rows, cols] {
      RowMajor g = t->grad(out);
      Eigen::Map<RowMajor> back(g.data(), t->val(a).rows(), t->val(a).cols());
      t->accum(a, Mat(back));
    });
  return out;
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: empty");
  Tape* t = parts[0].tape;
  int cols = static_cast<int>(t->val(parts[0]).cols());
  int rows = 0;
  bool need = false;
  for (Var p : parts) {
    if (t->val(p).cols() != cols) throw ShapeError("concat_rows: col mismatch");
    rows += static_cast<int>(t->val(p).rows());
    need = need || rg(p);
  }
  Mat v(rows, cols);
  int r = 0;
  for (Var p : parts) {
    v.middleRows(r, t->val(p).rows()) = t->val(p);
    r += static_cast<int>(t->val(p).rows());
  }
  Var out = t->make(std::move(v), need);
  if (need) {
    std::vector<Var> ps = parts;
    t->set_backward(out, [t, ps, out] {
      int r = 0;
      for (Var p : ps) {
        int n = static_cast<int>(t->val(p).rows());
        t->accum(p, t->grad(out).middleRows(r, n));
        r += n;
      }
    });
  }
  return out;
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: empty");
  Tape* t = parts[0].tape;
  int rows = static_cast<int>(t->val(parts[0]).rows());
  int cols = 0;
  bool need = false;
  for (Var p : parts) {
    if (t->val(p).rows() != rows) throw ShapeError("concat_cols: row mismatch");
    cols += static_cast<int>(t->val(p).cols());
    need = need || rg(p);
  }
  Mat v(rows, cols);
  int c = 0;
  for (Var p : parts) {
    v.middleCols(c, t->val(p).cols()) = t->val(p);
    c += static_cast<int>(t->val(p).cols());
  }
  Var out = t->make(std::move(v), need);
  if (need) {
    std::vector<Var> ps = parts;
    t->set_backward(out, [t, ps, out] {
      int c = 0;
      for (Var p : ps) {
        int n = static_cast<int>(t->val(p).cols());
        t->accum(p, t->grad(out).middleCols(c, n));
        c += n;
      }
    });
  }
  return out;
}

Var slice_rows(Var a, int r0, int n) {
  Tape* t = a.tape;
  if (r0 < 0 || r0 + n > t->val(a).rows())
    throw ShapeError("slice_rows: out of range");
  Var out = t->make(t->val(a).middleRows(r0, n), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out, r0, n] {
      Mat g = Mat::Zero(t->val(a).rows(), t->val(a).cols());
      g.middleRows(r0, n) = t->grad(out);
      t->accum(a, g);
    });
  return out;
}

Var slice_cols(Var a, int c0, int n) {
  Tape* t = a.tape;
  if (c0 < 0 || c0 + n > t->val(a).cols())
    throw ShapeError("slice_cols: out of range");
  Var out = t->make(t->val(a).middleCols(c0, n), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out, c0, n] {
      Mat g = Mat::Zero(t->val(a).rows(), t->val(a).cols());
      g.middleCols(c0, n) = t->grad(out);
      t->accum(a, g);
    });
  return out;
}

Var sum(Var a) {
  Tape* t = a.tape;
  Mat v(1, 1);
  v(0, 0) = t->val(a).sum();
  Var out = t->make(std::move(v), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out] {
      t->accum(a, Mat::Constant(t->val(a).rows(), t->val(a).cols(),
                                t->grad(out)(0, 0)));
    });
  return out;
}

Var mean(Var a) {
  double n = static_cast<double>(a.tape->val(a).size());
  return scale(sum(a), 1.0 / n);
}

Var rowwise_sum(Var a) {
  Tape* t = a.tape;
  Var out = t->make(t->val(a).rowwise().sum(), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out] {
      t->accum(a, t->grad(out) *
                      Eigen::RowVectorXd::Ones(t->val(a).cols()));
    });
  return out;
}

Var rowwise_mean(Var a) {
  double w = static_cast<double>(a.tape->val(a).cols());
  return scale(rowwise_sum(a), 1.0 / w);
}

Var colwise_sum(Var a) {
  Tape* t = a.tape;
  Var out = t->make(t->val(a).colwise().sum(), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out] {
      t->accum(a, Eigen::VectorXd::Ones(t->val(a).rows()) * t->grad(out));
    });
  return out;
}

Var broadcast_rows(Var a, int n) {
  Tape* t = a.tape;
  if (t->val(a).rows() != 1) throw ShapeError("broadcast_rows: need 1xW");
  Var out = t->make(t->val(a).replicate(n, 1), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out] {
      t->accum(a, t->grad(out).colwise().sum());
    });
  return out;
}

Var broadcast_cols(Var a, int w) {
  Tape* t = a.tape;
  if (t->val(a).cols() != 1) throw ShapeError("broadcast_cols: need Nx1");
  Var out = t->make(t->val(a).replicate(1, w), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out] {
      t->accum(a, t->grad(out).rowwise().sum());
    });
  return out;
}

Var softmax_rows(Var a) {
  Tape* t = a.tape;
  Mat v = t->val(a);
  for (int i = 0; i < v.rows(); ++i) {
    double m = v.row(i).maxCoeff();
    v.row(i) = (v.row(i).array() - m).exp();
    v.row(i) /= v.row(i).sum();
  }
  Var out = t->make(std::move(v), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out] {
      const Mat& y = t->val(out);
      const Mat& g = t->grad(out);
      Mat gy = g.cwiseProduct(y);
      Eigen::VectorXd s = gy.rowwise().sum();
      Mat gx = gy - y.cwiseProduct(s * Eigen::RowVectorXd::Ones(y.cols()));
      t->accum(a, gx);
    });
  return out;
}

Var gather_rows(Var a, const std::vector<int>& index) {
  Tape* t = a.tape;
  const Mat& x = t->val(a);
  Mat v(static_cast<int>(index.size()), x.cols());
  for (size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= x.rows())
      throw ShapeError("gather_rows: index out of range");
    v.row(static_cast<int>(i)) = x.row(index[i]);
  }
  Var out = t->make(std::move(v), rg(a));
  if (t->requires_grad(out)) {
    std::vector<int> ix = index;
    t->set_backward(out, [t, a, out, ix] {
      Mat g = Mat::Zero(t->val(a).rows(), t->val(a).cols());
      const Mat& go = t->grad(out);
      for (size_t i = 0; i < ix.size(); ++i)
        g.row(ix[i]) += go.row(static_cast<int>(i));
      t->accum(a, g);
    });
  }
  return out;
}

Var shift_rows(Var a, int offset) {
  Tape* t = a.tape;
  const Mat& x = t->val(a);
  int n = static_cast<int>(x.rows());
  Mat v = Mat::Zero(n, x.cols());
  for (int i = 0; i < n; ++i) {
    int src = i - offset;
    if (src >= 0 && src < n) v.row(i) = x.row(src);
  }
  Var out = t->make(std::move(v), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out, offset, n] {
      Mat g = Mat::Zero(n, t->val(a).cols());
      const Mat& go = t->grad(out);
      for (int i = 0; i < n; ++i) {
        int src = i - offset;
        if (src >= 0 && src < n) g.row(src) += go.row(i);
      }
      t->accum(a, g);
    });
  return out;
}

Var reverse_rows(Var a) {
  Tape* t = a.tape;
  Var out = t->make(t->val(a).colwise().reverse(), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out] {
      t->accum(a, t->grad(out).colwise().reverse());
    });
  return out;
}

Var repeat_rows(Var a, const std::vector<int>& counts) {
  Tape* t = a.tape;
  const Mat& x = t->val(a);
  if (static_cast<int>(counts.size()) != x.rows())
    throw ShapeError("repeat_rows: counts length " +
                     std::to_string(counts.size()) + " vs rows " +
                     std::to_string(x.rows()));
  int total = 0;
  for (int c : counts) {
    if (c < 1) throw DomainError("repeat_rows: count must be >= 1");
    total += c;
  }
  Mat v(total, x.cols());
  int r = 0;
  for (size_t i = 0; i < counts.size(); ++i)
    for (int k = 0; k < counts[i]; ++k) v.row(r++) = x.row(static_cast<int>(i));
  Var out = t->make(std::move(v), rg(a));
  if (t->requires_grad(out)) {
    std::vector<int> cs = counts;
    t->set_backward(out, [t, a, out, cs] {
      Mat g = Mat::Zero(t->val(a).rows(), t->val(a).cols());
      const Mat& go = t->grad(out);
      int r = 0;
      for (size_t i = 0; i < cs.size(); ++i)
        for (int k = 0; k < cs[i]; ++k) g.row(static_cast<int>(i)) += go.row(r++);
      t->accum(a, g);
    });
  }
  return out;
}

Var segment_sum_rows(Var a, const std::vector<int>& counts) {
  Tape* t = a.tape;
  const Mat& x = t->val(a);
  int total = std::accumulate(counts.begin(), counts.end(), 0);
  if (total != x.rows())
    throw ShapeError("segment_sum_rows: counts sum " + std::to_string(total) +
                     " vs rows " + std::to_string(x.rows()));
  Mat v = Mat::Zero(static_cast<int>(counts.size()), x.cols());
  int r = 0;
  for (size_t i = 0; i < counts.size(); ++i)
    for (int k = 0; k < counts[i]; ++k) v.row(static_cast<int>(i)) += x.row(r++);
  Var out = t->make(std::move(v), rg(a));
  if (t->requires_grad(out)) {
    std::vector<int> cs = counts;
    t->set_backward(out, [t, a, out, cs] {
      const Mat& go = t->grad(out);
      Mat g(t->val(a).rows(), t->val(a).cols());
      int r = 0;
      for (size_t i = 0; i < cs.size(); ++i)
        for (int k = 0; k < cs[i]; ++k) g.row(r++) = go.row(static_cast<int>(i));
      t->accum(a, g);
    });
  }
  return out;
}

Var upsample_zero_rows(Var a, int factor) {
  Tape* t = a.tape;
  const Mat& x = t->val(a);
  int n = static_cast<int>(x.rows());
  Mat v = Mat::Zero(n * factor, x.cols());
  for (int i = 0; i < n; ++i) v.row(i * factor) = x.row(i);
  Var out = t->make(std::move(v), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out, factor, n] {
      const Mat& go = t->grad(out);
      Mat g(n, t->val(a).cols());
      for (int i = 0; i < n; ++i) g.row(i) = go.row(i * factor);
      t->accum(a, g);
    });
  return out;
}

Var pad_rows(Var a, int top, int bottom) {
  Tape* t = a.tape;
  const Mat& x = t->val(a);
  Mat v = Mat::Zero(x.rows() + top + bottom, x.cols());
  v.middleRows(top, x.rows()) = x;
  Var out = t->make(std::move(v), rg(a));
  if (t->requires_grad(out))
    t->set_backward(out, [t, a, out, top] {
      t->accum(a, t->grad(out).middleRows(top, t->val(a).rows()));
    });
  return out;
}

Var stop_gradient(Var a) { return a.tape->constant(a.tape->val(a)); }

Var frobenius(Var a, double eps) {
  return sqrt_(add_scalar(sum(square(a)), eps));
}

}  // namespace paratts::ag
