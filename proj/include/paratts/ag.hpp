#ifndef PARATTS_AG_HPP_
#define PARATTS_AG_HPP_

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace paratts::ag {

using Mat = Eigen::MatrixXd;

class Tape;

// Handle into a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  int idx = -1;
  bool valid() const { return tape != nullptr; }
};

// Dynamic reverse-mode tape over dense double matrices. Sequences are stored
// length x width. Single-threaded by design; one tape per forward pass.
class Tape {
 public:
  Var leaf(const Mat& v, bool requires_grad);
  Var constant(const Mat& v) { return leaf(v, false); }
  Var constant_scalar(double v) {
    Mat m(1, 1);
    m(0, 0) = v;
    return leaf(m, false);
  }

  const Mat& val(Var v) const { return nodes_[v.idx].value; }
  Mat& grad(Var v);
  bool requires_grad(Var v) const { return nodes_[v.idx].requires_grad; }

  // Seeds d(loss)/d(loss)=1 and walks the tape backwards. loss must be 1x1.
  void backward(Var loss);

  size_t size() const { return nodes_.size(); }

  // op plumbing
  Var make(Mat value, bool requires_grad);
  void set_backward(Var v, std::function<void()> back);
  void accum(Var v, const Mat& g);

 private:
  struct Node {
    Mat value;
    Mat grad;  // empty until touched
    std::function<void()> backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

// ----- elementwise / arithmetic -----
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var div(Var a, Var b);  // elementwise
Var neg(Var a);
Var scale(Var a, double s);
Var add_scalar(Var a, double c);
Var square(Var a);
Var abs_(Var a);
Var sqrt_(Var a);  // input must stay positive; compose with add_scalar(eps)
Var exp_(Var a);
Var log_(Var a);  // input must be positive
Var tanh_(Var a);
Var sigmoid_(Var a);
Var softplus(Var a);
Var leaky_relu(Var a, double slope);
Var clamp_min(Var a, double floor);  // max(a, floor); zero grad below floor

// ----- linear algebra / shape -----
Var matmul(Var a, Var b);
Var transpose(Var a);
Var reshape_rowmajor(Var a, int rows, int cols);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(Var a, int r0, int n);
Var slice_cols(Var a, int c0, int n);
Var sum(Var a);   // 1x1
Var mean(Var a);  // 1x1
Var rowwise_sum(Var a);   // N x 1
Var rowwise_mean(Var a);  // N x 1
Var colwise_sum(Var a);   // 1 x W
Var broadcast_rows(Var a, int n);  // 1xW -> NxW
Var broadcast_cols(Var a, int w);  // Nx1 -> NxW
Var softmax_rows(Var a);
Var gather_rows(Var a, const std::vector<int>& index);
Var shift_rows(Var a, int offset);  // offset>0 shifts content down, zero fill
Var reverse_rows(Var a);
Var repeat_rows(Var a, const std::vector<int>& counts);     // length regulator
Var segment_sum_rows(Var a, const std::vector<int>& counts);
Var upsample_zero_rows(Var a, int factor);  // zero insertion, N -> N*factor
Var pad_rows(Var a, int top, int bottom);   // zero padding
Var stop_gradient(Var a);

// Frobenius norm as a 1x1 Var: sqrt(sum(a^2) + eps)
Var frobenius(Var a, double eps = 1e-12);

}  // namespace paratts::ag

#endif  // PARATTS_AG_HPP_
