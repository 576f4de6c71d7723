#ifndef COOPSC_AUTODIFF_HPP
#define COOPSC_AUTODIFF_HPP

#include <Eigen/Dense>
#include <functional>
#include <unordered_map>
#include <vector>

#include "coopsc/channel.hpp"

namespace coopsc::ad {

using Mat = Eigen::MatrixXd;

// A learnable tensor (or a persistent non-learnable buffer, e.g. batch-norm
// running statistics). Gradient accumulates across tape replays until
// zero_grad().
struct Parameter {
  Mat value;
  Mat grad;
  bool learnable = true;

  Parameter() = default;
  explicit Parameter(Mat v, bool learn = true)
      : value(std::move(v)), grad(Mat::Zero(value.rows(), value.cols())), learnable(learn) {}

  void zero_grad() { grad.setZero(); }
};

class Tape;

// Lightweight handle into a tape. Valid while the tape lives.
class Var {
 public:
  Var() = default;
  const Mat& val() const;
  int index() const { return idx_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(Tape* t, int i) : tape_(t), idx_(i) {}
  Tape* tape_ = nullptr;
  int idx_ = -1;
};

// Reverse-mode tape over dense double matrices. Construct with
// grad_enabled=false for pure inference (no closures recorded).
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const { return grad_enabled_; }

  Var constant(Mat v);
  // Leaf bound to an external parameter; backward() adds into p.grad.
  // Repeated calls with the same parameter return the same node so that
  // shared weights accumulate gradient from every use.
  Var param(Parameter& p);

  // Generic node: `backprop(tape, node_index)` must scatter this node's grad
  // into its parents via accum_grad.
  Var make(Mat v, std::function<void(Tape&, int)> backprop);

  void backward(const Var& scalar_loss);

  const Mat& value(int idx) const { return nodes_[idx].value; }
  const Mat& grad(int idx) const;
  bool has_grad(int idx) const { return nodes_[idx].has_grad; }
  void accum_grad(int idx, const Mat& g);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool has_grad = false;
    std::function<void(Tape&, int)> backprop;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
  bool grad_enabled_ = true;
};

// ---- primitive ops ----
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
Var hadamard(Var a, Var b);
Var matmul(Var a, Var b);
// (R x C) plus a (1 x C) row, broadcast over rows.
Var add_row_broadcast(Var a, Var row);
Var leaky_relu(Var a, double negative_slope);
Var abs(Var a);
Var concat_cols(const std::vector<Var>& vs);
Var slice_cols(Var a, int start, int len);
Var sum_all(Var a);

// Row-wise average-complex-symbol-power normalization: each row r is scaled
// so that ||row||^2 / B = P, with B = cols/2. Throws DegenerateSymbolError on
// a zero row.
Var power_normalize_rows(Var a, double P);

// Mean over all entries of (a - target)^2. Scalar output.
Var mse_loss(Var a, const Mat& target);

// Row-wise softmax cross-entropy against integer labels, averaged with the
// given non-negative weights (weights need not sum to 1; the mean divides by
// their sum). Scalar output.
Var softmax_cross_entropy(Var logits, const std::vector<int>& labels,
                          const std::vector<double>& weights = {});

// Element-wise sigmoid binary cross-entropy against targets in [0,1], mean
// over all entries. Scalar output.
Var sigmoid_bce(Var logits, const Mat& targets);

// One fixed multi-user channel use per batch row: symbols of user i (row r of
// users[i]) are jointly faded by draw[r].chan, perturbed by the pre-drawn
// noise, and MMSE-detected. Differentiable w.r.t. the inputs; the fading and
// noise realizations are constants of the graph.
struct ChannelUse {
  channel::ChannelRealization chan;
  channel::CMat noise;  // M x B, already scaled by sqrt(noise_variance)
  double P = 1.0;
};
std::vector<Var> transmit_detect(const std::vector<Var>& users,
                                 const std::vector<ChannelUse>& draws);

// Plain (tape-free) activations for inference-side post-processing.
Mat sigmoid(const Mat& logits);
Mat softmax_rows(const Mat& logits);

}  // namespace coopsc::ad

#endif
