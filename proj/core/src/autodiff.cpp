#include "coopsc/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "coopsc/errors.hpp"

namespace coopsc::ad {

const Mat& Var::val() const { return tape_->value(idx_); }

Var Tape::constant(Mat v) {
  nodes_.push_back(Node{std::move(v), {}, false, nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Parameter* ptr = &p;
  Var v = grad_enabled_
              ? make(p.value,
                     [ptr](Tape& t, int idx) {
                       if (ptr->learnable) ptr->grad += t.grad(idx);
                     })
              : constant(p.value);
  param_nodes_[&p] = v.index();
  return v;
}

Var Tape::make(Mat v, std::function<void(Tape&, int)> backprop) {
  nodes_.push_back(Node{std::move(v), {}, false,
                        grad_enabled_ ? std::move(backprop) : nullptr});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

const Mat& Tape::grad(int idx) const {
  if (!nodes_[idx].has_grad) {
    throw std::logic_error("autodiff: gradient read before accumulation");
  }
  return nodes_[idx].grad;
}

void Tape::accum_grad(int idx, const Mat& g) {
  Node& n = nodes_[idx];
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

void Tape::backward(const Var& scalar_loss) {
  if (!grad_enabled_) {
    throw std::logic_error("autodiff: backward() on a grad-disabled tape");
  }
  if (scalar_loss.tape() != this) {
    throw std::logic_error("autodiff: loss from a different tape");
  }
  const Mat& v = value(scalar_loss.index());
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("autodiff: backward() needs a 1x1 loss");
  }
  accum_grad(scalar_loss.index(), Mat::Ones(1, 1));
  for (int i = scalar_loss.index(); i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.has_grad && n.backprop) n.backprop(*this, i);
  }
}

namespace {
Tape& same_tape(Var a, Var b) {
  if (a.tape() != b.tape()) throw std::logic_error("autodiff: mixing tapes");
  return *a.tape();
}
}  // namespace

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const int ia = a.index(), ib = b.index();
  return t.make(a.val() + b.val(), [ia, ib](Tape& t, int idx) {
    t.accum_grad(ia, t.grad(idx));
    t.accum_grad(ib, t.grad(idx));
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const int ia = a.index(), ib = b.index();
  return t.make(a.val() - b.val(), [ia, ib](Tape& t, int idx) {
    t.accum_grad(ia, t.grad(idx));
    t.accum_grad(ib, -t.grad(idx));
  });
}

Var scale(Var a, double s) {
  Tape& t = *a.tape();
  const int ia = a.index();
  return t.make(a.val() * s, [ia, s](Tape& t, int idx) {
    t.accum_grad(ia, Mat(t.grad(idx) * s));
  });
}

Var hadamard(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const int ia = a.index(), ib = b.index();
  return t.make(a.val().cwiseProduct(b.val()), [ia, ib](Tape& t, int idx) {
    t.accum_grad(ia, t.grad(idx).cwiseProduct(t.value(ib)));
    t.accum_grad(ib, t.grad(idx).cwiseProduct(t.value(ia)));
  });
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (a.val().cols() != b.val().rows()) {
    throw ShapeError("matmul: inner dimensions disagree");
  }
  const int ia = a.index(), ib = b.index();
  return t.make(a.val() * b.val(), [ia, ib](Tape& t, int idx) {
    const Mat& g = t.grad(idx);
    t.accum_grad(ia, g * t.value(ib).transpose());
    t.accum_grad(ib, t.value(ia).transpose() * g);
  });
}

Var add_row_broadcast(Var a, Var row) {
  Tape& t = same_tape(a, row);
  if (row.val().rows() != 1 || row.val().cols() != a.val().cols()) {
    throw ShapeError("add_row_broadcast: row shape mismatch");
  }
  const int ia = a.index(), ir = row.index();
  Mat out = a.val();
  out.rowwise() += row.val().row(0);
  return t.make(std::move(out), [ia, ir](Tape& t, int idx) {
    const Mat& g = t.grad(idx);
    t.accum_grad(ia, g);
    t.accum_grad(ir, Mat(g.colwise().sum()));
  });
}

Var leaky_relu(Var a, double negative_slope) {
  Tape& t = *a.tape();
  const int ia = a.index();
  const double s = negative_slope;
  Mat out = a.val().unaryExpr([s](double x) { return x > 0.0 ? x : s * x; });
  return t.make(std::move(out), [ia, s](Tape& t, int idx) {
    const Mat& x = t.value(ia);
    Mat g = t.grad(idx);
    for (int i = 0; i < g.size(); ++i) {
      if (x(i) <= 0.0) g(i) *= s;
    }
    t.accum_grad(ia, g);
  });
}

Var abs(Var a) {
  Tape& t = *a.tape();
  const int ia = a.index();
  return t.make(a.val().cwiseAbs(), [ia](Tape& t, int idx) {
    const Mat& x = t.value(ia);
    Mat g = t.grad(idx);
    for (int i = 0; i < g.size(); ++i) {
      if (x(i) < 0.0) g(i) = -g(i);
    }
    t.accum_grad(ia, g);
  });
}

Var concat_cols(const std::vector<Var>& vs) {
  if (vs.empty()) throw ShapeError("concat_cols: empty input");
  Tape& t = *vs[0].tape();
  const int rows = static_cast<int>(vs[0].val().rows());
  int cols = 0;
  for (const Var& v : vs) {
    if (v.tape() != &t) throw std::logic_error("autodiff: mixing tapes");
    if (v.val().rows() != rows) throw ShapeError("concat_cols: row mismatch");
    cols += static_cast<int>(v.val().cols());
  }
  Mat out(rows, cols);
  std::vector<int> idxs, offs, widths;
  int off = 0;
  for (const Var& v : vs) {
    const int w = static_cast<int>(v.val().cols());
    out.middleCols(off, w) = v.val();
    idxs.push_back(v.index());
    offs.push_back(off);
    widths.push_back(w);
    off += w;
  }
  return t.make(std::move(out), [idxs, offs, widths](Tape& t, int idx) {
    const Mat& g = t.grad(idx);
    for (std::size_t i = 0; i < idxs.size(); ++i) {
      t.accum_grad(idxs[i], g.middleCols(offs[i], widths[i]));
    }
  });
}

Var slice_cols(Var a, int start, int len) {
  Tape& t = *a.tape();
  if (start < 0 || len < 0 || start + len > a.val().cols()) {
    throw ShapeError("slice_cols: range out of bounds");
  }
  const int ia = a.index();
  const int rows = static_cast<int>(a.val().rows());
  const int cols = static_cast<int>(a.val().cols());
  return t.make(a.val().middleCols(start, len),
                [ia, start, len, rows, cols](Tape& t, int idx) {
                  Mat g = Mat::Zero(rows, cols);
                  g.middleCols(start, len) = t.grad(idx);
                  t.accum_grad(ia, g);
                });
}

Var sum_all(Var a) {
  Tape& t = *a.tape();
  const int ia = a.index();
  const int rows = static_cast<int>(a.val().rows());
  const int cols = static_cast<int>(a.val().cols());
  Mat out(1, 1);
  out(0, 0) = a.val().sum();
  return t.make(std::move(out), [ia, rows, cols](Tape& t, int idx) {
    t.accum_grad(ia, Mat::Constant(rows, cols, t.grad(idx)(0, 0)));
  });
}

Var power_normalize_rows(Var a, double P) {
  Tape& t = *a.tape();
  const Mat& x = a.val();
  if (x.cols() % 2 != 0 || x.cols() == 0) {
    throw ShapeError("power_normalize_rows: row length must be a positive multiple of 2");
  }
  const double B = static_cast<double>(x.cols()) / 2.0;
  const double target = std::sqrt(B * P);
  const int ia = a.index();
  Mat out(x.rows(), x.cols());
  Eigen::VectorXd norms(x.rows());
  for (int r = 0; r < x.rows(); ++r) {
    const double n = x.row(r).norm();
    if (!(n > 1e-150)) {
      throw DegenerateSymbolError("power_normalize_rows: zero-norm row " +
                                  std::to_string(r));
    }
    norms(r) = n;
    out.row(r) = x.row(r) * (target / n);
  }
  return t.make(std::move(out), [ia, norms, target](Tape& t, int idx) {
    const Mat& x = t.value(ia);
    const Mat& g = t.grad(idx);
    Mat gx(x.rows(), x.cols());
    for (int r = 0; r < x.rows(); ++r) {
      const double n = norms(r);
      const double dot = x.row(r).dot(g.row(r));
      gx.row(r) = (target / n) * g.row(r) - (target * dot / (n * n * n)) * x.row(r);
    }
    t.accum_grad(ia, gx);
  });
}

Var mse_loss(Var a, const Mat& target) {
  Tape& t = *a.tape();
  if (a.val().rows() != target.rows() || a.val().cols() != target.cols()) {
    throw ShapeError("mse_loss: shape mismatch");
  }
  const int ia = a.index();
  const Mat diff = a.val() - target;
  const double n = static_cast<double>(diff.size());
  Mat out(1, 1);
  out(0, 0) = diff.squaredNorm() / n;
  return t.make(std::move(out), [ia, diff, n](Tape& t, int idx) {
    t.accum_grad(ia, Mat(diff * (2.0 / n * t.grad(idx)(0, 0))));
  });
}

Var softmax_cross_entropy(Var logits, const std::vector<int>& labels,
                          const std::vector<double>& weights) {
  Tape& t = *logits.tape();
  const Mat& z = logits.val();
  const int rows = static_cast<int>(z.rows());
  const int cols = static_cast<int>(z.cols());
  if (static_cast<int>(labels.size()) != rows) {
    throw ShapeError("softmax_cross_entropy: one label per row required");
  }
  std::vector<double> w = weights;
  if (w.empty()) w.assign(rows, 1.0);
  if (static_cast<int>(w.size()) != rows) {
    throw ShapeError("softmax_cross_entropy: weight count mismatch");
  }
  double wsum = 0.0;
  for (double wi : w) wsum += wi;
  if (wsum <= 0.0) wsum = 1.0;

  Mat probs(rows, cols);
  double loss = 0.0;
  for (int r = 0; r < rows; ++r) {
    const int y = labels[r];
    if (y < 0 || y >= cols) throw ShapeError("softmax_cross_entropy: label out of range");
    const double m = z.row(r).maxCoeff();
    Eigen::RowVectorXd e = (z.row(r).array() - m).exp();
    const double s = e.sum();
    probs.row(r) = e / s;
    loss -= w[r] * (z(r, y) - m - std::log(s));
  }
  Mat out(1, 1);
  out(0, 0) = loss / wsum;

  const int iz = logits.index();
  return t.make(std::move(out), [iz, probs, labels, w, wsum](Tape& t, int idx) {
    Mat g = probs;
    for (int r = 0; r < g.rows(); ++r) {
      g(r, labels[r]) -= 1.0;
      g.row(r) *= w[r] / wsum;
    }
    t.accum_grad(iz, Mat(g * t.grad(idx)(0, 0)));
  });
}

Var sigmoid_bce(Var logits, const Mat& targets) {
  Tape& t = *logits.tape();
  const Mat& z = logits.val();
  if (z.rows() != targets.rows() || z.cols() != targets.cols()) {
    throw ShapeError("sigmoid_bce: shape mismatch");
  }
  const double n = static_cast<double>(z.size());
  // loss = mean( max(z,0) - z*y + log(1+exp(-|z|)) )
  double loss = 0.0;
  for (int i = 0; i < z.size(); ++i) {
    const double zi = z(i);
    loss += std::max(zi, 0.0) - zi * targets(i) + std::log1p(std::exp(-std::abs(zi)));
  }
  Mat out(1, 1);
  out(0, 0) = loss / n;
  const int iz = logits.index();
  return t.make(std::move(out), [iz, targets, n](Tape& t, int idx) {
    const Mat& z = t.value(iz);
    Mat g(z.rows(), z.cols());
    for (int i = 0; i < z.size(); ++i) {
      g(i) = (1.0 / (1.0 + std::exp(-z(i))) - targets(i)) / n;
    }
    t.accum_grad(iz, Mat(g * t.grad(idx)(0, 0)));
  });
}

std::vector<Var> transmit_detect(const std::vector<Var>& users,
                                 const std::vector<ChannelUse>& draws) {
  if (users.empty()) throw ShapeError("transmit_detect: no users");
  Tape& t = *users[0].tape();
  const int N = static_cast<int>(users.size());
  const int batch = static_cast<int>(users[0].val().rows());
  const int twoB = static_cast<int>(users[0].val().cols());
  const int B = twoB / 2;
  for (const Var& u : users) {
    if (u.tape() != &t) throw std::logic_error("autodiff: mixing tapes");
    if (u.val().rows() != batch || u.val().cols() != twoB) {
      throw ShapeError("transmit_detect: user symbol shapes disagree");
    }
  }
  if (static_cast<int>(draws.size()) != batch) {
    throw ShapeError("transmit_detect: one channel draw per batch row required");
  }

  // Per row r: x_hat = G x + W n with G = W H (complex, N x N). The real
  // Jacobian of x -> G x per symbol slot is [[Re G, -Im G], [Im G, Re G]].
  std::vector<Mat> outputs(N, Mat(batch, twoB));
  auto jac = std::make_shared<std::vector<Eigen::MatrixXd>>();
  jac->reserve(batch);
  for (int r = 0; r < batch; ++r) {
    const ChannelUse& use = draws[r];
    if (use.chan.users() != N) {
      throw ShapeError("transmit_detect: channel draw user count mismatch");
    }
    channel::CMat Xc(N, B);
    for (int i = 0; i < N; ++i) {
      for (int k = 0; k < B; ++k) {
        Xc(i, k) = std::complex<double>(users[i].val()(r, 2 * k),
                                        users[i].val()(r, 2 * k + 1));
      }
    }
    const channel::CMat W = channel::mmse_filter(use.chan, use.P);
    const channel::CMat G = W * use.chan.H;
    const channel::CMat Xhat = G * Xc + W * use.noise;
    for (int i = 0; i < N; ++i) {
      for (int k = 0; k < B; ++k) {
        outputs[i](r, 2 * k) = Xhat(i, k).real();
        outputs[i](r, 2 * k + 1) = Xhat(i, k).imag();
      }
    }
    Eigen::MatrixXd J(2 * N, 2 * N);
    J.topLeftCorner(N, N) = G.real();
    J.topRightCorner(N, N) = -G.imag();
    J.bottomLeftCorner(N, N) = G.imag();
    J.bottomRightCorner(N, N) = G.real();
    jac->push_back(std::move(J));
  }

  std::vector<int> in_idx(N);
  for (int i = 0; i < N; ++i) in_idx[i] = users[i].index();

  // Each output node back-propagates its own rows through J^T into every
  // user's input (the detector mixes the streams).
  std::vector<Var> result;
  result.reserve(N);
  for (int i = 0; i < N; ++i) {
    result.push_back(t.make(outputs[i], [i, N, B, batch, in_idx, jac](Tape& t, int idx) {
      const Mat& g = t.grad(idx);
      std::vector<Mat> gx(N, Mat::Zero(batch, 2 * B));
      for (int r = 0; r < batch; ++r) {
        const Eigen::MatrixXd& J = (*jac)[r];
        for (int k = 0; k < B; ++k) {
          // Output node i contributes rows (i, N+i) of the stacked real vec.
          Eigen::VectorXd gout = Eigen::VectorXd::Zero(2 * N);
          gout(i) = g(r, 2 * k);
          gout(N + i) = g(r, 2 * k + 1);
          const Eigen::VectorXd gin = J.transpose() * gout;
          for (int j = 0; j < N; ++j) {
            gx[j](r, 2 * k) += gin(j);
            gx[j](r, 2 * k + 1) += gin(N + j);
          }
        }
      }
      for (int j = 0; j < N; ++j) t.accum_grad(in_idx[j], gx[j]);
    }));
  }
  return result;
}

Mat sigmoid(const Mat& logits) {
  return logits.unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
}

Mat softmax_rows(const Mat& logits) {
  Mat out(logits.rows(), logits.cols());
  for (int r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(r).array() - m).exp();
    out.row(r) = e / e.sum();
  }
  return out;
}

}  // namespace coopsc::ad
