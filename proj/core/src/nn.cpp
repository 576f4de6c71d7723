#include "coopsc/nn.hpp"

#include <cmath>

#include "coopsc/errors.hpp"

namespace coopsc::nn {

std::uint64_t state_checksum(const std::vector<ParamEntry>& entries) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const ParamEntry& e : entries) {
    mix(e.name.data(), e.name.size());
    mix(e.param->value.data(), sizeof(double) * e.param->value.size());
  }
  return h;
}

namespace {
Mat he_init(int rows, int cols, int fan_in, Rng& rng) {
  const double s = std::sqrt(2.0 / static_cast<double>(fan_in));
  Mat w(rows, cols);
  for (int i = 0; i < w.size(); ++i) w(i) = s * rng.normal();
  return w;
}
}  // namespace

Dense::Dense(int in, int out, Rng& rng)
    : weight(he_init(in, out, in, rng)), bias(Mat::Zero(1, out)) {}

Var Dense::forward(Tape& t, Var x) {
  if (x.val().cols() != weight.value.rows()) {
    throw ShapeError("Dense: input width " + std::to_string(x.val().cols()) +
                     " != " + std::to_string(weight.value.rows()));
  }
  return ad::add_row_broadcast(ad::matmul(x, t.param(weight)), t.param(bias));
}

void Dense::collect(const std::string& prefix, std::vector<ParamEntry>& out) {
  out.push_back({prefix + ".weight", &weight});
  out.push_back({prefix + ".bias", &bias});
}

BatchNorm1d::BatchNorm1d(int dim)
    : gamma(Mat::Ones(1, dim)),
      beta(Mat::Zero(1, dim)),
      running_mean(Mat::Zero(1, dim), false),
      running_var(Mat::Ones(1, dim), false) {}

void BatchNorm1d::collect(const std::string& prefix, std::vector<ParamEntry>& out) {
  out.push_back({prefix + ".gamma", &gamma});
  out.push_back({prefix + ".beta", &beta});
  out.push_back({prefix + ".running_mean", &running_mean});
  out.push_back({prefix + ".running_var", &running_var});
}

namespace {

// Shared normalization core for 1d (group size = 1 column) and 2d (group =
// `spatial` consecutive columns per channel) batch norm.
Var batch_norm_impl(Tape& t, Var x, Parameter& gamma, Parameter& beta,
                    Parameter& running_mean, Parameter& running_var, double momentum,
                    double eps, bool train, bool update_stats, int channels,
                    int spatial) {
  const Mat& xv = x.val();
  const int rows = static_cast<int>(xv.rows());
  if (xv.cols() != static_cast<long>(channels) * spatial) {
    throw ShapeError("batch_norm: input width mismatch");
  }

  Eigen::RowVectorXd mean(channels), var(channels);
  if (train) {
    const double n = static_cast<double>(rows) * spatial;
    for (int c = 0; c < channels; ++c) {
      const auto blk = xv.middleCols(static_cast<long>(c) * spatial, spatial);
      const double m = blk.sum() / n;
      mean(c) = m;
      var(c) = (blk.array() - m).square().sum() / n;
    }
    if (update_stats) {
      for (int c = 0; c < channels; ++c) {
        running_mean.value(0, c) = (1.0 - momentum) * running_mean.value(0, c) + momentum * mean(c);
        running_var.value(0, c) = (1.0 - momentum) * running_var.value(0, c) + momentum * var(c);
      }
    }
  } else {
    mean = running_mean.value.row(0);
    var = running_var.value.row(0);
  }

  Eigen::RowVectorXd inv_std(channels);
  for (int c = 0; c < channels; ++c) inv_std(c) = 1.0 / std::sqrt(var(c) + eps);

  Mat xhat(rows, xv.cols());
  for (int c = 0; c < channels; ++c) {
    xhat.middleCols(static_cast<long>(c) * spatial, spatial) =
        (xv.middleCols(static_cast<long>(c) * spatial, spatial).array() - mean(c)) *
        inv_std(c);
  }

  Var vg = t.param(gamma);
  Var vb = t.param(beta);
  Mat out(rows, xv.cols());
  for (int c = 0; c < channels; ++c) {
    out.middleCols(static_cast<long>(c) * spatial, spatial) =
        xhat.middleCols(static_cast<long>(c) * spatial, spatial) * gamma.value(0, c) +
        Mat::Constant(rows, spatial, beta.value(0, c));
  }

  const int ix = x.index(), ig = vg.index(), ib = vb.index();
  auto xhat_p = std::make_shared<Mat>(std::move(xhat));
  auto inv_std_p = std::make_shared<Eigen::RowVectorXd>(std::move(inv_std));
  const bool use_batch_stats = train;
  const double gvals_unused = 0.0;
  (void)gvals_unused;

  return t.make(std::move(out), [ix, ig, ib, xhat_p, inv_std_p, channels, spatial,
                                 use_batch_stats](Tape& t, int idx) {
    const Mat& g = t.grad(idx);
    const Mat& xh = *xhat_p;
    const int rows = static_cast<int>(g.rows());
    const double n = static_cast<double>(rows) * spatial;
    const Mat& gamma_val = t.value(ig);

    Mat ggamma = Mat::Zero(1, channels);
    Mat gbeta = Mat::Zero(1, channels);
    Mat gx(rows, g.cols());
    for (int c = 0; c < channels; ++c) {
      const auto gblk = g.middleCols(static_cast<long>(c) * spatial, spatial);
      const auto xblk = xh.middleCols(static_cast<long>(c) * spatial, spatial);
      ggamma(0, c) = (gblk.array() * xblk.array()).sum();
      gbeta(0, c) = gblk.sum();
      if (use_batch_stats) {
        // d/dx of batch-stat normalization.
        const double sum_g = gbeta(0, c);
        const double sum_gx = ggamma(0, c);
        gx.middleCols(static_cast<long>(c) * spatial, spatial) =
            (gamma_val(0, c) * (*inv_std_p)(c) / n) *
            (n * gblk.array() - sum_g - xblk.array() * sum_gx).matrix();
      } else {
        gx.middleCols(static_cast<long>(c) * spatial, spatial) =
            gblk * (gamma_val(0, c) * (*inv_std_p)(c));
      }
    }
    t.accum_grad(ix, gx);
    t.accum_grad(ig, ggamma);
    t.accum_grad(ib, gbeta);
  });
}

}  // namespace

Var BatchNorm1d::forward(Tape& t, Var x, bool train, bool update_stats) {
  return batch_norm_impl(t, x, gamma, beta, running_mean, running_var, momentum, eps,
                         train, update_stats, static_cast<int>(gamma.value.cols()), 1);
}

BatchNorm2d::BatchNorm2d(int channels_, int spatial_)
    : channels(channels_),
      spatial(spatial_),
      gamma(Mat::Ones(1, channels_)),
      beta(Mat::Zero(1, channels_)),
      running_mean(Mat::Zero(1, channels_), false),
      running_var(Mat::Ones(1, channels_), false) {}

void BatchNorm2d::collect(const std::string& prefix, std::vector<ParamEntry>& out) {
  out.push_back({prefix + ".gamma", &gamma});
  out.push_back({prefix + ".beta", &beta});
  out.push_back({prefix + ".running_mean", &running_mean});
  out.push_back({prefix + ".running_var", &running_var});
}

Var BatchNorm2d::forward(Tape& t, Var x, bool train, bool update_stats) {
  return batch_norm_impl(t, x, gamma, beta, running_mean, running_var, momentum, eps,
                         train, update_stats, channels, spatial);
}

namespace {
int conv_out_len(int in, int k, int s, bool same_pad) {
  if (same_pad) return (in + s - 1) / s;
  return (in - k) / s + 1;
}
int pad_before(int in, int out, int k, int s) {
  const int total = std::max((out - 1) * s + k - in, 0);
  return total / 2;
}
}  // namespace

Conv2d::Conv2d(int in_c_, int in_h_, int in_w_, int out_c_, int kh_, int kw_, int sh_,
               int sw_, bool same_pad, Rng& rng)
    : in_c(in_c_),
      in_h(in_h_),
      in_w(in_w_),
      out_c(out_c_),
      kh(kh_),
      kw(kw_),
      sh(sh_),
      sw(sw_),
      weight(he_init(out_c_, in_c_ * kh_ * kw_, in_c_ * kh_ * kw_, rng)),
      bias(Mat::Zero(1, out_c_)) {
  out_h = conv_out_len(in_h, kh, sh, same_pad);
  out_w = conv_out_len(in_w, kw, sw, same_pad);
  if (same_pad) {
    pad_top = pad_before(in_h, out_h, kh, sh);
    pad_left = pad_before(in_w, out_w, kw, sw);
  }
  if (out_h <= 0 || out_w <= 0) throw ShapeError("Conv2d: non-positive output size");
}

void Conv2d::collect(const std::string& prefix, std::vector<ParamEntry>& out) {
  out.push_back({prefix + ".weight", &weight});
  out.push_back({prefix + ".bias", &bias});
}

Var Conv2d::forward(Tape& t, Var x) {
  const Mat& xv = x.val();
  if (xv.cols() != static_cast<long>(in_c) * in_h * in_w) {
    throw ShapeError("Conv2d: input width mismatch");
  }
  const int batch = static_cast<int>(xv.rows());
  const int patch = in_c * kh * kw;
  const int positions = out_h * out_w;

  // im2col index map, shared by every sample: for each output position, the
  // flattened input index contributing to each patch element (-1 = padding).
  auto col_index = std::make_shared<std::vector<int>>(
      static_cast<std::size_t>(patch) * positions, -1);
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      const int pos = oy * out_w + ox;
      for (int c = 0; c < in_c; ++c) {
        for (int dy = 0; dy < kh; ++dy) {
          const int iy = oy * sh - pad_top + dy;
          for (int dx = 0; dx < kw; ++dx) {
            const int ix = ox * sw - pad_left + dx;
            const int pidx = (c * kh + dy) * kw + dx;
            if (iy >= 0 && iy < in_h && ix >= 0 && ix < in_w) {
              (*col_index)[static_cast<std::size_t>(pos) * patch + pidx] =
                  (c * in_h + iy) * in_w + ix;
            }
          }
        }
      }
    }
  }

  Var vw = t.param(weight);
  Var vb = t.param(bias);
  const Mat& W = weight.value;

  Mat out(batch, static_cast<long>(out_c) * positions);
  auto cols_cache = std::make_shared<std::vector<Mat>>();
  cols_cache->reserve(batch);
  for (int b = 0; b < batch; ++b) {
    Mat cols(patch, positions);
    for (int pos = 0; pos < positions; ++pos) {
      for (int p = 0; p < patch; ++p) {
        const int src = (*col_index)[static_cast<std::size_t>(pos) * patch + p];
        cols(p, pos) = src >= 0 ? xv(b, src) : 0.0;
      }
    }
    Mat res = W * cols;  // out_c x positions
    res.colwise() += bias.value.row(0).transpose();
    for (int c = 0; c < out_c; ++c) {
      out.block(b, static_cast<long>(c) * positions, 1, positions) = res.row(c);
    }
    cols_cache->push_back(std::move(cols));
  }

  const int ix = x.index(), iw = vw.index(), ib = vb.index();
  const int oc = out_c, pc = patch, np = positions;
  const int in_width = in_c * in_h * in_w;
  return t.make(std::move(out), [ix, iw, ib, oc, pc, np, in_width, col_index,
                                 cols_cache](Tape& t, int idx) {
    const Mat& g = t.grad(idx);
    const Mat& W = t.value(iw);
    const int batch = static_cast<int>(g.rows());
    Mat gW = Mat::Zero(W.rows(), W.cols());
    Mat gb = Mat::Zero(1, oc);
    Mat gx = Mat::Zero(batch, in_width);
    Mat gres(oc, np);
    for (int b = 0; b < batch; ++b) {
      for (int c = 0; c < oc; ++c) {
        gres.row(c) = g.block(b, static_cast<long>(c) * np, 1, np);
      }
      gW.noalias() += gres * (*cols_cache)[b].transpose();
      gb += gres.rowwise().sum().transpose();
      const Mat gcols = W.transpose() * gres;  // patch x positions
      for (int pos = 0; pos < np; ++pos) {
        for (int p = 0; p < pc; ++p) {
          const int src = (*col_index)[static_cast<std::size_t>(pos) * pc + p];
          if (src >= 0) gx(b, src) += gcols(p, pos);
        }
      }
    }
    t.accum_grad(ix, gx);
    t.accum_grad(iw, gW);
    t.accum_grad(ib, gb);
  });
}

Var max_pool2d(Tape& t, Var x, const PoolShape& in, int k, int stride, bool same_pad,
               PoolShape* out_shape) {
  const Mat& xv = x.val();
  if (xv.cols() != static_cast<long>(in.c) * in.h * in.w) {
    throw ShapeError("max_pool2d: input width mismatch");
  }
  const int out_h = conv_out_len(in.h, k, stride, same_pad);
  const int out_w = conv_out_len(in.w, k, stride, same_pad);
  const int pt = same_pad ? pad_before(in.h, out_h, k, stride) : 0;
  const int pl = same_pad ? pad_before(in.w, out_w, k, stride) : 0;
  const int batch = static_cast<int>(xv.rows());
  const long out_cols = static_cast<long>(in.c) * out_h * out_w;

  Mat out(batch, out_cols);
  auto argmax = std::make_shared<std::vector<int>>(static_cast<std::size_t>(batch) * out_cols);
  for (int b = 0; b < batch; ++b) {
    for (int c = 0; c < in.c; ++c) {
      for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
          double best = -std::numeric_limits<double>::infinity();
          int best_idx = -1;
          for (int dy = 0; dy < k; ++dy) {
            const int iy = oy * stride - pt + dy;
            if (iy < 0 || iy >= in.h) continue;
            for (int dx = 0; dx < k; ++dx) {
              const int ix2 = ox * stride - pl + dx;
              if (ix2 < 0 || ix2 >= in.w) continue;
              const int src = (c * in.h + iy) * in.w + ix2;
              if (xv(b, src) > best) {
                best = xv(b, src);
                best_idx = src;
              }
            }
          }
          const long dst = (static_cast<long>(c) * out_h + oy) * out_w + ox;
          out(b, dst) = best;
          (*argmax)[static_cast<std::size_t>(b) * out_cols + dst] = best_idx;
        }
      }
    }
  }
  if (out_shape) *out_shape = PoolShape{in.c, out_h, out_w};
  const int ix = x.index();
  const int in_width = in.c * in.h * in.w;
  return t.make(std::move(out), [ix, argmax, in_width, out_cols](Tape& t, int idx) {
    const Mat& g = t.grad(idx);
    Mat gx = Mat::Zero(g.rows(), in_width);
    for (int b = 0; b < g.rows(); ++b) {
      for (long j = 0; j < out_cols; ++j) {
        const int src = (*argmax)[static_cast<std::size_t>(b) * out_cols + j];
        if (src >= 0) gx(b, src) += g(b, j);
      }
    }
    t.accum_grad(ix, gx);
  });
}

Var global_avg_pool(Tape& t, Var x, const PoolShape& in) {
  const Mat& xv = x.val();
  const int spatial = in.h * in.w;
  if (xv.cols() != static_cast<long>(in.c) * spatial) {
    throw ShapeError("global_avg_pool: input width mismatch");
  }
  const int batch = static_cast<int>(xv.rows());
  Mat out(batch, in.c);
  for (int c = 0; c < in.c; ++c) {
    out.col(c) = xv.middleCols(static_cast<long>(c) * spatial, spatial).rowwise().sum() /
                 static_cast<double>(spatial);
  }
  const int ix = x.index();
  const int C = in.c;
  return t.make(std::move(out), [ix, C, spatial](Tape& t, int idx) {
    const Mat& g = t.grad(idx);
    Mat gx(g.rows(), static_cast<long>(C) * spatial);
    for (int c = 0; c < C; ++c) {
      for (int s = 0; s < spatial; ++s) {
        gx.col(static_cast<long>(c) * spatial + s) = g.col(c) / static_cast<double>(spatial);
      }
    }
    t.accum_grad(ix, gx);
  });
}

void Adam::attach(const std::vector<ParamEntry>& entries) {
  for (const ParamEntry& e : entries) {
    if (!e.param->learnable) continue;
    slots_.push_back({e.param, Mat::Zero(e.param->value.rows(), e.param->value.cols()),
                      Mat::Zero(e.param->value.rows(), e.param->value.cols())});
  }
}

void Adam::zero_grad() {
  for (Slot& s : slots_) s.p->zero_grad();
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (Slot& s : slots_) {
    s.m = beta1_ * s.m + (1.0 - beta1_) * s.p->grad;
    s.v = beta2_ * s.v + (1.0 - beta2_) * s.p->grad.cwiseProduct(s.p->grad);
    s.p->value.array() -=
        lr_ * (s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + eps_);
  }
}

}  // namespace coopsc::nn
