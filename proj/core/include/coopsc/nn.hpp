#ifndef COOPSC_NN_HPP
#define COOPSC_NN_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "coopsc/autodiff.hpp"
#include "coopsc/rng.hpp"

namespace coopsc::nn {

using ad::Mat;
using ad::Parameter;
using ad::Tape;
using ad::Var;

struct ParamEntry {
  std::string name;
  Parameter* param;
};

// Anything with named state tensors. Learnable weights and persistent buffers
// (running statistics) both appear in entries(); buffers carry
// learnable=false and are skipped by the optimizer but included in
// checkpoints and checksums.
class Module {
 public:
  virtual ~Module() = default;
  virtual void collect(const std::string& prefix, std::vector<ParamEntry>& out) = 0;

  std::vector<ParamEntry> entries(const std::string& prefix = "") {
    std::vector<ParamEntry> out;
    collect(prefix, out);
    return out;
  }
};

// FNV-1a over the raw bytes of every tensor (values only, not gradients).
std::uint64_t state_checksum(const std::vector<ParamEntry>& entries);

class Dense : public Module {
 public:
  Dense(int in, int out, Rng& rng);
  Var forward(Tape& t, Var x);
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) override;

  Parameter weight;  // (in, out)
  Parameter bias;    // (1, out)
};

class BatchNorm1d : public Module {
 public:
  explicit BatchNorm1d(int dim);
  // train=true normalizes with batch statistics; update_stats=false keeps the
  // running buffers untouched (used by finite-difference checks).
  Var forward(Tape& t, Var x, bool train, bool update_stats = true);
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) override;

  Parameter gamma, beta;
  Parameter running_mean, running_var;  // buffers
  double momentum = 0.1;
  double eps = 1e-5;
};

// 2-D convolution over rows holding C*H*W flattened images (index layout
// (c*H + y)*W + x). 1-D convolutions reuse this with kh = 1.
class Conv2d : public Module {
 public:
  Conv2d(int in_c, int in_h, int in_w, int out_c, int kh, int kw, int sh, int sw,
         bool same_pad, Rng& rng);
  Var forward(Tape& t, Var x);
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) override;

  int in_c, in_h, in_w, out_c, kh, kw, sh, sw;
  int pad_top = 0, pad_left = 0;
  int out_h = 0, out_w = 0;
  Parameter weight;  // (out_c, in_c*kh*kw)
  Parameter bias;    // (1, out_c)
};

// Per-channel batch norm over batch and spatial positions of conv outputs.
class BatchNorm2d : public Module {
 public:
  BatchNorm2d(int channels, int spatial);
  Var forward(Tape& t, Var x, bool train, bool update_stats = true);
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) override;

  int channels, spatial;
  Parameter gamma, beta;
  Parameter running_mean, running_var;
  double momentum = 0.1;
  double eps = 1e-5;
};

struct PoolShape {
  int c, h, w;
};

Var max_pool2d(Tape& t, Var x, const PoolShape& in, int k, int stride, bool same_pad,
               PoolShape* out_shape);
Var global_avg_pool(Tape& t, Var x, const PoolShape& in);

class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void attach(const std::vector<ParamEntry>& entries);
  void zero_grad();
  void step();
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  struct Slot {
    Parameter* p;
    Mat m, v;
  };
  std::vector<Slot> slots_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace coopsc::nn

#endif
