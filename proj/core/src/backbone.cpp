#include "coopsc/backbone.hpp"

#include "coopsc/errors.hpp"

namespace coopsc::codec {

using nn::BatchNorm2d;
using nn::Conv2d;
using nn::PoolShape;

struct SemanticEncoder::Stage {
  virtual ~Stage() = default;
  virtual Var forward(Tape& t, Var x, bool train, bool update_stats) = 0;
  virtual void collect(const std::string& prefix, std::vector<ParamEntry>& out) = 0;
};

namespace {

struct ConvBnAct : SemanticEncoder::Stage {
  Conv2d conv;
  BatchNorm2d bn;
  double slope;
  bool act;

  ConvBnAct(const PoolShape& in, int out_c, int k, int stride, double slope_, bool act_,
            Rng& rng, PoolShape* out)
      : conv(in.c, in.h, in.w, out_c, k, k, stride, stride, true, rng),
        bn(out_c, conv.out_h * conv.out_w),
        slope(slope_),
        act(act_) {
    *out = PoolShape{out_c, conv.out_h, conv.out_w};
  }

  Var forward(Tape& t, Var x, bool train, bool update_stats) override {
    Var y = bn.forward(t, conv.forward(t, x), train, update_stats);
    return act ? ad::leaky_relu(y, slope) : y;
  }
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) override {
    conv.collect(prefix + ".conv", out);
    bn.collect(prefix + ".bn", out);
  }
};

struct MaxPoolStage : SemanticEncoder::Stage {
  PoolShape in;
  int k, stride;
  MaxPoolStage(const PoolShape& in_, int k_, int stride_, PoolShape* out)
      : in(in_), k(k_), stride(stride_) {
    nn::PoolShape dummy{in.c, 0, 0};
    dummy.h = (in.h + stride - 1) / stride;
    dummy.w = (in.w + stride - 1) / stride;
    *out = dummy;
  }
  Var forward(Tape& t, Var x, bool, bool) override {
    return nn::max_pool2d(t, x, in, k, stride, true, nullptr);
  }
  void collect(const std::string&, std::vector<ParamEntry>&) override {}
};

struct GlobalPoolStage : SemanticEncoder::Stage {
  PoolShape in;
  explicit GlobalPoolStage(const PoolShape& in_) : in(in_) {}
  Var forward(Tape& t, Var x, bool, bool) override {
    return nn::global_avg_pool(t, x, in);
  }
  void collect(const std::string&, std::vector<ParamEntry>&) override {}
};

// 1x1 -> 3x3(stride) -> 1x1 bottleneck with identity or projected skip.
struct Bottleneck : SemanticEncoder::Stage {
  std::unique_ptr<ConvBnAct> a, b, c;
  std::unique_ptr<ConvBnAct> proj;  // null for identity skip

  Bottleneck(const PoolShape& in, int mid_c, int out_c, int stride, Rng& rng,
             PoolShape* out) {
    PoolShape s1{}, s2{}, s3{};
    a = std::make_unique<ConvBnAct>(in, mid_c, 1, 1, 0.0, true, rng, &s1);
    b = std::make_unique<ConvBnAct>(s1, mid_c, 3, stride, 0.0, true, rng, &s2);
    c = std::make_unique<ConvBnAct>(s2, out_c, 1, 1, 0.0, false, rng, &s3);
    if (stride != 1 || in.c != out_c) {
      PoolShape sp{};
      proj = std::make_unique<ConvBnAct>(in, out_c, 1, stride, 0.0, false, rng, &sp);
    }
    *out = s3;
  }

  Var forward(Tape& t, Var x, bool train, bool update_stats) override {
    Var y = c->forward(t, b->forward(t, a->forward(t, x, train, update_stats), train,
                                     update_stats),
                       train, update_stats);
    Var skip = proj ? proj->forward(t, x, train, update_stats) : x;
    return ad::leaky_relu(ad::add(y, skip), 0.0);
  }
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) override {
    a->collect(prefix + ".a", out);
    b->collect(prefix + ".b", out);
    c->collect(prefix + ".c", out);
    if (proj) proj->collect(prefix + ".proj", out);
  }
};

}  // namespace

SemanticEncoder::SemanticEncoder(const BackboneConfig& cfg, Rng& rng) : cfg_(cfg) {
  PoolShape shape{cfg.in_c, cfg.in_h, cfg.in_w};
  if (cfg.arch == "conv4") {
    if (cfg.feature_dim % 4 != 0) {
      throw ConfigError("conv4 backbone requires feature_dim divisible by 4");
    }
    const int f = cfg.feature_dim;
    const int widths[4] = {f / 4, f / 2, f, f};
    for (int i = 0; i < 4; ++i) {
      PoolShape next{};
      stages_.push_back(
          std::make_unique<ConvBnAct>(shape, widths[i], 3, 2, 0.01, true, rng, &next));
      shape = next;
    }
    stages_.push_back(std::make_unique<GlobalPoolStage>(shape));
  } else if (cfg.arch == "resnet50") {
    if (cfg.feature_dim != 2048) {
      throw ConfigError("resnet50 backbone has feature_dim 2048");
    }
    PoolShape next{};
    stages_.push_back(std::make_unique<ConvBnAct>(shape, 64, 7, 2, 0.0, true, rng, &next));
    shape = next;
    stages_.push_back(std::make_unique<MaxPoolStage>(shape, 3, 2, &next));
    shape = next;
    const int counts[4] = {3, 4, 6, 3};
    const int mids[4] = {64, 128, 256, 512};
    for (int s = 0; s < 4; ++s) {
      const int out_c = mids[s] * 4;
      for (int b = 0; b < counts[s]; ++b) {
        const int stride = (b == 0 && s > 0) ? 2 : 1;
        stages_.push_back(
            std::make_unique<Bottleneck>(shape, mids[s], out_c, stride, rng, &next));
        shape = next;
      }
    }
    stages_.push_back(std::make_unique<GlobalPoolStage>(shape));
  } else {
    throw ConfigError("unknown backbone arch: " + cfg.arch);
  }
}

SemanticEncoder::~SemanticEncoder() = default;

Var SemanticEncoder::forward(Tape& t, Var images, bool train, bool update_stats) {
  const long expect = static_cast<long>(cfg_.in_c) * cfg_.in_h * cfg_.in_w;
  if (images.val().cols() != expect) {
    throw ShapeError("semantic_encode: expected " + std::to_string(expect) +
                     " pixels per row, got " + std::to_string(images.val().cols()));
  }
  Var x = images;
  for (auto& s : stages_) x = s->forward(t, x, train, update_stats);
  return x;
}

void SemanticEncoder::collect(const std::string& prefix, std::vector<ParamEntry>& out) {
  int i = 0;
  for (auto& s : stages_) {
    s->collect(prefix + ".stage" + std::to_string(i++), out);
  }
}

}  // namespace coopsc::codec
