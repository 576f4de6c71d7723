#ifndef COOPSC_BACKBONE_HPP
#define COOPSC_BACKBONE_HPP

#include <memory>
#include <string>
#include <vector>

#include "coopsc/nn.hpp"

namespace coopsc::codec {

using nn::Mat;
using nn::ParamEntry;
using nn::Tape;
using nn::Var;

struct BackboneConfig {
  std::string arch = "conv4";  // "conv4" (toy) or "resnet50" (full profile)
  int in_c = 3, in_h = 32, in_w = 32;
  int feature_dim = 64;
};

// Pluggable deep-convolutional feature extractor: images (rows of flattened
// C*H*W pixels, already normalized) -> length-F features.
class SemanticEncoder : public nn::Module {
 public:
  SemanticEncoder(const BackboneConfig& cfg, Rng& rng);
  ~SemanticEncoder() override;

  Var forward(Tape& t, Var images, bool train, bool update_stats = true);
  int feature_dim() const { return cfg_.feature_dim; }
  const BackboneConfig& config() const { return cfg_; }
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) override;

 private:
  struct Stage;
  BackboneConfig cfg_;
  std::vector<std::unique_ptr<Stage>> stages_;
};

}  // namespace coopsc::codec

#endif
