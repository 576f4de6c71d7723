#ifndef COOPSC_CODEC_HPP
#define COOPSC_CODEC_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coopsc/backbone.hpp"
#include "coopsc/nn.hpp"

namespace coopsc::codec {

// Dimensions of one deployed system; every layer width below derives from it.
struct SystemConfig {
  int N = 2;      // users / cameras
  int M = 4;      // receiver antennas
  int B = 16;     // complex symbols per image
  int F = 2048;   // semantic feature length
  int S = 576;    // training identity count
  double P = 1.0; // per-user power budget
  BackboneConfig backbone;
  double gate_threshold = 0.5;
  std::string gate_input = "abs";  // "abs" or "signed" difference
};

// Feature vector -> 2B power-normalized channel symbols.
class JscEncoder : public nn::Module {
 public:
  JscEncoder(const SystemConfig& cfg, Rng& rng);
  Var forward(Tape& t, Var features, bool train, bool update_stats = true);
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) override;

 private:
  nn::Dense fc1_;
  nn::BatchNorm1d bn_;
  nn::Dense fc2_;
  double power_;
  int feature_dim_, symbol_dim_;
};

// Joint decoder: all users' detected symbols (batch x N*2B, user-major) ->
// concatenated recovered features (batch x N*F). The convolution treats the
// N users as input channels over the 2B symbol axis and expands to 8N
// channels at stride 2, giving a flattened width of 8N*B (16B for N=2).
class CoopJscDecoder : public nn::Module {
 public:
  CoopJscDecoder(const SystemConfig& cfg, Rng& rng);
  Var forward(Tape& t, Var detected, bool train, bool update_stats = true);
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) override;

 private:
  nn::Conv2d conv_;
  nn::Dense fc1_;
  nn::BatchNorm1d bn_;
  nn::Dense fc2_;
  int users_, symbol_dim_;
};

// Per-user decoder used by the non-cooperative baseline: one user's 2B
// detected symbols -> that user's F recovered features. Single input
// channel, 8 output channels at stride 2: flattened width 8B.
class SeparateJscDecoder : public nn::Module {
 public:
  SeparateJscDecoder(const SystemConfig& cfg, Rng& rng);
  Var forward(Tape& t, Var detected, bool train, bool update_stats = true);
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) override;

 private:
  nn::Conv2d conv_;
  nn::Dense fc1_;
  nn::BatchNorm1d bn_;
  nn::Dense fc2_;
  int symbol_dim_;
};

// Learned per-user weighting: N recovered features -> one global feature.
// Kernel-1 convolution across the user axis, no activation.
class FusionModule : public nn::Module {
 public:
  FusionModule(const SystemConfig& cfg, Rng& rng);
  // features: N entries, each batch x F.
  Var forward(Tape& t, const std::vector<Var>& features);
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) override;

 private:
  nn::Conv2d conv_;
  int feature_dim_, users_;
};

// Same-identity verifier over the difference of two recovered features.
// Two sigmoid outputs: index 0 = "different", index 1 = "same".
class GatingModule : public nn::Module {
 public:
  GatingModule(const SystemConfig& cfg, Rng& rng);
  Var logits(Tape& t, Var f1, Var f2);
  // Sigmoid scores, batch x 2.
  Mat scores(const Mat& f1, const Mat& f2);
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) override;

  static constexpr int kSameIndex = 1;

 private:
  nn::Dense fc_;
  bool abs_input_;
};

struct GateDecision {
  bool phi = false;
  double score_same = 0.0;
  double score_diff = 0.0;
};

// phi = 1 iff the same-identity sigmoid output exceeds the threshold.
GateDecision gate_decide(const Mat& scores_row, double threshold);

// Identity classifier over a (global or per-user) feature; training only.
class Identifier : public nn::Module {
 public:
  Identifier(const SystemConfig& cfg, Rng& rng);
  Var logits(Tape& t, Var features);
  // Softmax-normalized distribution, batch x S.
  Mat distribution(const Mat& features);
  void collect(const std::string& prefix, std::vector<ParamEntry>& out) override;

 private:
  nn::Dense fc_;
};

// Receiver-side decoding style.
enum class Variant { Full, NoFusion, Separate };

std::string variant_name(Variant v);

// One trainable end-to-end system. The semantic encoder and identifier are
// shared by all cameras; JSC encoders (and, for the Separate variant,
// decoders) are per user.
class TransceiverModel {
 public:
  TransceiverModel(const SystemConfig& cfg, Variant variant, std::uint64_t seed);

  const SystemConfig& config() const { return cfg_; }
  Variant variant() const { return variant_; }

  SemanticEncoder& encoder() { return *encoder_; }
  JscEncoder& jsc_encoder(int user) { return *jsc_encoders_.at(user); }
  CoopJscDecoder& coop_decoder() { return *coop_decoder_; }
  SeparateJscDecoder& separate_decoder(int user) { return *separate_decoders_.at(user); }
  FusionModule& fusion() { return *fusion_; }
  GatingModule& gating() { return *gating_; }
  Identifier& identifier() { return *identifier_; }
  bool has_fusion() const { return fusion_ != nullptr; }
  bool has_gating() const { return gating_ != nullptr; }

  // Named top-level modules, e.g. {"semantic_encoder", "jsc_encoder0", ...}.
  std::vector<std::pair<std::string, nn::Module*>> modules();
  std::vector<ParamEntry> entries();
  std::vector<ParamEntry> entries_for(const std::vector<std::string>& module_names);
  std::map<std::string, std::uint64_t> module_checksums();

  // Decode all users' detected symbols (vector of batch x 2B) into recovered
  // per-user features (vector of batch x F), via the variant's decoder.
  std::vector<Var> decode(Tape& t, const std::vector<Var>& detected, bool train,
                          bool update_stats = true);

 private:
  SystemConfig cfg_;
  Variant variant_;
  std::unique_ptr<SemanticEncoder> encoder_;
  std::vector<std::unique_ptr<JscEncoder>> jsc_encoders_;
  std::unique_ptr<CoopJscDecoder> coop_decoder_;
  std::vector<std::unique_ptr<SeparateJscDecoder>> separate_decoders_;
  std::unique_ptr<FusionModule> fusion_;
  std::unique_ptr<GatingModule> gating_;
  std::unique_ptr<Identifier> identifier_;
};

}  // namespace coopsc::codec

#endif
