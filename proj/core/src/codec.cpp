#include "coopsc/codec.hpp"

#include "coopsc/errors.hpp"

namespace coopsc::codec {

JscEncoder::JscEncoder(const SystemConfig& cfg, Rng& rng)
    : fc1_(cfg.F, 2 * cfg.B, rng),
      bn_(2 * cfg.B),
      fc2_(2 * cfg.B, 2 * cfg.B, rng),
      power_(cfg.P),
      feature_dim_(cfg.F),
      symbol_dim_(2 * cfg.B) {}

Var JscEncoder::forward(Tape& t, Var features, bool train, bool update_stats) {
  if (features.val().cols() != feature_dim_) {
    throw ShapeError("jsc_encode: expected feature length " +
                     std::to_string(feature_dim_));
  }
  Var h = ad::leaky_relu(bn_.forward(t, fc1_.forward(t, features), train, update_stats),
                         0.01);
  Var raw = fc2_.forward(t, h);  // linear output layer
  return ad::power_normalize_rows(raw, power_);
}

void JscEncoder::collect(const std::string& prefix, std::vector<ParamEntry>& out) {
  fc1_.collect(prefix + ".fc1", out);
  bn_.collect(prefix + ".bn", out);
  fc2_.collect(prefix + ".fc2", out);
}

namespace {
Rng& req(Rng& rng) { return rng; }
}  // namespace

CoopJscDecoder::CoopJscDecoder(const SystemConfig& cfg, Rng& rng)
    : conv_(cfg.N, 1, 2 * cfg.B, 8 * cfg.N, 1, 5, 1, 2, true, req(rng)),
      fc1_(8 * cfg.N * cfg.B, cfg.F, rng),
      bn_(cfg.F),
      fc2_(cfg.F, cfg.N * cfg.F, rng),
      users_(cfg.N),
      symbol_dim_(2 * cfg.B) {}

Var CoopJscDecoder::forward(Tape& t, Var detected, bool train, bool update_stats) {
  if (detected.val().cols() != static_cast<long>(users_) * symbol_dim_) {
    throw ShapeError("coop_jsc_decode: expected " +
                     std::to_string(users_ * symbol_dim_) + " detected values per row");
  }
  Var h = conv_.forward(t, detected);
  h = ad::leaky_relu(bn_.forward(t, fc1_.forward(t, h), train, update_stats), 0.01);
  return ad::leaky_relu(fc2_.forward(t, h), 0.01);
}

void CoopJscDecoder::collect(const std::string& prefix, std::vector<ParamEntry>& out) {
  conv_.collect(prefix + ".conv", out);
  fc1_.collect(prefix + ".fc1", out);
  bn_.collect(prefix + ".bn", out);
  fc2_.collect(prefix + ".fc2", out);
}

SeparateJscDecoder::SeparateJscDecoder(const SystemConfig& cfg, Rng& rng)
    : conv_(1, 1, 2 * cfg.B, 8, 1, 5, 1, 2, true, req(rng)),
      fc1_(8 * cfg.B, cfg.F, rng),
      bn_(cfg.F),
      fc2_(cfg.F, cfg.F, rng),
      symbol_dim_(2 * cfg.B) {}

Var SeparateJscDecoder::forward(Tape& t, Var detected, bool train, bool update_stats) {
  if (detected.val().cols() != symbol_dim_) {
    throw ShapeError("separate_jsc_decode: expected " + std::to_string(symbol_dim_) +
                     " detected values per row");
  }
  Var h = conv_.forward(t, detected);
  h = ad::leaky_relu(bn_.forward(t, fc1_.forward(t, h), train, update_stats), 0.01);
  return ad::leaky_relu(fc2_.forward(t, h), 0.01);
}

void SeparateJscDecoder::collect(const std::string& prefix, std::vector<ParamEntry>& out) {
  conv_.collect(prefix + ".conv", out);
  fc1_.collect(prefix + ".fc1", out);
  bn_.collect(prefix + ".bn", out);
  fc2_.collect(prefix + ".fc2", out);
}

FusionModule::FusionModule(const SystemConfig& cfg, Rng& rng)
    : conv_(cfg.N, 1, cfg.F, 1, 1, 1, 1, 1, true, rng),
      feature_dim_(cfg.F),
      users_(cfg.N) {}

Var FusionModule::forward(Tape& t, const std::vector<Var>& features) {
  if (static_cast<int>(features.size()) != users_) {
    throw ShapeError("fuse: expected " + std::to_string(users_) + " features");
  }
  for (const Var& f : features) {
    if (f.val().cols() != feature_dim_) {
      throw ShapeError("fuse: feature length mismatch");
    }
  }
  return conv_.forward(t, ad::concat_cols(features));
}

void FusionModule::collect(const std::string& prefix, std::vector<ParamEntry>& out) {
  conv_.collect(prefix + ".conv", out);
}

GatingModule::GatingModule(const SystemConfig& cfg, Rng& rng)
    : fc_(cfg.F, 2, rng), abs_input_(cfg.gate_input != "signed") {}

Var GatingModule::logits(Tape& t, Var f1, Var f2) {
  Var d = ad::sub(f1, f2);
  if (abs_input_) d = ad::abs(d);
  return fc_.forward(t, d);
}

Mat GatingModule::scores(const Mat& f1, const Mat& f2) {
  Tape t(false);
  Var z = logits(t, t.constant(f1), t.constant(f2));
  return ad::sigmoid(z.val());
}

void GatingModule::collect(const std::string& prefix, std::vector<ParamEntry>& out) {
  fc_.collect(prefix + ".fc", out);
}

GateDecision gate_decide(const Mat& scores_row, double threshold) {
  GateDecision d;
  d.score_diff = scores_row(0, 0);
  d.score_same = scores_row(0, GatingModule::kSameIndex);
  d.phi = d.score_same > threshold;
  return d;
}

Identifier::Identifier(const SystemConfig& cfg, Rng& rng) : fc_(cfg.F, cfg.S, rng) {}

Var Identifier::logits(Tape& t, Var features) { return fc_.forward(t, features); }

Mat Identifier::distribution(const Mat& features) {
  Tape t(false);
  Var z = logits(t, t.constant(features));
  return ad::softmax_rows(z.val());
}

void Identifier::collect(const std::string& prefix, std::vector<ParamEntry>& out) {
  fc_.collect(prefix + ".fc", out);
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Full:
      return "coopsc";
    case Variant::NoFusion:
      return "coopsc_nofusion";
    case Variant::Separate:
      return "dl_separate";
  }
  return "unknown";
}

TransceiverModel::TransceiverModel(const SystemConfig& cfg, Variant variant,
                                   std::uint64_t seed)
    : cfg_(cfg), variant_(variant) {
  Rng rng(derive_seed(seed, 0xC0DEC));
  encoder_ = std::make_unique<SemanticEncoder>(cfg.backbone, rng);
  if (encoder_->feature_dim() != cfg.F) {
    throw ConfigError("backbone feature_dim must equal F");
  }
  for (int i = 0; i < cfg.N; ++i) {
    jsc_encoders_.push_back(std::make_unique<JscEncoder>(cfg, rng));
  }
  if (variant == Variant::Separate) {
    for (int i = 0; i < cfg.N; ++i) {
      separate_decoders_.push_back(std::make_unique<SeparateJscDecoder>(cfg, rng));
    }
  } else {
    coop_decoder_ = std::make_unique<CoopJscDecoder>(cfg, rng);
  }
  if (variant == Variant::Full) {
    fusion_ = std::make_unique<FusionModule>(cfg, rng);
    gating_ = std::make_unique<GatingModule>(cfg, rng);
  }
  identifier_ = std::make_unique<Identifier>(cfg, rng);
}

std::vector<std::pair<std::string, nn::Module*>> TransceiverModel::modules() {
  std::vector<std::pair<std::string, nn::Module*>> out;
  out.emplace_back("semantic_encoder", encoder_.get());
  for (int i = 0; i < cfg_.N; ++i) {
    out.emplace_back("jsc_encoder" + std::to_string(i), jsc_encoders_[i].get());
  }
  if (coop_decoder_) out.emplace_back("coop_decoder", coop_decoder_.get());
  for (std::size_t i = 0; i < separate_decoders_.size(); ++i) {
    out.emplace_back("separate_decoder" + std::to_string(i), separate_decoders_[i].get());
  }
  if (fusion_) out.emplace_back("fusion", fusion_.get());
  if (gating_) out.emplace_back("gating", gating_.get());
  out.emplace_back("identifier", identifier_.get());
  return out;
}

std::vector<ParamEntry> TransceiverModel::entries() {
  std::vector<ParamEntry> out;
  for (auto& [name, mod] : modules()) mod->collect(name, out);
  return out;
}

std::vector<ParamEntry> TransceiverModel::entries_for(
    const std::vector<std::string>& module_names) {
  std::vector<ParamEntry> out;
  auto mods = modules();
  for (const std::string& want : module_names) {
    bool found = false;
    for (auto& [name, mod] : mods) {
      if (name == want) {
        mod->collect(name, out);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("unknown module name: " + want);
  }
  return out;
}

std::map<std::string, std::uint64_t> TransceiverModel::module_checksums() {
  std::map<std::string, std::uint64_t> out;
  for (auto& [name, mod] : modules()) {
    out[name] = nn::state_checksum(mod->entries(name));
  }
  return out;
}

std::vector<Var> TransceiverModel::decode(Tape& t, const std::vector<Var>& detected,
                                          bool train, bool update_stats) {
  if (static_cast<int>(detected.size()) != cfg_.N) {
    throw ShapeError("decode: expected one detected-symbol matrix per user");
  }
  std::vector<Var> features;
  features.reserve(cfg_.N);
  if (variant_ == Variant::Separate) {
    for (int i = 0; i < cfg_.N; ++i) {
      features.push_back(separate_decoders_[i]->forward(t, detected[i], train, update_stats));
    }
  } else {
    Var all = ad::concat_cols(detected);
    Var recovered = coop_decoder_->forward(t, all, train, update_stats);
    for (int i = 0; i < cfg_.N; ++i) {
      features.push_back(ad::slice_cols(recovered, i * cfg_.F, cfg_.F));
    }
  }
  return features;
}

}  // namespace coopsc::codec
