#ifndef COOPSC_TRAINING_HPP
#define COOPSC_TRAINING_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "coopsc/checkpoint.hpp"
#include "coopsc/codec.hpp"
#include "coopsc/dataset.hpp"

namespace coopsc::train {

struct StageHyper {
  int epochs = 10;
  double lr = 1e-3;
  int batch = 32;
};

struct TrainConfig {
  StageHyper stage1{20, 1e-4, 32};
  StageHyper stage2{40, 1e-3, 32};
  StageHyper stage3{8, 1e-4, 16};
  StageHyper stage4{30, 1e-3, 32};
  // Training SNR sampled uniformly per batch from this range.
  double snr_lo_db = -6.0;
  double snr_hi_db = 18.0;
  double correlated_fraction = 0.5;
  int pairs_per_epoch = 600;
  double stage3_fused_weight = 1.0;  // cross-entropy weight on fused features
  double stage3_mse_weight = 0.0;    // optional auxiliary feature-MSE term
};

struct EpochLog {
  std::string variant;
  int stage = 0;
  int epoch = 0;  // 0 = pre-training snapshot
  double loss = 0.0;
  double val_metric = 0.0;  // stage-specific (accuracy or feature MSE)
};

struct ChecksumLog {
  std::string variant;
  int stage = 0;
  int epoch = 0;
  std::string module;
  std::uint64_t checksum = 0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  std::vector<ChecksumLog> checksums;

  void write_csv(const std::string& epochs_path, const std::string& checksums_path) const;
  // Modules whose checksum changed within the given stage.
  std::vector<std::string> modules_changed(const std::string& variant, int stage) const;
};

// Module freezing schedule for one stage of one variant. trainable + frozen
// always covers every instantiated module.
struct StagePlan {
  int stage = 1;
  std::vector<std::string> trainable;
  std::vector<std::string> frozen;
  std::string loss;
  StageHyper hyper;
};

StagePlan make_stage_plan(codec::TransceiverModel& model, int stage,
                          const TrainConfig& cfg);

// Four-stage training with per-stage checkpoints under out_dir:
//   stage1.ckpt                      (shared semantic encoder + identifier)
//   <variant>_stage{2,3}.ckpt        (coopsc / dl_separate; nofusion reuses
//                                     the coopsc stage-2 artifact)
//   coopsc_stage4.ckpt               (gating)
// Each run_stage* throws DependencyError when its prerequisite checkpoint is
// missing, and records module checksums per epoch in the log.
class FourStageTrainer {
 public:
  FourStageTrainer(const data::DatasetSplit& split, codec::SystemConfig sys,
                   TrainConfig cfg, std::uint64_t seed, std::string out_dir);

  std::string stage1_path() const;
  std::string stage_path(codec::Variant v, int stage) const;

  void run_stage1();
  void run_stage2(codec::Variant v);
  void run_stage3(codec::Variant v);
  void run_stage4();
  // stages 1-4 for the full system plus both ablations
  void run_all();

  // Model with the final trained weights of a variant (stage 3, plus stage 4
  // gating for the full variant).
  codec::TransceiverModel load_final(codec::Variant v) const;
  // Stage-1-only model (server-side encoder for the classical baselines).
  codec::TransceiverModel load_stage1() const;

  TrainLog& log() { return log_; }
  const data::DatasetSplit& split() const { return split_; }
  const codec::SystemConfig& system() const { return sys_; }

 private:
  struct BatchStreams;
  void ensure_pixels();
  Eigen::MatrixXd clean_features(codec::TransceiverModel& model,
                                 const Eigen::MatrixXd& pixels) const;
  void record_checksums(codec::TransceiverModel& model, const std::string& variant,
                        int stage, int epoch);

  double stage2_validation_mse(codec::TransceiverModel& model,
                               const Eigen::MatrixXd& features,
                               const std::vector<data::PairSpec>& pairs) const;

  data::DatasetSplit split_;
  codec::SystemConfig sys_;
  TrainConfig cfg_;
  std::uint64_t seed_;
  std::string out_dir_;
  TrainLog log_;

  Eigen::MatrixXd train_pixels_;
  std::vector<int> train_labels_;
  bool pixels_loaded_ = false;
};

// Average same/different verification accuracy of the gate over freshly
// recovered features at the given SNRs (balanced pair set).
double gating_accuracy(codec::TransceiverModel& model, const data::DatasetSplit& split,
                       const std::vector<data::ImageRecord>& records,
                       const Eigen::MatrixXd& record_pixels, int n_pairs,
                       const std::vector<double>& snrs_db, std::uint64_t seed);

}  // namespace coopsc::train

#endif
