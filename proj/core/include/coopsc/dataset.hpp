#ifndef COOPSC_DATASET_HPP
#define COOPSC_DATASET_HPP

#include <Eigen/Dense>
#include <array>
#include <string>
#include <unordered_map>
#include <vector>

#include "coopsc/backbone.hpp"
#include "coopsc/image.hpp"
#include "coopsc/rng.hpp"

namespace coopsc::data {

struct ImageRecord {
  std::string path;  // relative to dataset root
  int identity = -1;
  int camera = -1;
};

struct ChannelStats {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d std = Eigen::Vector3d::Ones();
};

struct DatasetSplit {
  std::string root;
  std::string profile;  // "toy" or "full"
  std::vector<ImageRecord> train, query, gallery;
  ChannelStats stats;

  int train_identity_count() const;
  // Raw identity -> contiguous classifier label [0, S).
  std::unordered_map<int, int> train_label_map() const;
};

struct ToyConfig {
  int train_ids = 20;
  int eval_ids = 10;
  int cams = 2;
  int train_images_per_id_cam = 30;
  int eval_images_per_id_cam = 6;
  int image_size = 32;
  std::uint64_t seed = 7;
};

// Procedurally rendered vehicle-like glyphs: per-identity hue/shape
// signature, two viewpoint variants (front/back analog), per-image jitter
// and background clutter. Deterministic under the config seed; emits PPM
// files plus manifest.json under out_dir.
DatasetSplit generate_toy_dataset(const ToyConfig& config, const std::string& out_dir);

// Renders one glyph without touching disk (used by tests and the baseline
// symbol-budget probes).
img::Image render_toy_glyph(int identity, int camera, int image_index, int size,
                            std::uint64_t seed);

// profile "toy": reads manifest.json under root and validates counts.
// profile "full": scans image_train/, image_query/, image_test/ for VeRi-style
// names  <identity>_c<camera>_*.jpg, sorted by path.
DatasetSplit load_retrieval_dataset(const std::string& root, const std::string& profile);

void write_manifest(const DatasetSplit& split, const std::string& path);

// A pair of record indices forming one multi-view sample.
struct PairSpec {
  std::array<int, 2> record_index{};
  bool correlated = false;
};

// Draws n_pairs samples from `records`: correlated pairs take two cameras of
// one identity, uncorrelated pairs two identities on distinct cameras.
// Identities lacking a second camera view are skipped and tallied.
std::vector<PairSpec> build_pairs(const std::vector<ImageRecord>& records, int n_pairs,
                                  double correlated_fraction, Rng& rng,
                                  int* skipped_tally = nullptr);

// N camera views plus identity/correlation labels, validated on construction.
struct MultiViewSample {
  std::vector<img::Image> images;
  std::vector<int> identities;
  std::vector<int> camera_ids;
  bool correlated = false;

  void validate() const;
};

MultiViewSample materialize(const DatasetSplit& split,
                            const std::vector<ImageRecord>& records,
                            const PairSpec& pair);

// ---- pixel pipeline ----
ChannelStats compute_stats(const std::string& root, const std::vector<ImageRecord>& records,
                           int max_images = 256);

// Normalized, flattened pixel row for the configured backbone input size
// (resize-cover-crop when the stored size differs).
Eigen::RowVectorXd image_to_row(const img::Image& image, const ChannelStats& stats,
                                const codec::BackboneConfig& backbone);

// Loads every record into a batch matrix (row per image).
Eigen::MatrixXd preload_pixels(const DatasetSplit& split,
                               const std::vector<ImageRecord>& records,
                               const codec::BackboneConfig& backbone);

}  // namespace coopsc::data

#endif
