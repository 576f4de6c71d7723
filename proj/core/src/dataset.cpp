#include "coopsc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "coopsc/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace coopsc::data {

int DatasetSplit::train_identity_count() const {
  std::set<int> ids;
  for (const auto& r : train) ids.insert(r.identity);
  return static_cast<int>(ids.size());
}

std::unordered_map<int, int> DatasetSplit::train_label_map() const {
  std::set<int> ids;
  for (const auto& r : train) ids.insert(r.identity);
  std::unordered_map<int, int> map;
  int next = 0;
  for (int id : ids) map[id] = next++;
  return map;
}

// ---------------------------------------------------------------------------
// toy renderer
// ---------------------------------------------------------------------------

namespace {

struct Rgb {
  double r, g, b;
};

Rgb hsv_to_rgb(double h, double s, double v) {
  h = h - std::floor(h);
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) {
    r = c; g = x;
  } else if (hp < 2) {
    r = x; g = c;
  } else if (hp < 3) {
    g = c; b = x;
  } else if (hp < 4) {
    g = x; b = c;
  } else if (hp < 5) {
    r = x; b = c;
  } else {
    r = c; b = x;
  }
  const double m = v - c;
  return {r + m, g + m, b + m};
}

void fill_rect(img::Image& im, double x0, double y0, double x1, double y1, Rgb col) {
  const int ix0 = std::max(0, static_cast<int>(std::floor(x0)));
  const int iy0 = std::max(0, static_cast<int>(std::floor(y0)));
  const int ix1 = std::min(im.w - 1, static_cast<int>(std::ceil(x1)));
  const int iy1 = std::min(im.h - 1, static_cast<int>(std::ceil(y1)));
  for (int y = iy0; y <= iy1; ++y) {
    for (int x = ix0; x <= ix1; ++x) {
      im.at(0, y, x) = col.r;
      im.at(1, y, x) = col.g;
      im.at(2, y, x) = col.b;
    }
  }
}

void fill_circle(img::Image& im, double cx, double cy, double rad, Rgb col) {
  const int ix0 = std::max(0, static_cast<int>(std::floor(cx - rad)));
  const int iy0 = std::max(0, static_cast<int>(std::floor(cy - rad)));
  const int ix1 = std::min(im.w - 1, static_cast<int>(std::ceil(cx + rad)));
  const int iy1 = std::min(im.h - 1, static_cast<int>(std::ceil(cy + rad)));
  for (int y = iy0; y <= iy1; ++y) {
    for (int x = ix0; x <= ix1; ++x) {
      const double dx = x - cx, dy = y - cy;
      if (dx * dx + dy * dy <= rad * rad) {
        im.at(0, y, x) = col.r;
        im.at(1, y, x) = col.g;
        im.at(2, y, x) = col.b;
      }
    }
  }
}

}  // namespace

img::Image render_toy_glyph(int identity, int camera, int image_index, int size,
                            std::uint64_t seed) {
  // Identity signature: deterministic in the identity alone.
  Rng id_rng(derive_seed(seed, 0x1D, static_cast<std::uint64_t>(identity)));
  const double hue = std::fmod(0.11 + identity * 0.61803398875, 1.0);
  const double sat = 0.75 + 0.2 * id_rng.uniform();
  const double body_len = 0.58 + 0.2 * id_rng.uniform();   // fraction of width
  const double body_hgt = 0.20 + 0.10 * id_rng.uniform();  // fraction of height
  const double cabin_frac = 0.35 + 0.25 * id_rng.uniform();
  const double wheel_rad = 0.05 + 0.03 * id_rng.uniform();
  const double cabin_hue_shift = 0.05 + 0.08 * id_rng.uniform();

  // Per-image jitter stream.
  Rng rng(derive_seed(seed, 0x1116, static_cast<std::uint64_t>(identity) * 1000003ULL +
                                        static_cast<std::uint64_t>(camera) * 131ULL +
                                        static_cast<std::uint64_t>(image_index)));

  img::Image im(3, size, size);

  // Background: vertical gradient between two muted tones plus clutter.
  const double g0 = 0.25 + 0.5 * rng.uniform();
  const double g1 = 0.25 + 0.5 * rng.uniform();
  const double bg_hue = rng.uniform();
  for (int y = 0; y < size; ++y) {
    const double v = g0 + (g1 - g0) * y / (size - 1.0);
    const Rgb c = hsv_to_rgb(bg_hue, 0.12, v);
    for (int x = 0; x < size; ++x) {
      im.at(0, y, x) = c.r;
      im.at(1, y, x) = c.g;
      im.at(2, y, x) = c.b;
    }
  }
  const int n_clutter = 2 + rng.uniform_int(0, 2);
  for (int i = 0; i < n_clutter; ++i) {
    const double cx = rng.uniform() * size;
    const double cy = rng.uniform() * size * 0.45;  // clutter in upper half
    const double cw = (0.08 + 0.15 * rng.uniform()) * size;
    const double chh = (0.08 + 0.2 * rng.uniform()) * size;
    fill_rect(im, cx - cw / 2, cy - chh / 2, cx + cw / 2, cy + chh / 2,
              hsv_to_rgb(rng.uniform(), 0.25, 0.3 + 0.45 * rng.uniform()));
  }

  // Pose jitter.
  const double jscale = 0.88 + 0.24 * rng.uniform();
  const double jx = (rng.uniform() - 0.5) * 0.12 * size;
  const double jy = (rng.uniform() - 0.5) * 0.08 * size;
  const double jhue = (rng.uniform() - 0.5) * 0.03;
  const double jval = 0.9 + 0.2 * rng.uniform();

  // Camera 2 sees the mirrored "rear" aspect, slightly darker.
  const bool rear = (camera % 2 == 0);
  const double view_val = rear ? 0.82 : 1.0;

  const double W = body_len * size * jscale;
  const double H = body_hgt * size * jscale;
  const double cx = size / 2.0 + jx;
  const double cy = size * 0.62 + jy;

  const Rgb body = hsv_to_rgb(hue + jhue, sat, 0.85 * jval * view_val);
  const Rgb cabin = hsv_to_rgb(hue + cabin_hue_shift + jhue, sat * 0.8, 0.7 * jval * view_val);
  const Rgb dark = {0.08, 0.08, 0.1};

  // Body.
  fill_rect(im, cx - W / 2, cy - H / 2, cx + W / 2, cy + H / 2, body);
  // Cabin block sits toward the front (camera 1) or rear (camera 2).
  const double cab_w = W * cabin_frac;
  const double cab_h = H * 0.9;
  const double cab_off = (rear ? 1.0 : -1.0) * (W / 2 - cab_w / 2) * 0.55;
  fill_rect(im, cx + cab_off - cab_w / 2, cy - H / 2 - cab_h, cx + cab_off + cab_w / 2,
            cy - H / 2, cabin);
  // Wheels.
  const double wr = wheel_rad * size * jscale;
  fill_circle(im, cx - W * 0.32, cy + H / 2, wr, dark);
  fill_circle(im, cx + W * 0.32, cy + H / 2, wr, dark);
  // Head / tail light marks the facing.
  const Rgb light = rear ? Rgb{0.9, 0.15, 0.1} : Rgb{0.98, 0.95, 0.6};
  const double lx = rear ? cx + W / 2 - 1.0 : cx - W / 2 + 1.0;
  fill_circle(im, lx, cy - H * 0.15, std::max(0.8, size * 0.025), light);

  // Sensor noise.
  for (long i = 0; i < im.data.size(); ++i) {
    im.data[i] = std::clamp(im.data[i] + 0.02 * rng.normal(), 0.0, 1.0);
  }
  return im;
}

// ---------------------------------------------------------------------------
// generation / manifest io
// ---------------------------------------------------------------------------

namespace {

std::string toy_file_name(int identity, int camera, int index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d_c%03d_%04d.ppm", identity, camera, index);
  return buf;
}

json records_to_json(const std::vector<ImageRecord>& recs) {
  json arr = json::array();
  for (const auto& r : recs) {
    arr.push_back(json{{"path", r.path}, {"identity", r.identity}, {"camera", r.camera}});
  }
  return arr;
}

std::vector<ImageRecord> records_from_json(const json& arr) {
  std::vector<ImageRecord> out;
  for (const auto& j : arr) {
    out.push_back(ImageRecord{j.at("path").get<std::string>(), j.at("identity").get<int>(),
                              j.at("camera").get<int>()});
  }
  return out;
}

void sort_records(std::vector<ImageRecord>& recs) {
  std::sort(recs.begin(), recs.end(),
            [](const ImageRecord& a, const ImageRecord& b) { return a.path < b.path; });
}

}  // namespace

void write_manifest(const DatasetSplit& split, const std::string& path) {
  json m;
  m["profile"] = split.profile;
  m["counts"] = json{{"train", split.train.size()},
                     {"query", split.query.size()},
                     {"gallery", split.gallery.size()},
                     {"train_identities", split.train_identity_count()}};
  m["normalization"] = json{{"mean", {split.stats.mean(0), split.stats.mean(1), split.stats.mean(2)}},
                            {"std", {split.stats.std(0), split.stats.std(1), split.stats.std(2)}}};
  m["splits"] = json{{"train", records_to_json(split.train)},
                     {"query", records_to_json(split.query)},
                     {"gallery", records_to_json(split.gallery)}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write manifest: " + path);
  out << m.dump(1) << "\n";
}

DatasetSplit generate_toy_dataset(const ToyConfig& config, const std::string& out_dir) {
  if (config.train_ids < 2 || config.cams < 2) {
    throw ConfigError("toy dataset needs >=2 identities and >=2 cameras");
  }
  fs::create_directories(fs::path(out_dir) / "images" / "train");
  fs::create_directories(fs::path(out_dir) / "images" / "eval");

  DatasetSplit split;
  split.root = out_dir;
  split.profile = "toy";

  // Train identities occupy [0, train_ids); held-out eval identities start at
  // 1000 so the two vocabularies can never collide.
  for (int id = 0; id < config.train_ids; ++id) {
    for (int cam = 1; cam <= config.cams; ++cam) {
      for (int k = 0; k < config.train_images_per_id_cam; ++k) {
        const std::string rel =
            "images/train/" + toy_file_name(id, cam, k);
        img::Image im = render_toy_glyph(id, cam, k, config.image_size, config.seed);
        img::write_ppm((fs::path(out_dir) / rel).string(), im);
        split.train.push_back(ImageRecord{rel, id, cam});
      }
    }
  }
  for (int e = 0; e < config.eval_ids; ++e) {
    const int id = 1000 + e;
    for (int cam = 1; cam <= config.cams; ++cam) {
      for (int k = 0; k < config.eval_images_per_id_cam; ++k) {
        const std::string rel = "images/eval/" + toy_file_name(id, cam, k);
        img::Image im = render_toy_glyph(id, cam, k, config.image_size, config.seed);
        img::write_ppm((fs::path(out_dir) / rel).string(), im);
        // First image of each (id, cam) is a query, the rest are gallery.
        if (k == 0) {
          split.query.push_back(ImageRecord{rel, id, cam});
        } else {
          split.gallery.push_back(ImageRecord{rel, id, cam});
        }
      }
    }
  }
  sort_records(split.train);
  sort_records(split.query);
  sort_records(split.gallery);
  split.stats = compute_stats(out_dir, split.train);
  write_manifest(split, (fs::path(out_dir) / "manifest.json").string());
  return split;
}

// ---------------------------------------------------------------------------
// loading
// ---------------------------------------------------------------------------

namespace {

DatasetSplit load_toy(const std::string& root) {
  const std::string mpath = (fs::path(root) / "manifest.json").string();
  std::ifstream in(mpath);
  if (!in) throw ConfigError("toy dataset manifest not found: " + mpath);
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("invalid manifest " + mpath + ": " + e.what());
  }
  DatasetSplit split;
  split.root = root;
  split.profile = "toy";
  split.train = records_from_json(m.at("splits").at("train"));
  split.query = records_from_json(m.at("splits").at("query"));
  split.gallery = records_from_json(m.at("splits").at("gallery"));
  const auto& norm = m.at("normalization");
  for (int i = 0; i < 3; ++i) {
    split.stats.mean(i) = norm.at("mean").at(i).get<double>();
    split.stats.std(i) = norm.at("std").at(i).get<double>();
  }
  sort_records(split.train);
  sort_records(split.query);
  sort_records(split.gallery);
  const auto& counts = m.at("counts");
  if (counts.at("train").get<std::size_t>() != split.train.size() ||
      counts.at("query").get<std::size_t>() != split.query.size() ||
      counts.at("gallery").get<std::size_t>() != split.gallery.size()) {
    throw ConfigError("manifest counts disagree with split contents in " + mpath);
  }
  for (const auto& r : split.train) {
    if (!fs::exists(fs::path(root) / r.path)) {
      throw ConfigError("manifest references missing file: " + r.path);
    }
    break;  // spot-check one; full decode validation happens on use
  }
  return split;
}

std::vector<ImageRecord> scan_veri_dir(const fs::path& dir, const std::string& rel_prefix) {
  std::vector<ImageRecord> out;
  if (!fs::exists(dir)) throw ConfigError("dataset directory missing: " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    const std::string ext = entry.path().extension().string();
    if (ext != ".jpg" && ext != ".jpeg" && ext != ".JPG" && ext != ".ppm") continue;
    // <identity>_c<camera>_... e.g. 0002_c002_00030600_0.jpg
    int identity = -1, camera = -1;
    if (std::sscanf(name.c_str(), "%d_c%d_", &identity, &camera) != 2) {
      throw ParseError("unparseable image name: " + (dir / name).string());
    }
    out.push_back(ImageRecord{rel_prefix + "/" + name, identity, camera});
  }
  sort_records(out);
  return out;
}

DatasetSplit load_full(const std::string& root) {
  DatasetSplit split;
  split.root = root;
  split.profile = "full";
  split.train = scan_veri_dir(fs::path(root) / "image_train", "image_train");
  split.query = scan_veri_dir(fs::path(root) / "image_query", "image_query");
  split.gallery = scan_veri_dir(fs::path(root) / "image_test", "image_test");
  if (split.train.empty()) throw ConfigError("empty train split under " + root);
  if (split.query.empty()) throw ConfigError("empty query split under " + root);
  if (split.gallery.empty()) throw ConfigError("empty gallery split under " + root);
  split.stats = compute_stats(root, split.train);
  return split;
}

}  // namespace

DatasetSplit load_retrieval_dataset(const std::string& root, const std::string& profile) {
  if (profile == "toy") return load_toy(root);
  if (profile == "full") return load_full(root);
  throw ConfigError("unknown dataset profile: " + profile);
}

// ---------------------------------------------------------------------------
// pairs
// ---------------------------------------------------------------------------

std::vector<PairSpec> build_pairs(const std::vector<ImageRecord>& records, int n_pairs,
                                  double correlated_fraction, Rng& rng,
                                  int* skipped_tally) {
  if (correlated_fraction < 0.0 || correlated_fraction > 1.0) {
    throw ConfigError("correlated_fraction must lie in [0,1]");
  }
  // identity -> camera -> record indices
  std::map<int, std::map<int, std::vector<int>>> pool;
  for (int i = 0; i < static_cast<int>(records.size()); ++i) {
    pool[records[i].identity][records[i].camera].push_back(i);
  }
  std::vector<int> ids;
  for (auto& [id, cams] : pool) ids.push_back(id);
  if (ids.size() < 2) throw ConfigError("build_pairs: need at least two identities");

  int skipped = 0;
  std::vector<PairSpec> out;
  out.reserve(n_pairs);
  int guard = 0;
  while (static_cast<int>(out.size()) < n_pairs && guard < 1000 * n_pairs + 1000) {
    ++guard;
    const bool want_corr = rng.uniform() < correlated_fraction;
    if (want_corr) {
      const int id = ids[rng.uniform_int(0, static_cast<int>(ids.size()) - 1)];
      auto& cams = pool[id];
      if (cams.size() < 2) {
        ++skipped;
        continue;
      }
      std::vector<int> cam_keys;
      for (auto& [cam, v] : cams) cam_keys.push_back(cam);
      const int a = rng.uniform_int(0, static_cast<int>(cam_keys.size()) - 1);
      int b = rng.uniform_int(0, static_cast<int>(cam_keys.size()) - 2);
      if (b >= a) ++b;
      int c1 = cam_keys[std::min(a, b)], c2 = cam_keys[std::max(a, b)];
      const auto& v1 = cams[c1];
      const auto& v2 = cams[c2];
      PairSpec p;
      p.correlated = true;
      p.record_index[0] = v1[rng.uniform_int(0, static_cast<int>(v1.size()) - 1)];
      p.record_index[1] = v2[rng.uniform_int(0, static_cast<int>(v2.size()) - 1)];
      out.push_back(p);
    } else {
      const int ia = rng.uniform_int(0, static_cast<int>(ids.size()) - 1);
      int ib = rng.uniform_int(0, static_cast<int>(ids.size()) - 2);
      if (ib >= ia) ++ib;
      const auto& cams_a = pool[ids[ia]];
      const auto& cams_b = pool[ids[ib]];
      // Candidate pool pairs with distinct cameras; the lower camera id takes
      // the first view slot so the user/camera layout stays consistent.
      std::vector<std::pair<const std::vector<int>*, const std::vector<int>*>> combos;
      for (const auto& [ca, va] : cams_a) {
        for (const auto& [cb, vb] : cams_b) {
          if (ca < cb) combos.emplace_back(&va, &vb);
          else if (cb < ca) combos.emplace_back(&vb, &va);
        }
      }
      if (combos.empty()) {
        ++skipped;
        continue;
      }
      const auto& [p0, p1] = combos[rng.uniform_int(0, static_cast<int>(combos.size()) - 1)];
      PairSpec p;
      p.correlated = false;
      p.record_index[0] = (*p0)[rng.uniform_int(0, static_cast<int>(p0->size()) - 1)];
      p.record_index[1] = (*p1)[rng.uniform_int(0, static_cast<int>(p1->size()) - 1)];
      out.push_back(p);
    }
  }
  if (skipped_tally) *skipped_tally = skipped;
  return out;
}

void MultiViewSample::validate() const {
  if (images.size() != identities.size() || identities.size() != camera_ids.size()) {
    throw ShapeError("MultiViewSample: field lengths disagree");
  }
  for (std::size_t i = 0; i < camera_ids.size(); ++i) {
    for (std::size_t j = i + 1; j < camera_ids.size(); ++j) {
      if (camera_ids[i] == camera_ids[j]) {
        throw ConfigError("MultiViewSample: duplicate camera id within sample");
      }
    }
  }
  if (correlated) {
    for (std::size_t i = 1; i < identities.size(); ++i) {
      if (identities[i] != identities[0]) {
        throw ConfigError("MultiViewSample: correlated flag with mixed identities");
      }
    }
  }
}

MultiViewSample materialize(const DatasetSplit& split,
                            const std::vector<ImageRecord>& records,
                            const PairSpec& pair) {
  MultiViewSample s;
  for (int idx : pair.record_index) {
    const ImageRecord& r = records.at(idx);
    s.images.push_back(img::read_image((fs::path(split.root) / r.path).string()));
    s.identities.push_back(r.identity);
    s.camera_ids.push_back(r.camera);
  }
  s.correlated = pair.correlated;
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// pixel pipeline
// ---------------------------------------------------------------------------

ChannelStats compute_stats(const std::string& root, const std::vector<ImageRecord>& records,
                           int max_images) {
  if (records.empty()) throw ConfigError("compute_stats: no records");
  const int stride = std::max<std::size_t>(1, records.size() / max_images);
  Eigen::Vector3d sum = Eigen::Vector3d::Zero(), sq = Eigen::Vector3d::Zero();
  long count = 0;
  for (std::size_t i = 0; i < records.size(); i += stride) {
    const img::Image im = img::read_image((fs::path(root) / records[i].path).string());
    const long plane = static_cast<long>(im.h) * im.w;
    for (int ch = 0; ch < 3; ++ch) {
      const auto seg = im.data.segment(static_cast<long>(ch) * plane, plane);
      sum(ch) += seg.sum();
      sq(ch) += seg.squaredNorm();
    }
    count += plane;
  }
  ChannelStats stats;
  stats.mean = sum / count;
  for (int ch = 0; ch < 3; ++ch) {
    const double var = sq(ch) / count - stats.mean(ch) * stats.mean(ch);
    stats.std(ch) = std::sqrt(std::max(var, 1e-8));
  }
  return stats;
}

Eigen::RowVectorXd image_to_row(const img::Image& image, const ChannelStats& stats,
                                const codec::BackboneConfig& backbone) {
  img::Image im = image;
  if (im.h != backbone.in_h || im.w != backbone.in_w) {
    im = img::resize_cover_crop(im, backbone.in_h, backbone.in_w);
  }
  if (im.c != backbone.in_c) {
    throw ShapeError("image_to_row: channel count " + std::to_string(im.c) +
                     " != backbone " + std::to_string(backbone.in_c));
  }
  Eigen::RowVectorXd row(im.pixels());
  const long plane = static_cast<long>(im.h) * im.w;
  for (int ch = 0; ch < im.c; ++ch) {
    row.segment(ch * plane, plane) =
        ((im.data.segment(ch * plane, plane).array() - stats.mean(ch)) / stats.std(ch))
            .transpose();
  }
  return row;
}

Eigen::MatrixXd preload_pixels(const DatasetSplit& split,
                               const std::vector<ImageRecord>& records,
                               const codec::BackboneConfig& backbone) {
  Eigen::MatrixXd out(records.size(),
                      static_cast<long>(backbone.in_c) * backbone.in_h * backbone.in_w);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const img::Image im =
        img::read_image((fs::path(split.root) / records[i].path).string());
    out.row(static_cast<long>(i)) = image_to_row(im, split.stats, backbone);
  }
  return out;
}

}  // namespace coopsc::data
