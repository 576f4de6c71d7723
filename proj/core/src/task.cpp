#include "coopsc/task.hpp"

#include <algorithm>

#include "coopsc/errors.hpp"

namespace coopsc::task {

void RetrievalIndex::validate() const {
  if (features.rows() != static_cast<long>(identities.size()) ||
      identities.size() != cameras.size()) {
    throw ShapeError("RetrievalIndex: feature/label/camera counts disagree");
  }
}

std::vector<RankedEntry> retrieve(const Vec& query, const RetrievalIndex& index) {
  index.validate();
  if (index.size() == 0) throw EmptyIndexError("retrieve: empty gallery");
  if (query.size() != index.features.cols()) {
    throw ShapeError("retrieve: query dimension mismatch");
  }
  std::vector<RankedEntry> out(index.size());
  for (int i = 0; i < index.size(); ++i) {
    out[i] = RankedEntry{i, (index.features.row(i).transpose() - query).norm(), false};
  }
  std::stable_sort(out.begin(), out.end(), [](const RankedEntry& a, const RankedEntry& b) {
    return a.distance < b.distance;
  });
  return out;
}

namespace {
bool is_relevant(const QuerySpec& q, const RetrievalIndex& index, int g) {
  for (int id : q.identities) {
    if (index.identities[g] == id) return true;
  }
  return false;
}
bool is_excluded(const QuerySpec& q, const RetrievalIndex& index, int g) {
  for (const auto& [id, cam] : q.id_cam_pairs) {
    if (index.identities[g] == id && index.cameras[g] == cam) return true;
  }
  return false;
}
}  // namespace

RankedList score_query(const QuerySpec& query, const RetrievalIndex& index) {
  index.validate();
  RankedList list;
  for (int g = 0; g < index.size(); ++g) {
    if (!is_excluded(query, index, g) && is_relevant(query, index, g)) {
      ++list.relevant_total;
    }
  }
  if (query.failed) return list;  // empty ranking, relevant_total kept

  const std::vector<RankedEntry> ranked = retrieve(query.feature, index);
  list.entries.reserve(ranked.size());
  for (const RankedEntry& e : ranked) {
    if (is_excluded(query, index, e.gallery_index)) continue;
    RankedEntry kept = e;
    kept.relevant = is_relevant(query, index, e.gallery_index);
    list.entries.push_back(kept);
  }
  return list;
}

MetricResult rank_n_accuracy(const std::vector<RankedList>& lists, int n) {
  if (n < 1) throw ConfigError("rank_n_accuracy: n must be >= 1");
  MetricResult res;
  double hits = 0.0;
  for (const RankedList& list : lists) {
    if (list.relevant_total == 0) {
      ++res.excluded;
      continue;
    }
    ++res.used;
    const int limit = std::min<int>(n, static_cast<int>(list.entries.size()));
    for (int i = 0; i < limit; ++i) {
      if (list.entries[i].relevant) {
        hits += 1.0;
        break;
      }
    }
  }
  res.value = res.used > 0 ? hits / res.used : 0.0;
  return res;
}

MetricResult mean_average_precision(const std::vector<RankedList>& lists) {
  MetricResult res;
  double ap_sum = 0.0;
  for (const RankedList& list : lists) {
    if (list.relevant_total == 0) {
      ++res.excluded;
      continue;
    }
    ++res.used;
    double ap = 0.0;
    int found = 0;
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
      if (list.entries[i].relevant) {
        ++found;
        ap += static_cast<double>(found) / static_cast<double>(i + 1);
      }
    }
    ap_sum += ap / list.relevant_total;
  }
  res.value = res.used > 0 ? ap_sum / res.used : 0.0;
  return res;
}

}  // namespace coopsc::task
