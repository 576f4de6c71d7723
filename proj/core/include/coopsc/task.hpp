#ifndef COOPSC_TASK_HPP
#define COOPSC_TASK_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace coopsc::task {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Server-side reference set.
struct RetrievalIndex {
  Mat features;                 // K x F
  std::vector<int> identities;  // K
  std::vector<int> cameras;     // K

  int size() const { return static_cast<int>(identities.size()); }
  void validate() const;
};

struct RankedEntry {
  int gallery_index;
  double distance;
  bool relevant;
};

// Gallery sorted by ascending distance after protocol filtering; relevance
// bits set per entry.
struct RankedList {
  std::vector<RankedEntry> entries;
  int relevant_total = 0;  // relevant gallery items for this query
};

// A query issued against the index. `identities` is usually one identity;
// a fused query formed from a gate false-positive carries both constituent
// identities. Gallery items sharing identity AND camera with one of
// id_cam_pairs are excluded from scoring (standard re-id protocol).
struct QuerySpec {
  Vec feature;
  std::vector<int> identities;
  std::vector<std::pair<int, int>> id_cam_pairs;
  bool failed = false;  // undecodable transmission: scores zero at every rank
};

// Euclidean nearest-neighbour ranking over the whole index, ties broken by
// gallery index. No filtering, no relevance; order only.
std::vector<RankedEntry> retrieve(const Vec& query, const RetrievalIndex& index);

// retrieve + protocol filtering + relevance bits. A failed query yields an
// empty list with relevant_total counted (so it scores zero, not excluded).
RankedList score_query(const QuerySpec& query, const RetrievalIndex& index);

struct MetricResult {
  double value = 0.0;
  int used = 0;      // queries contributing to the mean
  int excluded = 0;  // queries with zero relevant items (warning tally)
};

// Fraction of queries with >=1 relevant entry among the first n.
MetricResult rank_n_accuracy(const std::vector<RankedList>& lists, int n);

// Mean over queries of average precision (mean of precision at each relevant
// position, divided by the number of relevant items).
MetricResult mean_average_precision(const std::vector<RankedList>& lists);

}  // namespace coopsc::task

#endif
