#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uptime/trace.hpp"

namespace uptime {

struct ClusterResult {
  std::vector<std::size_t> assignments;          // per user
  std::vector<std::vector<double>> centroids;    // k curves over the range
  std::vector<std::size_t> sizes;
  double inertia = 0;
  std::size_t restart = 0;  // index of the winning restart
  std::vector<double> inertia_history;  // after each assignment step
};

struct KMeansOptions {
  std::size_t k = 4;
  std::size_t restarts = 10;
  std::size_t max_iter = 300;
  std::uint64_t seed = 0;
  /// Accept ranges that are not exactly one week long.
  bool any_length = false;
};

/// Lloyd iterations with k-means++ seeding over the 0/1 rows of `range`,
/// squared Euclidean distance; the lowest-inertia restart wins (ties go to
/// the earlier restart). A cluster that empties is re-seeded with the point
/// farthest from its centroid.
ClusterResult kmeans_availability(const AvailabilityMatrix& m, SlotRange range,
                                  const KMeansOptions& options = {});

/// "cluster_id,size" then one centroid curve per cluster.
std::string format_clusters(const ClusterResult& r);

}  // namespace uptime
