#include "uptime/cluster.hpp"

#include <limits>

#include "uptime/error.hpp"
#include "uptime/parallel.hpp"
#include "uptime/random.hpp"
#include "uptime/text_io.hpp"

namespace uptime {

namespace {

using Points = std::vector<std::vector<double>>;

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

ClusterResult lloyd(const Points& pts, std::size_t k, std::size_t max_iter, Rng& rng) {
  const std::size_t n = pts.size(), dim = pts[0].size();
  ClusterResult r;

  // k-means++ seeding.
  r.centroids.push_back(pts[uniform_index(rng, n)]);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  while (r.centroids.size() < k) {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = std::min(best[i], sq_dist(pts[i], r.centroids.back()));
      total += best[i];
    }
    std::size_t pick = uniform_index(rng, n);
    if (total > 0) {
      double x = uniform01(rng) * total;
      for (std::size_t i = 0; i < n; ++i) {
        x -= best[i];
        if (x < 0) {
          pick = i;
          break;
        }
      }
    }
    r.centroids.push_back(pts[pick]);
  }

  r.assignments.assign(n, 0);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    bool changed = iter == 0;
    double current = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t arg = 0;
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dc = sq_dist(pts[i], r.centroids[c]);
        if (dc < d) {
          d = dc;
          arg = c;
        }
      }
      if (arg != r.assignments[i]) changed = true;
      r.assignments[i] = arg;
      current += d;
    }
    r.inertia_history.push_back(current);
    if (!changed) break;

    r.sizes.assign(k, 0);
    Points sums(k, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      ++r.sizes[r.assignments[i]];
      for (std::size_t j = 0; j < dim; ++j) sums[r.assignments[i]][j] += pts[i][j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (r.sizes[c] == 0) {
        std::size_t far = 0;
        double fd = -1;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = sq_dist(pts[i], r.centroids[r.assignments[i]]);
          if (d > fd) {
            fd = d;
            far = i;
          }
        }
        r.centroids[c] = pts[far];
        continue;
      }
      for (std::size_t j = 0; j < dim; ++j)
        r.centroids[c][j] = sums[c][j] / static_cast<double>(r.sizes[c]);
    }
  }

  // Final centroids are exact member means of the final assignment.
  r.sizes.assign(k, 0);
  Points sums(k, std::vector<double>(dim, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    ++r.sizes[r.assignments[i]];
    for (std::size_t j = 0; j < dim; ++j) sums[r.assignments[i]][j] += pts[i][j];
  }
  r.inertia = 0;
  for (std::size_t c = 0; c < k; ++c)
    if (r.sizes[c] > 0)
      for (std::size_t j = 0; j < dim; ++j)
        r.centroids[c][j] = sums[c][j] / static_cast<double>(r.sizes[c]);
  for (std::size_t i = 0; i < n; ++i)
    r.inertia += sq_dist(pts[i], r.centroids[r.assignments[i]]);
  return r;
}

}  // namespace

ClusterResult kmeans_availability(const AvailabilityMatrix& m, SlotRange range,
                                  const KMeansOptions& options) {
  if (range.empty() || range.end > m.slot_count())
    throw DataError("cluster range outside the matrix");
  if (!options.any_length && range.size() != m.slots_per_week())
    throw DataError("cluster range must span exactly one week (" +
                    std::to_string(m.slots_per_week()) + " slots)");
  if (options.k == 0) throw DataError("k must be >= 1");
  if (options.k > m.user_count())
    throw DataError("k=" + std::to_string(options.k) + " exceeds user count " +
                    std::to_string(m.user_count()));
  Points pts(m.user_count(), std::vector<double>(range.size()));
  for (std::size_t u = 0; u < m.user_count(); ++u)
    for (std::size_t t = 0; t < range.size(); ++t)
      pts[u][t] = m.at(u, range.begin + t) ? 1.0 : 0.0;

  const std::size_t restarts = std::max<std::size_t>(1, options.restarts);
  std::vector<ClusterResult> results(restarts);
  parallel_for(restarts, [&](std::size_t i) {
    Rng rng(derive_seed(options.seed, "kmeans.restart", i));
    results[i] = lloyd(pts, options.k, options.max_iter, rng);
    results[i].restart = i;
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < restarts; ++i)
    if (results[i].inertia < results[best].inertia) best = i;
  return std::move(results[best]);
}

std::string format_clusters(const ClusterResult& r) {
  std::string out = "cluster_id,size\n";
  for (std::size_t c = 0; c < r.sizes.size(); ++c)
    out += std::to_string(c) + "," + std::to_string(r.sizes[c]) + "\n";
  out += "cluster_id,centroid\n";
  for (std::size_t c = 0; c < r.centroids.size(); ++c) {
    out += std::to_string(c);
    for (double v : r.centroids[c]) out += "," + text::format_fixed(v, 6);
    out += "\n";
  }
  return out;
}

}  // namespace uptime
