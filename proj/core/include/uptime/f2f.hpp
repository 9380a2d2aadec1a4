#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "uptime/prediction.hpp"
#include "uptime/trace.hpp"

namespace uptime {

/// Undirected simple graph over node indices [0, nodes).
class SocialGraph {
 public:
  SocialGraph() = default;
  explicit SocialGraph(std::size_t nodes) : adj_(nodes) {}

  std::size_t node_count() const { return adj_.size(); }
  std::size_t edge_count() const { return edges_; }
  /// Sorted neighbor list.
  const std::vector<std::size_t>& friends(std::size_t n) const { return adj_[n]; }
  std::size_t degree(std::size_t n) const { return adj_[n].size(); }
  bool has_edge(std::size_t a, std::size_t b) const;

  /// Throws DataError on self-loops, duplicates or out-of-range nodes.
  void add_edge(std::size_t a, std::size_t b);
  void remove_edge(std::size_t a, std::size_t b);

  bool connected() const;

 private:
  std::vector<std::vector<std::size_t>> adj_;
  std::size_t edges_ = 0;
};

/// Ring lattice with degree/2 neighbors per side; each lattice edge (u, v)
/// is then rewired with probability `rewire_p` to (u, w), w uniform among
/// nodes that are neither u nor already adjacent to u.
SocialGraph generate_ws_graph(std::size_t nodes, std::size_t degree = 20,
                              double rewire_p = 0.5, std::uint64_t seed = 0);

/// Mean local clustering coefficient (nodes of degree < 2 count as 0).
double clustering_coefficient(const SocialGraph& g);

/// holders[owner] lists the nodes that store owner's data, sorted.
struct PlacementMapping {
  std::size_t capacity = 0;
  std::vector<std::vector<std::size_t>> holders;

  std::size_t owner_count() const { return holders.size(); }
  /// Number of objects each node stores.
  std::vector<std::size_t> load() const;
  /// Throws std::logic_error if a holder is not a friend of its owner, a
  /// holder set has duplicates, or a node exceeds the capacity.
  void validate(const SocialGraph& g) const;
};

struct PlacementStats {
  std::size_t sweeps = 0;      // optimization sweeps / allocation rounds
  std::size_t exchanges = 0;   // committed moves
  bool converged = false;
  std::size_t empty_owners = 0;         // owners without any holder
  std::size_t under_replicated = 0;     // owners with fewer than capacity holders
};

struct PlacementResult {
  PlacementMapping mapping;
  PlacementStats stats;
};

struct PredictiveOptions {
  std::optional<SlotRange> slots;  // defaults to the prediction range
  std::uint64_t seed = 0;
  bool optimize = true;
  std::size_t max_sweeps = 10000;
  /// Validate the mapping and recheck the global objective after every
  /// committed exchange; throws std::logic_error on a violation.
  bool check_invariants = false;
};

/// Every node stores data for min(k, degree) random friends; then nodes
/// are swept in index order, each moving its stored unit from the friend
/// whose data gains least from it to the non-held friend gaining most,
/// until a sweep commits no change.
PlacementResult place_predictive(const PredictionMatrix& p, const SocialGraph& g,
                                 std::size_t k, const PredictiveOptions& options = {});

/// The random initialization of place_predictive alone.
PlacementResult place_random(const SocialGraph& g, std::size_t k, std::uint64_t seed);

/// Random & anti-correlated allocation: every node has k free units; in
/// rounds over the nodes, an owner takes a random friend with free space
/// as holder, then the eligible friend agreeing least often with it.
PlacementResult place_ra(const AvailabilityMatrix& ref, SlotRange ref_range,
                         const SocialGraph& g, std::size_t k, std::uint64_t seed,
                         bool check_invariants = false);

/// Number of slots in `range` where rows a and b agree.
std::size_t agreement_count(const AvailabilityMatrix& m, SlotRange range, std::size_t a,
                            std::size_t b);

/// Increase in predicted availability of holder set `set` due to `node`:
/// PA(set + node) - PA(set - node), with PA(empty) = 0.
double holder_gain(const PredictionMatrix& p, std::span<const std::size_t> set,
                   std::size_t node, SlotRange slots);

/// Sum over owners of the predicted availability of their holder sets.
double placement_objective(const PredictionMatrix& p, const PlacementMapping& mapping,
                           SlotRange slots);

/// Mean over owners of predicted availability of their holder sets.
double predicted_placement_availability(const PredictionMatrix& p,
                                        const PlacementMapping& mapping, SlotRange slots);

/// Mean over owners of the fraction of `slots` with at least one holder
/// online in `test`; owners without holders count 0.
double measure_placement_availability(const AvailabilityMatrix& test,
                                      const PlacementMapping& mapping, SlotRange slots);

}  // namespace uptime
