#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "uptime/prediction.hpp"
#include "uptime/random.hpp"
#include "uptime/trace.hpp"

namespace uptime {

/// order[position] = node index; node indices refer to rows of the
/// prediction / availability matrices the ring is evaluated against.
struct RingAssignment {
  std::vector<std::size_t> order;

  std::size_t size() const { return order.size(); }
  /// Throws DataError unless `order` is a permutation of [0, size).
  void validate() const;
  std::vector<std::size_t> positions() const;
};

RingAssignment random_ring(std::size_t nodes, Rng& rng);

/// Mean over `slots` of 1 - prod_{n in members} (1 - P[n][t]), i.e. the
/// probability that at least one member is online under independence.
double predicted_set_availability(const PredictionMatrix& p,
                                  std::span<const std::size_t> members, SlotRange slots);

/// One set per ring position: the node there and its n-1 successors.
std::vector<std::vector<std::size_t>> neighbor_sets(const RingAssignment& ring,
                                                    std::size_t n);

/// Mean predicted availability over all neighbor sets.
double ring_objective(const PredictionMatrix& p, const RingAssignment& ring,
                      std::size_t n, SlotRange slots);

struct DhtOptions {
  std::size_t iterations = 1000;  // sweeps over all nodes
  std::uint64_t seed = 0;
  std::optional<SlotRange> slots;  // defaults to the prediction range
  /// Recompute the global objective around every committed swap and throw
  /// std::logic_error if it decreased.
  bool verify_objective = false;
};

struct DhtResult {
  RingAssignment initial;
  RingAssignment ring;
  std::size_t candidates = 0;
  std::size_t committed = 0;
  std::size_t verified = 0;
  double initial_objective = 0;
  double final_objective = 0;
};

/// Swap-based identifier assignment: starting from a seeded random ring,
/// each sweep visits nodes in index order, draws a random partner and
/// swaps their positions iff PA(node) + PA(partner) increases, where PA(v)
/// is the mean predicted availability of the n neighbor sets containing v.
DhtResult assign_identifiers(const PredictionMatrix& p, std::size_t n,
                             const DhtOptions& options = {});

/// Mean over neighbor sets of the fraction of `slots` in which at least
/// one member is online in `test` (row i = node i).
double measure_availability(const AvailabilityMatrix& test, const RingAssignment& ring,
                            std::size_t n, SlotRange slots);

/// Smallest n with (1 - avg_avail)^n < target_unavail.
std::size_t redundancy_for_target(double avg_avail, double target_unavail = 0.01);

/// log(1 - a1) / log(1 - a0) - 1.
double equivalent_redundancy_increase(double a0, double a1);

}  // namespace uptime
