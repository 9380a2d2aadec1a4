#include "uptime/dht.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "uptime/error.hpp"

namespace uptime {

void RingAssignment::validate() const {
  std::vector<char> seen(order.size(), 0);
  for (auto v : order) {
    if (v >= order.size() || seen[v]) throw DataError("ring order is not a permutation");
    seen[v] = 1;
  }
}

std::vector<std::size_t> RingAssignment::positions() const {
  std::vector<std::size_t> pos(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  return pos;
}

RingAssignment random_ring(std::size_t nodes, Rng& rng) {
  RingAssignment ring;
  ring.order.resize(nodes);
  std::iota(ring.order.begin(), ring.order.end(), std::size_t{0});
  for (std::size_t i = nodes; i > 1; --i)
    std::swap(ring.order[i - 1], ring.order[uniform_index(rng, i)]);
  return ring;
}

namespace {

void check_slots(const PredictionMatrix& p, SlotRange slots) {
  if (slots.empty()) throw DataError("empty slot range");
  if (!p.range().covers(slots))
    throw DataError("slot range not covered by the prediction matrix");
}

/// 1 - P restricted to the evaluation slots, row per node.
class Complement {
 public:
  Complement(const PredictionMatrix& p, SlotRange slots)
      : slots_(slots.size()), values_(p.user_count() * slots.size()) {
    for (std::size_t u = 0; u < p.user_count(); ++u)
      for (std::size_t t = 0; t < slots_; ++t)
        values_[u * slots_ + t] = 1.0 - p.at(u, slots.begin + t);
  }
  const double* row(std::size_t u) const { return values_.data() + u * slots_; }
  std::size_t slots() const { return slots_; }

 private:
  std::size_t slots_;
  std::vector<double> values_;
};

/// Set availability of the window starting at ring position `start`.
double window_availability(const Complement& c, const std::vector<std::size_t>& order,
                           std::size_t start, std::size_t n, std::vector<double>& q) {
  const std::size_t nodes = order.size(), slots = c.slots();
  const double* first = c.row(order[start]);
  std::copy(first, first + slots, q.begin());
  for (std::size_t k = 1; k < n; ++k) {
    const double* r = c.row(order[(start + k) % nodes]);
    for (std::size_t t = 0; t < slots; ++t) q[t] *= r[t];
  }
  double sum = 0;
  for (std::size_t t = 0; t < slots; ++t) sum += 1.0 - q[t];
  return sum / static_cast<double>(slots);
}

double objective_from_scratch(const Complement& c, const std::vector<std::size_t>& order,
                              std::size_t n) {
  std::vector<double> q(c.slots());
  double sum = 0;
  for (std::size_t s = 0; s < order.size(); ++s) sum += window_availability(c, order, s, n, q);
  return sum / static_cast<double>(order.size());
}

}  // namespace

double predicted_set_availability(const PredictionMatrix& p,
                                  std::span<const std::size_t> members, SlotRange slots) {
  if (members.empty()) throw DataError("predicted_set_availability: empty member set");
  check_slots(p, slots);
  double sum = 0;
  for (std::size_t t = slots.begin; t < slots.end; ++t) {
    double q = 1.0;
    for (auto m : members) {
      if (m >= p.user_count()) throw DataError("member index out of range");
      q *= 1.0 - p.at(m, t);
    }
    sum += 1.0 - q;
  }
  return sum / static_cast<double>(slots.size());
}

std::vector<std::vector<std::size_t>> neighbor_sets(const RingAssignment& ring,
                                                    std::size_t n) {
  ring.validate();
  const std::size_t nodes = ring.size();
  if (n == 0 || n > nodes)
    throw DataError("replica count " + std::to_string(n) + " invalid for " +
                    std::to_string(nodes) + " nodes");
  std::vector<std::vector<std::size_t>> sets(nodes);
  for (std::size_t s = 0; s < nodes; ++s)
    for (std::size_t k = 0; k < n; ++k) sets[s].push_back(ring.order[(s + k) % nodes]);
  return sets;
}

double ring_objective(const PredictionMatrix& p, const RingAssignment& ring,
                      std::size_t n, SlotRange slots) {
  check_slots(p, slots);
  ring.validate();
  if (ring.size() != p.user_count()) throw DataError("ring size != prediction users");
  if (n == 0 || n > ring.size()) throw DataError("invalid replica count");
  return objective_from_scratch(Complement(p, slots), ring.order, n);
}

DhtResult assign_identifiers(const PredictionMatrix& p, std::size_t n,
                             const DhtOptions& options) {
  const std::size_t nodes = p.user_count();
  if (n == 0 || n > nodes)
    throw DataError("replica count " + std::to_string(n) + " invalid for " +
                    std::to_string(nodes) + " nodes");
  const SlotRange slots = options.slots.value_or(p.range());
  check_slots(p, slots);
  const Complement comp(p, slots);

  Rng rng(options.seed);
  DhtResult result;
  result.initial = random_ring(nodes, rng);
  auto order = result.initial.order;
  auto pos = result.initial.positions();

  std::vector<double> q(comp.slots());
  std::vector<double> value(nodes);
  for (std::size_t s = 0; s < nodes; ++s) value[s] = window_availability(comp, order, s, n, q);

  // Windows containing ring position x start at x-n+1 .. x.
  auto window_sum = [&](std::size_t x, const std::vector<double>& v) {
    double sum = 0;
    for (std::size_t k = 0; k < n; ++k) sum += v[(x + nodes - k) % nodes];
    return sum / static_cast<double>(n);
  };

  std::vector<double> trial = value;
  std::vector<std::size_t> touched;
  std::vector<char> mark(nodes, 0);
  result.initial_objective =
      std::accumulate(value.begin(), value.end(), 0.0) / static_cast<double>(nodes);

  if (nodes > 1) {
    for (std::size_t iter = 0; iter < options.iterations; ++iter) {
      for (std::size_t v = 0; v < nodes; ++v) {
        std::size_t w = uniform_index(rng, nodes - 1);
        if (w >= v) ++w;
        ++result.candidates;
        const std::size_t pv = pos[v], pw = pos[w];
        const double a0 = window_sum(pv, value) + window_sum(pw, value);

        std::swap(order[pv], order[pw]);
        touched.clear();
        for (std::size_t x : {pv, pw})
          for (std::size_t k = 0; k < n; ++k) {
            const std::size_t s = (x + nodes - k) % nodes;
            if (!mark[s]) {
              mark[s] = 1;
              touched.push_back(s);
              trial[s] = window_availability(comp, order, s, n, q);
            }
          }
        // After the swap v sits at pw and w at pv.
        const double a1 = window_sum(pw, trial) + window_sum(pv, trial);

        if (a0 < a1) {
          double before = 0;
          if (options.verify_objective) {
            std::swap(order[pv], order[pw]);
            before = objective_from_scratch(comp, order, n);
            std::swap(order[pv], order[pw]);
          }
          for (auto s : touched) value[s] = trial[s];
          pos[v] = pw;
          pos[w] = pv;
          ++result.committed;
          if (options.verify_objective) {
            const double after = objective_from_scratch(comp, order, n);
            if (after < before - 1e-12)
              throw std::logic_error("global objective decreased on a committed swap");
            ++result.verified;
          }
        } else {
          std::swap(order[pv], order[pw]);
          for (auto s : touched) trial[s] = value[s];
        }
        for (auto s : touched) mark[s] = 0;
      }
    }
  }

  result.ring.order = std::move(order);
  result.final_objective = objective_from_scratch(comp, result.ring.order, n);
  return result;
}

double measure_availability(const AvailabilityMatrix& test, const RingAssignment& ring,
                            std::size_t n, SlotRange slots) {
  if (slots.empty() || slots.end > test.slot_count())
    throw DataError("measurement slots outside the test matrix");
  if (ring.size() > test.user_count()) throw DataError("ring has more nodes than test rows");
  const auto sets = neighbor_sets(ring, n);
  double total = 0;
  for (const auto& set : sets) {
    std::size_t up = 0;
    for (std::size_t t = slots.begin; t < slots.end; ++t)
      for (auto m : set)
        if (test.at(m, t)) {
          ++up;
          break;
        }
    total += static_cast<double>(up) / static_cast<double>(slots.size());
  }
  return total / static_cast<double>(sets.size());
}

std::size_t redundancy_for_target(double avg_avail, double target_unavail) {
  if (!(avg_avail > 0.0 && avg_avail < 1.0))
    throw DataError("average availability must lie strictly inside (0,1)");
  if (!(target_unavail > 0.0 && target_unavail < 1.0))
    throw DataError("target unavailability must lie strictly inside (0,1)");
  std::size_t n = 1;
  double unavail = 1.0 - avg_avail;
  while (!(unavail < target_unavail)) {
    unavail *= 1.0 - avg_avail;
    ++n;
  }
  return n;
}

double equivalent_redundancy_increase(double a0, double a1) {
  if (!(a0 > 0.0 && a0 < 1.0 && a1 > 0.0 && a1 < 1.0))
    throw DataError("availabilities must lie strictly inside (0,1)");
  return std::log1p(-a1) / std::log1p(-a0) - 1.0;
}

}  // namespace uptime
