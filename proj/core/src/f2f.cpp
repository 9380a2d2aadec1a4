#include "uptime/f2f.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "uptime/error.hpp"
#include "uptime/random.hpp"

namespace uptime {

bool SocialGraph::has_edge(std::size_t a, std::size_t b) const {
  if (a >= adj_.size() || b >= adj_.size()) return false;
  return std::binary_search(adj_[a].begin(), adj_[a].end(), b);
}

void SocialGraph::add_edge(std::size_t a, std::size_t b) {
  if (a >= adj_.size() || b >= adj_.size()) throw DataError("edge endpoint out of range");
  if (a == b) throw DataError("self-loop on node " + std::to_string(a));
  if (has_edge(a, b))
    throw DataError("duplicate edge " + std::to_string(a) + "-" + std::to_string(b));
  adj_[a].insert(std::lower_bound(adj_[a].begin(), adj_[a].end(), b), b);
  adj_[b].insert(std::lower_bound(adj_[b].begin(), adj_[b].end(), a), a);
  ++edges_;
}

void SocialGraph::remove_edge(std::size_t a, std::size_t b) {
  if (!has_edge(a, b)) throw DataError("no such edge");
  adj_[a].erase(std::lower_bound(adj_[a].begin(), adj_[a].end(), b));
  adj_[b].erase(std::lower_bound(adj_[b].begin(), adj_[b].end(), a));
  --edges_;
}

bool SocialGraph::connected() const {
  if (adj_.empty()) return true;
  std::vector<char> seen(adj_.size(), 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const auto n = stack.back();
    stack.pop_back();
    for (auto f : adj_[n])
      if (!seen[f]) {
        seen[f] = 1;
        ++count;
        stack.push_back(f);
      }
  }
  return count == adj_.size();
}

SocialGraph generate_ws_graph(std::size_t nodes, std::size_t degree, double rewire_p,
                              std::uint64_t seed) {
  if (degree % 2 != 0) throw DataError("degree must be even");
  if (degree >= nodes)
    throw DataError("degree " + std::to_string(degree) + " must be below node count " +
                    std::to_string(nodes));
  if (!(rewire_p >= 0.0 && rewire_p <= 1.0))
    throw DataError("rewiring probability must lie in [0,1]");
  SocialGraph g(nodes);
  for (std::size_t j = 1; j <= degree / 2; ++j)
    for (std::size_t u = 0; u < nodes; ++u) g.add_edge(u, (u + j) % nodes);

  Rng rng(seed);
  for (std::size_t j = 1; j <= degree / 2; ++j)
    for (std::size_t u = 0; u < nodes; ++u) {
      if (!(uniform01(rng) < rewire_p)) continue;
      if (g.degree(u) >= nodes - 1) continue;
      std::size_t w;
      do {
        w = uniform_index(rng, nodes);
      } while (w == u || g.has_edge(u, w));
      g.remove_edge(u, (u + j) % nodes);
      g.add_edge(u, w);
    }
  return g;
}

double clustering_coefficient(const SocialGraph& g) {
  if (g.node_count() == 0) return 0.0;
  double total = 0;
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    const auto& f = g.friends(n);
    if (f.size() < 2) continue;
    std::size_t links = 0;
    for (std::size_t i = 0; i < f.size(); ++i)
      for (std::size_t j = i + 1; j < f.size(); ++j)
        if (g.has_edge(f[i], f[j])) ++links;
    total += 2.0 * static_cast<double>(links) /
             (static_cast<double>(f.size()) * static_cast<double>(f.size() - 1));
  }
  return total / static_cast<double>(g.node_count());
}

std::vector<std::size_t> PlacementMapping::load() const {
  std::vector<std::size_t> l(holders.size(), 0);
  for (const auto& set : holders)
    for (auto h : set) {
      if (h >= l.size()) l.resize(h + 1, 0);
      ++l[h];
    }
  return l;
}

void PlacementMapping::validate(const SocialGraph& g) const {
  if (holders.size() != g.node_count())
    throw std::logic_error("mapping size differs from graph size");
  for (std::size_t owner = 0; owner < holders.size(); ++owner) {
    const auto& set = holders[owner];
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (i > 0 && set[i] <= set[i - 1])
        throw std::logic_error("holder set of node " + std::to_string(owner) +
                               " is not sorted and duplicate-free");
      if (!g.has_edge(owner, set[i]))
        throw std::logic_error("node " + std::to_string(set[i]) + " holds data of non-friend " +
                               std::to_string(owner));
    }
  }
  const auto l = load();
  for (std::size_t n = 0; n < l.size(); ++n)
    if (l[n] > capacity)
      throw std::logic_error("node " + std::to_string(n) + " exceeds capacity");
}

namespace {

constexpr double kExchangeEpsilon = 1e-12;

bool holds(const std::vector<std::size_t>& set, std::size_t n) {
  return std::binary_search(set.begin(), set.end(), n);
}
void insert_sorted(std::vector<std::size_t>& set, std::size_t n) {
  set.insert(std::lower_bound(set.begin(), set.end(), n), n);
}
void erase_sorted(std::vector<std::size_t>& set, std::size_t n) {
  set.erase(std::lower_bound(set.begin(), set.end(), n));
}

void check_graph(const SocialGraph& g, const std::vector<std::string>* names) {
  for (std::size_t n = 0; n < g.node_count(); ++n)
    if (g.degree(n) == 0)
      throw DataError("node " + (names ? (*names)[n] : std::to_string(n)) +
                      " has no friends");
}

void fill_stats(PlacementResult& r) {
  r.stats.empty_owners = 0;
  r.stats.under_replicated = 0;
  for (const auto& set : r.mapping.holders) {
    if (set.empty()) ++r.stats.empty_owners;
    if (set.size() < r.mapping.capacity) ++r.stats.under_replicated;
  }
}

/// P and 1 - P over the evaluation slots, row per node.
struct ProbabilityTable {
  std::size_t slots;
  std::vector<double> p, c;

  ProbabilityTable(const PredictionMatrix& m, SlotRange range)
      : slots(range.size()), p(m.user_count() * range.size()), c(p.size()) {
    for (std::size_t u = 0; u < m.user_count(); ++u)
      for (std::size_t t = 0; t < slots; ++t) {
        p[u * slots + t] = m.at(u, range.begin + t);
        c[u * slots + t] = 1.0 - p[u * slots + t];
      }
  }

  double gain(std::span<const std::size_t> set, std::size_t node,
              std::vector<double>& q) const {
    std::fill(q.begin(), q.end(), 1.0);
    for (auto h : set) {
      if (h == node) continue;
      const double* r = &c[h * slots];
      for (std::size_t t = 0; t < slots; ++t) q[t] *= r[t];
    }
    const double* pn = &p[node * slots];
    double sum = 0;
    for (std::size_t t = 0; t < slots; ++t) sum += q[t] * pn[t];
    return sum / static_cast<double>(slots);
  }

  double availability(std::span<const std::size_t> set, std::vector<double>& q) const {
    if (set.empty()) return 0.0;
    std::fill(q.begin(), q.end(), 1.0);
    for (auto h : set) {
      const double* r = &c[h * slots];
      for (std::size_t t = 0; t < slots; ++t) q[t] *= r[t];
    }
    double sum = 0;
    for (std::size_t t = 0; t < slots; ++t) sum += 1.0 - q[t];
    return sum / static_cast<double>(slots);
  }

  double objective(const PlacementMapping& m) const {
    std::vector<double> q(slots);
    double total = 0;
    for (const auto& set : m.holders) total += availability(set, q);
    return total;
  }
};

SlotRange resolve_slots(const PredictionMatrix& p, std::optional<SlotRange> slots) {
  const SlotRange r = slots.value_or(p.range());
  if (r.empty()) throw DataError("empty slot range");
  if (!p.range().covers(r)) throw DataError("slot range not covered by the predictions");
  return r;
}

PlacementResult random_init(const SocialGraph& g, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw DataError("capacity must be at least 1");
  PlacementResult r;
  r.mapping.capacity = k;
  r.mapping.holders.resize(g.node_count());
  Rng rng(seed);
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    auto friends = g.friends(n);
    const std::size_t take = std::min(k, friends.size());
    for (std::size_t i = 0; i < take; ++i) {
      std::swap(friends[i], friends[i + uniform_index(rng, friends.size() - i)]);
      insert_sorted(r.mapping.holders[friends[i]], n);
    }
  }
  return r;
}

}  // namespace

PlacementResult place_random(const SocialGraph& g, std::size_t k, std::uint64_t seed) {
  check_graph(g, nullptr);
  auto r = random_init(g, k, seed);
  r.stats.converged = true;
  fill_stats(r);
  return r;
}

PlacementResult place_predictive(const PredictionMatrix& p, const SocialGraph& g,
                                 std::size_t k, const PredictiveOptions& options) {
  if (p.user_count() != g.node_count())
    throw DataError("prediction users (" + std::to_string(p.user_count()) +
                    ") differ from graph nodes (" + std::to_string(g.node_count()) + ")");
  check_graph(g, &p.users());
  const SlotRange slots = resolve_slots(p, options.slots);
  auto r = random_init(g, k, options.seed);
  auto& holders = r.mapping.holders;
  if (options.check_invariants) r.mapping.validate(g);
  if (!options.optimize) {
    r.stats.converged = true;
    fill_stats(r);
    return r;
  }

  const ProbabilityTable table(p, slots);
  std::vector<double> q(table.slots);
  double objective = options.check_invariants ? table.objective(r.mapping) : 0.0;

  while (r.stats.sweeps < options.max_sweeps) {
    ++r.stats.sweeps;
    bool changed = false;
    for (std::size_t n = 0; n < g.node_count(); ++n) {
      std::optional<std::size_t> f0, f1;
      double d0 = std::numeric_limits<double>::infinity();
      double d1 = -std::numeric_limits<double>::infinity();
      for (auto f : g.friends(n)) {
        const double d = table.gain(holders[f], n, q);
        if (holds(holders[f], n)) {
          if (d < d0) {
            d0 = d;
            f0 = f;
          }
        } else if (d > d1) {
          d1 = d;
          f1 = f;
        }
      }
      if (!f0 || !f1 || !(d1 > d0 + kExchangeEpsilon)) continue;
      erase_sorted(holders[*f0], n);
      insert_sorted(holders[*f1], n);
      ++r.stats.exchanges;
      changed = true;
      if (options.check_invariants) {
        r.mapping.validate(g);
        const double next = table.objective(r.mapping);
        if (!(next > objective))
          throw std::logic_error("placement objective did not increase on an exchange");
        objective = next;
      }
    }
    if (!changed) {
      r.stats.converged = true;
      break;
    }
  }
  fill_stats(r);
  return r;
}

std::size_t agreement_count(const AvailabilityMatrix& m, SlotRange range, std::size_t a,
                            std::size_t b) {
  const auto ra = m.row(a), rb = m.row(b);
  std::size_t same = 0;
  for (std::size_t t = range.begin; t < range.end; ++t) same += ra[t] == rb[t];
  return same;
}

PlacementResult place_ra(const AvailabilityMatrix& ref, SlotRange ref_range,
                         const SocialGraph& g, std::size_t k, std::uint64_t seed,
                         bool check_invariants) {
  if (k == 0) throw DataError("capacity must be at least 1");
  if (ref.user_count() != g.node_count())
    throw DataError("reference matrix users differ from graph nodes");
  if (ref_range.empty() || ref_range.end > ref.slot_count())
    throw DataError("reference range outside the matrix");
  check_graph(g, &ref.users());

  const std::size_t nodes = g.node_count();
  constexpr std::size_t kUnknown = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> corr(nodes * nodes, kUnknown);
  auto correlation = [&](std::size_t a, std::size_t b) {
    auto& c = corr[a * nodes + b];
    if (c == kUnknown) c = corr[b * nodes + a] = agreement_count(ref, ref_range, a, b);
    return c;
  };

  PlacementResult r;
  r.mapping.capacity = k;
  r.mapping.holders.resize(nodes);
  auto& holders = r.mapping.holders;
  std::vector<std::size_t> free(nodes, k);
  std::size_t total_free = nodes * k;
  Rng rng(seed);
  std::vector<std::size_t> eligible;

  while (total_free > 0) {
    ++r.stats.sweeps;
    bool progress = false;
    for (std::size_t n = 0; n < nodes; ++n) {
      eligible.clear();
      for (auto f : g.friends(n))
        if (free[f] > 0 && !holds(holders[n], f)) eligible.push_back(f);
      if (eligible.empty()) continue;
      const std::size_t first = eligible[uniform_index(rng, eligible.size())];
      insert_sorted(holders[n], first);
      --free[first];
      --total_free;
      progress = true;
      ++r.stats.exchanges;
      if (eligible.size() > 1) {
        std::optional<std::size_t> best;
        std::size_t best_c = 0;
        for (auto f : eligible) {
          if (f == first) continue;
          const auto c = correlation(first, f);
          if (!best || c < best_c) {
            best = f;
            best_c = c;
          }
        }
        insert_sorted(holders[n], *best);
        --free[*best];
        --total_free;
        ++r.stats.exchanges;
      }
      if (check_invariants) r.mapping.validate(g);
    }
    if (!progress) break;
  }
  r.stats.converged = true;
  fill_stats(r);
  return r;
}

double holder_gain(const PredictionMatrix& p, std::span<const std::size_t> set,
                   std::size_t node, SlotRange slots) {
  slots = resolve_slots(p, slots);
  double sum = 0;
  for (std::size_t t = slots.begin; t < slots.end; ++t) {
    double q = 1.0;
    for (auto h : set)
      if (h != node) q *= 1.0 - p.at(h, t);
    sum += q * p.at(node, t);
  }
  return sum / static_cast<double>(slots.size());
}

double placement_objective(const PredictionMatrix& p, const PlacementMapping& mapping,
                           SlotRange slots) {
  if (mapping.owner_count() != p.user_count())
    throw DataError("mapping owners differ from prediction users");
  return ProbabilityTable(p, resolve_slots(p, slots)).objective(mapping);
}

double predicted_placement_availability(const PredictionMatrix& p,
                                        const PlacementMapping& mapping, SlotRange slots) {
  if (mapping.owner_count() == 0) throw DataError("empty mapping");
  return placement_objective(p, mapping, slots) /
         static_cast<double>(mapping.owner_count());
}

double measure_placement_availability(const AvailabilityMatrix& test,
                                      const PlacementMapping& mapping, SlotRange slots) {
  if (mapping.owner_count() == 0) throw DataError("empty mapping");
  if (slots.empty() || slots.end > test.slot_count())
    throw DataError("measurement slots outside the test matrix");
  double total = 0;
  for (const auto& set : mapping.holders) {
    for (auto h : set)
      if (h >= test.user_count()) throw DataError("holder outside the test matrix");
    if (set.empty()) continue;
    std::size_t up = 0;
    for (std::size_t t = slots.begin; t < slots.end; ++t)
      for (auto h : set)
        if (test.at(h, t)) {
          ++up;
          break;
        }
    total += static_cast<double>(up) / static_cast<double>(slots.size());
  }
  return total / static_cast<double>(mapping.owner_count());
}

}  // namespace uptime
