#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace oracle {

Grid overlap_scan(std::span<const uptime::SessionEvent> events, std::int64_t origin,
                  std::int64_t slot_seconds, std::size_t horizon,
                  std::vector<std::string>* ids) {
  std::map<std::string, std::vector<std::uint8_t>> rows;
  for (const auto& e : events) rows.try_emplace(e.user_id, horizon, 0);
  for (const auto& e : events)
    for (std::size_t t = 0; t < horizon; ++t) {
      const std::int64_t lo = origin + static_cast<std::int64_t>(t) * slot_seconds;
      const std::int64_t hi = lo + slot_seconds;
      if (e.login_ts < hi && e.logout_ts > lo) rows[e.user_id][t] = 1;
    }
  Grid out;
  if (ids) ids->clear();
  for (auto& [id, row] : rows) {
    if (ids) ids->push_back(id);
    out.push_back(row);
  }
  return out;
}

std::pair<long, long> filtered_counts(const uptime::AvailabilityMatrix& m,
                                      uptime::SlotRange range, long user,
                                      std::size_t period, std::size_t target) {
  long on = 0, off = 0;
  for (std::size_t u = 0; u < m.user_count(); ++u) {
    if (user >= 0 && static_cast<std::size_t>(user) != u) continue;
    for (std::size_t t = range.begin; t < range.end; ++t) {
      if (t % period != target % period) continue;
      if (m.at(u, t)) ++on;
      else ++off;
    }
  }
  return {on, off};
}

long double log_posterior(const Eigen::VectorXd& beta, const uptime::LogisticData& data,
                          const uptime::GaussianPrior& prior) {
  long double sum = 0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    long double a = 0;
    for (Eigen::Index j = 0; j < data.dim(); ++j)
      a += static_cast<long double>(data.x(i, j)) * beta(j);
    // log sigma(a) = -log(1 + e^-a)
    const long double lp = a >= 0 ? -std::log1p(std::exp(-a)) : a - std::log1p(std::exp(a));
    const long double ln = lp - a;  // log(1 - sigma(a))
    sum += data.y(i) > 0.5 ? lp : ln;
  }
  const Eigen::VectorXd d = beta - prior.mean;
  const Eigen::VectorXd s = prior.covariance.ldlt().solve(d);
  long double quad = 0;
  for (Eigen::Index j = 0; j < d.size(); ++j) quad += static_cast<long double>(d(j)) * s(j);
  return sum - 0.5L * quad;
}

Eigen::VectorXd fd_gradient(const Eigen::VectorXd& beta, const uptime::LogisticData& data,
                            const uptime::GaussianPrior& prior, double h) {
  Eigen::VectorXd g(beta.size());
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    Eigen::VectorXd p = beta, m = beta;
    p(j) += h;
    m(j) -= h;
    g(j) = static_cast<double>((oracle::log_posterior(p, data, prior) - oracle::log_posterior(m, data, prior)) /
                               (2.0L * h));
  }
  return g;
}

Eigen::MatrixXd fd_hessian(const Eigen::VectorXd& beta, const uptime::LogisticData& data,
                           const uptime::GaussianPrior& prior, double h) {
  const auto d = beta.size();
  Eigen::MatrixXd H(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::VectorXd p = beta, m = beta;
    p(j) += h;
    m(j) -= h;
    H.col(j) = (uptime::gradient(p, data, prior) - uptime::gradient(m, data, prior)) / (2 * h);
  }
  return H;
}

Eigen::VectorXd coordinate_search_map(const uptime::LogisticData& data,
                                      const uptime::GaussianPrior& prior, double tol) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(data.dim());
  auto f = [&](const Eigen::VectorXd& v) { return oracle::log_posterior(v, data, prior); };
  const double phi = (std::sqrt(5.0) - 1) / 2;
  for (int sweep = 0; sweep < 20000; ++sweep) {
    double moved = 0;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      auto at = [&](double x) {
        Eigen::VectorXd v = b;
        v(j) = x;
        return f(v);
      };
      // Bracket the 1-D maximum, then golden-section search.
      double step = 1.0;
      double lo = b(j) - step, hi = b(j) + step;
      while (at(hi) > at(b(j)) && step < 1e6) {
        step *= 2;
        hi = b(j) + step;
      }
      step = 1.0;
      while (at(lo) > at(b(j)) && step < 1e6) {
        step *= 2;
        lo = b(j) - step;
      }
      double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
      long double f1 = at(x1), f2 = at(x2);
      while (hi - lo > 1e-12) {
        if (f1 < f2) {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + phi * (hi - lo);
          f2 = at(x2);
        } else {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - phi * (hi - lo);
          f1 = at(x1);
        }
      }
      const double x = 0.5 * (lo + hi);
      if (at(x) >= at(b(j))) {
        moved = std::max(moved, std::abs(x - b(j)));
        b(j) = x;
      }
    }
    if (moved < tol) break;
  }
  return b;
}

double pairwise_auc(std::span<const std::uint8_t> labels, std::span<const double> probs) {
  // Count in halves so the result is exact.
  std::uint64_t half_wins = 0, pairs = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (probs[i] > probs[j]) half_wins += 2;
      else if (probs[i] == probs[j]) half_wins += 1;
    }
  }
  return static_cast<double>(half_wins) / (2.0 * static_cast<double>(pairs));
}

double extended_gm(std::span<const std::uint8_t> labels, std::span<const double> probs,
                   double eps) {
  long double sum = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    long double p = std::clamp<long double>(probs[i], eps, 1.0L - eps);
    sum += std::log(labels[i] ? p : 1.0L - p);
  }
  return static_cast<double>(std::exp(sum / static_cast<long double>(labels.size())));
}

double set_availability(const uptime::PredictionMatrix& p,
                        std::span<const std::size_t> members, uptime::SlotRange slots) {
  double total = 0;
  for (std::size_t t = slots.begin; t < slots.end; ++t) {
    double all_off = 1;
    for (auto m : members) all_off *= 1 - p.at(m, t);
    total += 1 - all_off;
  }
  return total / static_cast<double>(slots.size());
}

double ring_objective(const uptime::PredictionMatrix& p, std::span<const std::size_t> order,
                      std::size_t n, uptime::SlotRange slots) {
  double total = 0;
  for (std::size_t s = 0; s < order.size(); ++s) {
    std::vector<std::size_t> set;
    for (std::size_t k = 0; k < n; ++k) set.push_back(order[(s + k) % order.size()]);
    total += set_availability(p, set, slots);
  }
  return total / static_cast<double>(order.size());
}

double best_ring_objective(const uptime::PredictionMatrix& p, std::size_t n,
                           uptime::SlotRange slots) {
  std::vector<std::size_t> order(p.user_count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double best = -1;
  do {
    best = std::max(best, ring_objective(p, order, n, slots));
  } while (std::next_permutation(order.begin() + 1, order.end()));
  return best;
}

double measured_ring(const uptime::AvailabilityMatrix& test,
                     std::span<const std::size_t> order, std::size_t n,
                     uptime::SlotRange slots) {
  double total = 0;
  for (std::size_t s = 0; s < order.size(); ++s) {
    std::size_t up = 0;
    for (std::size_t t = slots.begin; t < slots.end; ++t) {
      bool any = false;
      for (std::size_t k = 0; k < n; ++k) any = any || test.at(order[(s + k) % order.size()], t);
      up += any;
    }
    total += static_cast<double>(up) / static_cast<double>(slots.size());
  }
  return total / static_cast<double>(order.size());
}

double placement_total(const uptime::PredictionMatrix& p,
                       const std::vector<std::vector<std::size_t>>& holders,
                       uptime::SlotRange slots) {
  double total = 0;
  for (const auto& h : holders)
    if (!h.empty()) total += set_availability(p, h, slots);
  return total;
}

double best_placement_objective(const uptime::PredictionMatrix& p,
                                const uptime::SocialGraph& g, std::size_t k,
                                uptime::SlotRange slots) {
  const std::size_t nodes = g.node_count();
  // Choices per node: every min(k, degree)-subset of its friends.
  std::vector<std::vector<std::vector<std::size_t>>> choices(nodes);
  for (std::size_t n = 0; n < nodes; ++n) {
    const auto& f = g.friends(n);
    const std::size_t take = std::min(k, f.size());
    std::vector<bool> mask(f.size(), false);
    std::fill(mask.begin(), mask.begin() + static_cast<long>(take), true);
    do {
      std::vector<std::size_t> c;
      for (std::size_t i = 0; i < f.size(); ++i)
        if (mask[i]) c.push_back(f[i]);
      choices[n].push_back(c);
    } while (std::prev_permutation(mask.begin(), mask.end()));
  }
  std::vector<std::size_t> pick(nodes, 0);
  double best = -1;
  while (true) {
    std::vector<std::vector<std::size_t>> holders(nodes);
    for (std::size_t n = 0; n < nodes; ++n)
      for (auto f : choices[n][pick[n]]) holders[f].push_back(n);
    best = std::max(best, placement_total(p, holders, slots));
    std::size_t i = 0;
    while (i < nodes && ++pick[i] == choices[i].size()) pick[i++] = 0;
    if (i == nodes) break;
  }
  return best;
}

double measured_placement(const uptime::AvailabilityMatrix& test,
                          const std::vector<std::vector<std::size_t>>& holders,
                          uptime::SlotRange slots) {
  double total = 0;
  for (const auto& h : holders) {
    std::size_t up = 0;
    for (std::size_t t = slots.begin; t < slots.end; ++t) {
      bool any = false;
      for (auto x : h) any = any || test.at(x, t);
      up += any;
    }
    total += static_cast<double>(up) / static_cast<double>(slots.size());
  }
  return total / static_cast<double>(holders.size());
}

double clustering(const uptime::SocialGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  for (std::size_t a = 0; a < n; ++a)
    for (auto b : g.friends(a)) adj[a][b] = 1;
  double total = 0;
  for (std::size_t v = 0; v < n; ++v) {
    std::vector<std::size_t> nb;
    for (std::size_t w = 0; w < n; ++w)
      if (adj[v][w]) nb.push_back(w);
    if (nb.size() < 2) continue;
    double tri = 0;
    for (auto a : nb)
      for (auto b : nb)
        if (a != b && adj[a][b]) tri += 1;
    total += tri / static_cast<double>(nb.size() * (nb.size() - 1));
  }
  return total / static_cast<double>(n);
}

std::vector<std::size_t> top_offline(std::span<const double> score,
                                     std::span<const std::uint8_t> online, std::size_t n) {
  std::vector<std::pair<double, std::size_t>> v;
  for (std::size_t u = 0; u < score.size(); ++u)
    if (!online[u]) v.emplace_back(-score[u], u);
  std::sort(v.begin(), v.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < v.size() && i < n; ++i) out.push_back(v[i].second);
  return out;
}

}  // namespace oracle
