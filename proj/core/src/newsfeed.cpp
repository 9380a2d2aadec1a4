#include "uptime/newsfeed.hpp"

#include <algorithm>

#include "uptime/error.hpp"
#include "uptime/parallel.hpp"
#include "uptime/text_io.hpp"

namespace uptime {

namespace {

/// Offline users sorted by descending score, ties by index.
template <class Score>
std::vector<std::size_t> rank_offline(std::span<const std::uint8_t> online_now,
                                      Score score) {
  std::vector<std::size_t> users;
  for (std::size_t u = 0; u < online_now.size(); ++u)
    if (!online_now[u]) users.push_back(u);
  std::stable_sort(users.begin(), users.end(),
                   [&](std::size_t a, std::size_t b) { return score(a) > score(b); });
  return users;
}

}  // namespace

std::vector<std::size_t> select_push_users(const PredictionMatrix& p,
                                           std::span<const std::uint8_t> online_now,
                                           std::size_t n, std::size_t next_slot) {
  if (online_now.size() != p.user_count())
    throw DataError("online flags do not match prediction users");
  if (!p.range().contains(next_slot)) throw DataError("next slot outside predictions");
  auto users = rank_offline(online_now, [&](std::size_t u) { return p.at(u, next_slot); });
  if (users.size() > n) users.resize(n);
  return users;
}

std::vector<std::size_t> select_baseline_users(std::span<const double> train_avail,
                                               std::span<const std::uint8_t> online_now,
                                               std::size_t n) {
  if (online_now.size() != train_avail.size())
    throw DataError("online flags do not match training availabilities");
  auto users = rank_offline(online_now, [&](std::size_t u) { return train_avail[u]; });
  if (users.size() > n) users.resize(n);
  return users;
}

double PreloadCurve::hit_ratio(std::size_t i) const {
  return selections[i] == 0 ? 0.0
                            : static_cast<double>(hits[i]) / static_cast<double>(selections[i]);
}

PreloadRun simulate_preload(const AvailabilityMatrix& test, SlotRange test_range,
                            const PredictionMatrix& p, std::span<const double> train_avail,
                            std::span<const std::size_t> n_values) {
  const std::size_t users = test.user_count();
  if (p.user_count() != users || train_avail.size() != users)
    throw DataError("test matrix, predictions and training availabilities must align");
  if (p.users() != test.users()) throw DataError("prediction and test users differ");
  if (test_range.size() < 2 || test_range.end > test.slot_count())
    throw DataError("test range must hold at least two slots inside the matrix");
  if (!p.range().covers({test_range.begin + 1, test_range.end}))
    throw DataError("predictions do not cover the test range shifted by one");
  if (n_values.empty()) throw DataError("no n values");

  PreloadRun run;
  for (auto n : n_values) {
    if (n > users) run.capped = true;
    run.n_values.push_back(std::min(n, users));
  }
  for (std::size_t t = test_range.begin; t + 1 < test_range.end; ++t) run.slots.push_back(t);

  const std::size_t nv = run.n_values.size(), ns = run.slots.size();
  auto init = [&](PreloadCurve& c, const char* name) {
    c.strategy = name;
    c.slot_hits.assign(nv, std::vector<std::uint32_t>(ns, 0));
    c.slot_selections.assign(nv, std::vector<std::uint32_t>(ns, 0));
  };
  init(run.predictive, "predictive");
  init(run.baseline, "baseline");

  parallel_for(ns, [&](std::size_t j) {
    const std::size_t t = run.slots[j];
    std::vector<std::uint8_t> online(users);
    for (std::size_t u = 0; u < users; ++u) online[u] = test.at(u, t);
    auto score = [&](PreloadCurve& curve, const std::vector<std::size_t>& ranked) {
      // Cumulative hits over the ranked prefix.
      std::vector<std::uint32_t> prefix(ranked.size() + 1, 0);
      for (std::size_t i = 0; i < ranked.size(); ++i)
        prefix[i + 1] = prefix[i] + (test.at(ranked[i], t + 1) ? 1 : 0);
      for (std::size_t i = 0; i < nv; ++i) {
        const std::size_t take = std::min(run.n_values[i], ranked.size());
        curve.slot_hits[i][j] = prefix[take];
        curve.slot_selections[i][j] = static_cast<std::uint32_t>(take);
      }
    };
    score(run.predictive,
          select_push_users(p, online, users, t + 1));
    score(run.baseline, select_baseline_users(train_avail, online, users));
  });

  for (auto* c : {&run.predictive, &run.baseline}) {
    c->hits.assign(nv, 0);
    c->selections.assign(nv, 0);
    for (std::size_t i = 0; i < nv; ++i)
      for (std::size_t j = 0; j < ns; ++j) {
        c->hits[i] += c->slot_hits[i][j];
        c->selections[i] += c->slot_selections[i][j];
      }
  }
  return run;
}

std::string format_preload_csv(const PreloadRun& run) {
  std::string out = "strategy,n,hit_ratio\n";
  for (const auto* c : {&run.predictive, &run.baseline})
    for (std::size_t i = 0; i < run.n_values.size(); ++i)
      out += c->strategy + "," + std::to_string(run.n_values[i]) + "," +
             text::format_exact(c->hit_ratio(i)) + "\n";
  return out;
}

void write_preload_csv(const std::filesystem::path& path, const PreloadRun& run) {
  text::write_file(path, format_preload_csv(run));
}

}  // namespace uptime
