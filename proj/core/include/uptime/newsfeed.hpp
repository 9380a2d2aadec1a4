#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "uptime/prediction.hpp"
#include "uptime/trace.hpp"

namespace uptime {

/// The n offline users (online_now[u] == 0) with the highest P at
/// next_slot, ties by user index, best first.
std::vector<std::size_t> select_push_users(const PredictionMatrix& p,
                                           std::span<const std::uint8_t> online_now,
                                           std::size_t n, std::size_t next_slot);

/// Same selection ranked by a static per-user score.
std::vector<std::size_t> select_baseline_users(std::span<const double> train_avail,
                                               std::span<const std::uint8_t> online_now,
                                               std::size_t n);

struct PreloadCurve {
  std::string strategy;
  std::vector<std::uint64_t> hits;        // per n value
  std::vector<std::uint64_t> selections;  // per n value
  /// slot_hits[i][j]: hits for n_values[i] at the j-th evaluated slot.
  std::vector<std::vector<std::uint32_t>> slot_hits;
  std::vector<std::vector<std::uint32_t>> slot_selections;

  double hit_ratio(std::size_t i) const;
};

struct PreloadRun {
  std::vector<std::size_t> n_values;  // after capping
  std::vector<std::size_t> slots;     // evaluated slots t (hit looked up at t+1)
  bool capped = false;                // some requested n exceeded the population
  PreloadCurve predictive;
  PreloadCurve baseline;
};

/// For every t in test_range except the last and every n, each strategy
/// selects among users offline at t; a selection is a hit when the user is
/// online at t+1. Rows of `test`, `p` and `train_avail` must align.
PreloadRun simulate_preload(const AvailabilityMatrix& test, SlotRange test_range,
                            const PredictionMatrix& p, std::span<const double> train_avail,
                            std::span<const std::size_t> n_values);

/// "strategy,n,hit_ratio".
std::string format_preload_csv(const PreloadRun& run);
void write_preload_csv(const std::filesystem::path& path, const PreloadRun& run);

}  // namespace uptime
