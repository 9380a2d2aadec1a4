#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uptime/trace.hpp"

namespace uptime {

inline constexpr std::size_t kFeatureCount = 5;

/// Feature order is fixed: global daily, global weekly, individual flat,
/// individual daily, individual weekly.
enum class Feature : std::size_t {
  global_daily = 0,
  global_weekly = 1,
  individual_flat = 2,
  individual_daily = 3,
  individual_weekly = 4,
};

enum class Periodicity { flat, daily, weekly };

std::string_view feature_name(std::size_t feature);
/// Accepts the snake_case names above; throws DataError otherwise.
std::size_t parse_feature(std::string_view name);

using FeatureVector = std::array<double, kFeatureCount>;

struct Counts {
  std::int64_t on = 0;
  std::int64_t off = 0;
  bool operator==(const Counts&) const = default;
};

/// Beta(1,1) posterior mean of an online observation: (on+1)/(on+off+2).
inline double feature_value(Counts c) {
  return (static_cast<double>(c.on) + 1.0) /
         (static_cast<double>(c.on + c.off) + 2.0);
}

/// Counts online/offline observations in `obs_range` that match the
/// periodicity of `target_slot` (same slot-of-day for daily, same
/// slot-of-week for weekly). `user` == nullopt pools all users.
Counts count_observations(const AvailabilityMatrix& obs, SlotRange obs_range,
                          const std::optional<std::string>& user,
                          Periodicity periodicity, std::size_t target_slot);

/// One-pass counter tables over an observation window, giving O(1)
/// feature extraction. observe() applies a single new observation, so the
/// tables can be maintained as data streams in.
class ObservationCounters {
 public:
  ObservationCounters(const AvailabilityMatrix& obs, SlotRange obs_range);
  /// Empty tables shaped for `users` users on a grid of `slots_per_day`.
  ObservationCounters(std::size_t users, std::size_t slots_per_day);

  void observe(std::size_t user, std::size_t slot, bool online);

  Counts counts(std::optional<std::size_t> user, Periodicity periodicity,
                std::size_t target_slot) const;
  FeatureVector extract(std::size_t user, std::size_t target_slot) const;

  std::size_t user_count() const { return users_; }
  std::size_t slots_per_day() const { return per_day_; }

  bool operator==(const ObservationCounters&) const = default;

 private:
  std::size_t users_ = 0;
  std::size_t per_day_ = 24;
  std::size_t per_week_ = 168;
  // Online and total observation counts.
  std::vector<std::int64_t> user_on_, user_total_;
  std::vector<std::int64_t> user_day_on_, user_day_total_;    // users x per_day
  std::vector<std::int64_t> user_week_on_, user_week_total_;  // users x per_week
  std::vector<std::int64_t> day_on_, day_total_;              // per_day
  std::vector<std::int64_t> week_on_, week_total_;            // per_week
};

/// Features of `user` (by id) for a future `target_slot`.
FeatureVector extract_features(const AvailabilityMatrix& obs, SlotRange obs_range,
                               const std::string& user, std::size_t target_slot);

/// Per-column affine map applied to raw features before fitting.
struct Standardization {
  bool enabled = false;
  FeatureVector means{};
  FeatureVector sds{1, 1, 1, 1, 1};
  std::array<bool, kFeatureCount> constant{};

  FeatureVector apply(const FeatureVector& raw) const;
};

/// Rows are (user, slot) for every user in `users` and slot of the label
/// range, user-major. `features` hold standardized values when
/// `standardization.enabled`.
struct DesignMatrix {
  std::vector<std::string> users;
  std::vector<FeatureVector> features;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint32_t> row_user;
  std::vector<std::uint32_t> row_slot;
  Standardization standardization;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
};

/// Population mean / standard deviation of each column; a column whose
/// deviation is <= 1e-12 is flagged constant and left unscaled.
Standardization fit_standardization(std::span<const FeatureVector> rows);

DesignMatrix build_design_matrix(const AvailabilityMatrix& obs, SlotRange obs_range,
                                 SlotRange label_range,
                                 std::span<const std::size_t> users,
                                 bool standardize);

/// Same, reusing training statistics instead of fitting new ones (test
/// side). Labels are read from `obs` at the label slots; callers that have
/// no labels may pass a matrix with zeros there.
DesignMatrix build_design_matrix(const AvailabilityMatrix& obs, SlotRange obs_range,
                                 SlotRange label_range,
                                 std::span<const std::size_t> users,
                                 const Standardization& reuse);

/// CSV "user_id,slot,f1,f2,f3,f4,f5,label", features with 6 decimals.
std::string format_design_csv(const DesignMatrix& dm);
void write_design_csv(const std::filesystem::path& path, const DesignMatrix& dm);

}  // namespace uptime
