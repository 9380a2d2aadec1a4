#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uptime/logreg.hpp"
#include "uptime/trace.hpp"

namespace uptime {

/// Users x future slots grid of online probabilities. Slot indices are
/// absolute (same origin as the availability matrix they were derived
/// from); the grid covers range().
class PredictionMatrix {
 public:
  PredictionMatrix() = default;
  PredictionMatrix(std::vector<std::string> users, SlotRange range);
  PredictionMatrix(std::vector<std::string> users, SlotRange range,
                   std::vector<double> values);

  const std::vector<std::string>& users() const { return users_; }
  std::size_t user_count() const { return users_.size(); }
  SlotRange range() const { return range_; }
  std::size_t slot_count() const { return range_.size(); }

  double at(std::size_t u, std::size_t slot) const {
    return values_[u * range_.size() + (slot - range_.begin)];
  }
  void set(std::size_t u, std::size_t slot, double p);
  /// Values of user u over range().
  std::span<const double> row(std::size_t u) const {
    return {values_.data() + u * range_.size(), range_.size()};
  }

  PredictionMatrix select_users(std::span<const std::size_t> users) const;
  bool operator==(const PredictionMatrix&) const = default;

 private:
  std::vector<std::string> users_;
  SlotRange range_;
  std::vector<double> values_;
};

/// Predictions for `users` of `obs` over `target`, with features computed
/// on `obs_range` only.
PredictionMatrix predict_matrix(const TrainedModel& model,
                                const AvailabilityMatrix& obs, SlotRange obs_range,
                                SlotRange target, std::span<const std::size_t> users);

// Prediction file: "#slot_begin=<int> slots=<int>" then
// "<user_id>,<p>,<p>,..." with 17 significant digits.
std::string format_predictions(const PredictionMatrix& p);
PredictionMatrix parse_predictions(std::string_view content);
void write_predictions(const std::filesystem::path& path, const PredictionMatrix& p);
PredictionMatrix read_predictions(const std::filesystem::path& path);

}  // namespace uptime
