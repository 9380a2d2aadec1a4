#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace uptime {

/// (label, probability) pairs, optionally tagged with the slot index they
/// refer to (required by metric_over_time).
struct ScoredLabels {
  std::vector<std::uint8_t> labels;
  std::vector<double> probs;
  std::vector<std::size_t> slots;

  void add(bool label, double prob) {
    labels.push_back(label ? 1 : 0);
    probs.push_back(prob);
  }
  void add(bool label, double prob, std::size_t slot) {
    add(label, prob);
    slots.push_back(slot);
  }
  std::size_t size() const { return labels.size(); }
  void validate() const;
};

/// Mann-Whitney AUC with midranks: ties between a positive and a negative
/// count 1/2. Throws DataError when only one class is present.
double auc(const ScoredLabels& s);

inline constexpr double kGmEpsilon = 1e-12;

/// exp(mean log l), l = p for positives and 1-p for negatives, with p
/// clamped to [1e-12, 1-1e-12].
double gm(const ScoredLabels& s);

struct RocPoint {
  double fpr = 0;
  double tpr = 0;
};

/// Threshold sweep over distinct scores from high to low, starting at
/// (0,0) and ending at (1,1).
std::vector<RocPoint> roc_points(const ScoredLabels& s);
double trapezoid_area(const std::vector<RocPoint>& roc);

enum class Metric { auc, gm };

struct SeriesPoint {
  std::size_t slot = 0;  // last slot of the window
  double value = 0;
};

/// Metric over trailing windows [t - window + 1, t], stride one slot, for
/// every t whose window fits in the observed slot span. AUC points are
/// omitted where a window holds a single class.
std::vector<SeriesPoint> metric_over_time(const ScoredLabels& s,
                                          std::size_t window_slots, Metric metric);

struct ClassAccuracy {
  double positive = 0;  // fraction of positives predicted with p > threshold
  double negative = 0;  // fraction of negatives predicted with p <= threshold
};
ClassAccuracy class_accuracy(const ScoredLabels& s, double threshold = 0.5);

}  // namespace uptime
