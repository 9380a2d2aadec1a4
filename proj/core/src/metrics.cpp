#include "uptime/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uptime/error.hpp"

namespace uptime {

void ScoredLabels::validate() const {
  if (labels.size() != probs.size()) throw DataError("labels/probs length mismatch");
  if (!slots.empty() && slots.size() != labels.size())
    throw DataError("slots length mismatch");
  for (double p : probs)
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("probability outside [0,1]");
}

namespace {

std::vector<std::size_t> order_by_score(const std::vector<double>& probs) {
  std::vector<std::size_t> idx(probs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });
  return idx;
}

double auc_of(const std::vector<std::uint8_t>& labels, const std::vector<double>& probs) {
  const auto idx = order_by_score(probs);
  // Twice the rank sum of positives keeps midranks integral.
  double twice_rank_sum = 0;
  double positives = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    double pos_in_group = 0;
    while (j < idx.size() && probs[idx[j]] == probs[idx[i]]) {
      pos_in_group += labels[idx[j]];
      ++j;
    }
    // Ranks i+1..j share midrank (i+1+j)/2.
    twice_rank_sum += pos_in_group * static_cast<double>(i + 1 + j);
    positives += pos_in_group;
    i = j;
  }
  const double negatives = static_cast<double>(labels.size()) - positives;
  if (positives == 0 || negatives == 0)
    throw DataError("AUC undefined: labels contain a single class");
  const double twice_u = twice_rank_sum - positives * (positives + 1);
  return (twice_u / 2.0) / (positives * negatives);
}

double gm_of(const std::uint8_t* labels, const double* probs, std::size_t n) {
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp(probs[i], kGmEpsilon, 1.0 - kGmEpsilon);
    sum += labels[i] ? std::log(p) : std::log1p(-p);
  }
  return std::exp(sum / static_cast<double>(n));
}

}  // namespace

double auc(const ScoredLabels& s) {
  s.validate();
  return auc_of(s.labels, s.probs);
}

double gm(const ScoredLabels& s) {
  s.validate();
  if (s.size() == 0) throw DataError("GM of an empty set");
  return gm_of(s.labels.data(), s.probs.data(), s.size());
}

std::vector<RocPoint> roc_points(const ScoredLabels& s) {
  s.validate();
  auto idx = order_by_score(s.probs);
  std::reverse(idx.begin(), idx.end());
  double positives = 0;
  for (auto l : s.labels) positives += l;
  const double negatives = static_cast<double>(s.size()) - positives;
  if (positives == 0 || negatives == 0)
    throw DataError("ROC undefined: labels contain a single class");
  std::vector<RocPoint> out{{0.0, 0.0}};
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && s.probs[idx[j]] == s.probs[idx[i]]) {
      if (s.labels[idx[j]]) ++tp;
      else ++fp;
      ++j;
    }
    out.push_back({fp / negatives, tp / positives});
    i = j;
  }
  return out;
}

double trapezoid_area(const std::vector<RocPoint>& roc) {
  double area = 0;
  for (std::size_t i = 1; i < roc.size(); ++i)
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2.0;
  return area;
}

std::vector<SeriesPoint> metric_over_time(const ScoredLabels& s,
                                          std::size_t window_slots, Metric metric) {
  s.validate();
  if (window_slots == 0) throw DataError("window must be >= 1 slot");
  if (s.slots.size() != s.size()) throw DataError("metric_over_time needs slot indices");
  if (s.size() == 0) return {};
  const auto [lo_it, hi_it] = std::minmax_element(s.slots.begin(), s.slots.end());
  const std::size_t lo = *lo_it, hi = *hi_it;

  // Bucket pairs by slot.
  const std::size_t span = hi - lo + 1;
  std::vector<std::size_t> start(span + 1, 0);
  for (auto t : s.slots) ++start[t - lo + 1];
  std::partial_sum(start.begin(), start.end(), start.begin());
  std::vector<std::size_t> order(s.size());
  {
    auto fill = start;
    for (std::size_t i = 0; i < s.size(); ++i) order[fill[s.slots[i] - lo]++] = i;
  }

  std::vector<SeriesPoint> out;
  if (window_slots > span) return out;
  std::vector<std::uint8_t> labels;
  std::vector<double> probs;
  for (std::size_t end = lo + window_slots - 1; end <= hi; ++end) {
    const std::size_t first = end + 1 - window_slots;
    labels.clear();
    probs.clear();
    for (std::size_t k = start[first - lo]; k < start[end - lo + 1]; ++k) {
      labels.push_back(s.labels[order[k]]);
      probs.push_back(s.probs[order[k]]);
    }
    if (labels.empty()) continue;
    if (metric == Metric::gm) {
      out.push_back({end, gm_of(labels.data(), probs.data(), labels.size())});
      continue;
    }
    const auto pos = std::count(labels.begin(), labels.end(), std::uint8_t{1});
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(labels.size())) continue;
    out.push_back({end, auc_of(labels, probs)});
  }
  return out;
}

ClassAccuracy class_accuracy(const ScoredLabels& s, double threshold) {
  s.validate();
  double pos = 0, neg = 0, pos_ok = 0, neg_ok = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.labels[i]) {
      ++pos;
      if (s.probs[i] > threshold) ++pos_ok;
    } else {
      ++neg;
      if (s.probs[i] <= threshold) ++neg_ok;
    }
  }
  return {pos ? pos_ok / pos : 0.0, neg ? neg_ok / neg : 0.0};
}

}  // namespace uptime
