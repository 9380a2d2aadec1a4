#include "uptime/features.hpp"

#include <cmath>

#include "uptime/error.hpp"
#include "uptime/parallel.hpp"
#include "uptime/text_io.hpp"

namespace uptime {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kNames = {
    "global_daily", "global_weekly", "individual_flat", "individual_daily",
    "individual_weekly"};

void check_obs_range(const AvailabilityMatrix& obs, SlotRange obs_range) {
  if (obs_range.empty()) throw DataError("empty observation range");
  if (obs_range.end > obs.slot_count())
    throw DataError("observation range exceeds matrix slots");
}

}  // namespace

std::string_view feature_name(std::size_t feature) { return kNames.at(feature); }

std::size_t parse_feature(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return i;
  throw DataError("unknown feature '" + std::string(name) + "'");
}

Counts count_observations(const AvailabilityMatrix& obs, SlotRange obs_range,
                          const std::optional<std::string>& user,
                          Periodicity periodicity, std::size_t target_slot) {
  check_obs_range(obs, obs_range);
  std::size_t first_user = 0, last_user = obs.user_count();
  if (user) {
    const auto u = obs.index_of(*user);
    if (!u) throw DataError("unknown user '" + *user + "'");
    first_user = *u;
    last_user = *u + 1;
  }
  const std::size_t per_day = obs.slots_per_day();
  const std::size_t period = periodicity == Periodicity::daily    ? per_day
                             : periodicity == Periodicity::weekly ? per_day * kDaysPerWeek
                                                                  : 1;
  const std::size_t phase = target_slot % period;
  // First slot of obs_range congruent to the target phase.
  std::size_t start = obs_range.begin + (phase + period - obs_range.begin % period) % period;
  Counts c;
  for (std::size_t u = first_user; u < last_user; ++u) {
    const auto row = obs.row(u);
    for (std::size_t t = start; t < obs_range.end; t += period) {
      if (row[t]) ++c.on;
      else ++c.off;
    }
  }
  return c;
}

ObservationCounters::ObservationCounters(std::size_t users,
                                         std::size_t slots_per_day)
    : users_(users),
      per_day_(slots_per_day),
      per_week_(slots_per_day * kDaysPerWeek),
      user_on_(users),
      user_total_(users),
      user_day_on_(users * per_day_),
      user_day_total_(users * per_day_),
      user_week_on_(users * per_week_),
      user_week_total_(users * per_week_),
      day_on_(per_day_),
      day_total_(per_day_),
      week_on_(per_week_),
      week_total_(per_week_) {
  if (slots_per_day == 0) throw DataError("slots_per_day must be positive");
}

ObservationCounters::ObservationCounters(const AvailabilityMatrix& obs,
                                         SlotRange obs_range)
    : ObservationCounters(obs.user_count(), obs.slots_per_day()) {
  check_obs_range(obs, obs_range);
  for (std::size_t u = 0; u < users_; ++u) {
    const auto row = obs.row(u);
    for (std::size_t t = obs_range.begin; t < obs_range.end; ++t) {
      const std::size_t d = t % per_day_, w = t % per_week_;
      const std::int64_t on = row[t];
      user_on_[u] += on;
      user_day_on_[u * per_day_ + d] += on;
      user_week_on_[u * per_week_ + w] += on;
      ++user_day_total_[u * per_day_ + d];
      ++user_week_total_[u * per_week_ + w];
    }
    user_total_[u] = static_cast<std::int64_t>(obs_range.size());
  }
  for (std::size_t u = 0; u < users_; ++u) {
    for (std::size_t d = 0; d < per_day_; ++d) {
      day_on_[d] += user_day_on_[u * per_day_ + d];
      day_total_[d] += user_day_total_[u * per_day_ + d];
    }
    for (std::size_t w = 0; w < per_week_; ++w) {
      week_on_[w] += user_week_on_[u * per_week_ + w];
      week_total_[w] += user_week_total_[u * per_week_ + w];
    }
  }
}

void ObservationCounters::observe(std::size_t user, std::size_t slot, bool online) {
  if (user >= users_) throw DataError("observe: user index out of range");
  const std::size_t d = slot % per_day_, w = slot % per_week_;
  const std::int64_t on = online ? 1 : 0;
  user_on_[user] += on;
  ++user_total_[user];
  user_day_on_[user * per_day_ + d] += on;
  ++user_day_total_[user * per_day_ + d];
  user_week_on_[user * per_week_ + w] += on;
  ++user_week_total_[user * per_week_ + w];
  day_on_[d] += on;
  ++day_total_[d];
  week_on_[w] += on;
  ++week_total_[w];
}

Counts ObservationCounters::counts(std::optional<std::size_t> user,
                                   Periodicity periodicity,
                                   std::size_t target_slot) const {
  const std::size_t d = target_slot % per_day_, w = target_slot % per_week_;
  std::int64_t on = 0, total = 0;
  if (user) {
    if (*user >= users_) throw DataError("counts: user index out of range");
    switch (periodicity) {
      case Periodicity::flat:
        on = user_on_[*user];
        total = user_total_[*user];
        break;
      case Periodicity::daily:
        on = user_day_on_[*user * per_day_ + d];
        total = user_day_total_[*user * per_day_ + d];
        break;
      case Periodicity::weekly:
        on = user_week_on_[*user * per_week_ + w];
        total = user_week_total_[*user * per_week_ + w];
        break;
    }
  } else {
    switch (periodicity) {
      case Periodicity::flat:
        for (std::size_t i = 0; i < per_day_; ++i) {
          on += day_on_[i];
          total += day_total_[i];
        }
        break;
      case Periodicity::daily:
        on = day_on_[d];
        total = day_total_[d];
        break;
      case Periodicity::weekly:
        on = week_on_[w];
        total = week_total_[w];
        break;
    }
  }
  return {on, total - on};
}

FeatureVector ObservationCounters::extract(std::size_t user,
                                           std::size_t target_slot) const {
  return {
      feature_value(counts(std::nullopt, Periodicity::daily, target_slot)),
      feature_value(counts(std::nullopt, Periodicity::weekly, target_slot)),
      feature_value(counts(user, Periodicity::flat, target_slot)),
      feature_value(counts(user, Periodicity::daily, target_slot)),
      feature_value(counts(user, Periodicity::weekly, target_slot)),
  };
}

FeatureVector extract_features(const AvailabilityMatrix& obs, SlotRange obs_range,
                               const std::string& user, std::size_t target_slot) {
  return {
      feature_value(count_observations(obs, obs_range, std::nullopt,
                                       Periodicity::daily, target_slot)),
      feature_value(count_observations(obs, obs_range, std::nullopt,
                                       Periodicity::weekly, target_slot)),
      feature_value(count_observations(obs, obs_range, user, Periodicity::flat,
                                       target_slot)),
      feature_value(count_observations(obs, obs_range, user, Periodicity::daily,
                                       target_slot)),
      feature_value(count_observations(obs, obs_range, user, Periodicity::weekly,
                                       target_slot)),
  };
}

FeatureVector Standardization::apply(const FeatureVector& raw) const {
  if (!enabled) return raw;
  FeatureVector out;
  for (std::size_t j = 0; j < kFeatureCount; ++j)
    out[j] = constant[j] ? raw[j] : (raw[j] - means[j]) / sds[j];
  return out;
}

Standardization fit_standardization(std::span<const FeatureVector> rows) {
  if (rows.empty()) throw DataError("cannot standardize zero rows");
  Standardization s;
  s.enabled = true;
  const double n = static_cast<double>(rows.size());
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    double sum = 0;
    for (const auto& r : rows) sum += r[j];
    const double mean = sum / n;
    double ss = 0;
    for (const auto& r : rows) ss += (r[j] - mean) * (r[j] - mean);
    const double sd = std::sqrt(ss / n);
    if (sd <= 1e-12) {
      s.constant[j] = true;
      s.means[j] = 0.0;
      s.sds[j] = 1.0;
    } else {
      s.means[j] = mean;
      s.sds[j] = sd;
    }
  }
  return s;
}

namespace {

DesignMatrix build_raw(const AvailabilityMatrix& obs, SlotRange obs_range,
                       SlotRange label_range, std::span<const std::size_t> users) {
  if (users.empty()) throw DataError("design matrix: empty user set");
  if (label_range.empty()) throw DataError("design matrix: empty label range");
  check_obs_range(obs, obs_range);
  if (label_range.end > obs.slot_count())
    throw DataError("design matrix: label range exceeds matrix slots");
  if (obs_range.end > label_range.begin && label_range.end > obs_range.begin)
    throw DataError("design matrix: observation and label ranges overlap");

  const ObservationCounters counters(obs, obs_range);
  DesignMatrix dm;
  const std::size_t per_user = label_range.size();
  const std::size_t rows = users.size() * per_user;
  dm.users.reserve(users.size());
  for (auto u : users) {
    if (u >= obs.user_count()) throw DataError("design matrix: bad user index");
    dm.users.push_back(obs.user_id(u));
  }
  dm.features.resize(rows);
  dm.labels.resize(rows);
  dm.row_user.resize(rows);
  dm.row_slot.resize(rows);
  parallel_for(users.size(), [&](std::size_t i) {
    const std::size_t u = users[i];
    const auto row = obs.row(u);
    for (std::size_t k = 0; k < per_user; ++k) {
      const std::size_t t = label_range.begin + k;
      const std::size_t r = i * per_user + k;
      dm.features[r] = counters.extract(u, t);
      dm.labels[r] = row[t];
      dm.row_user[r] = static_cast<std::uint32_t>(i);
      dm.row_slot[r] = static_cast<std::uint32_t>(t);
    }
  });
  return dm;
}

void apply_in_place(DesignMatrix& dm) {
  for (auto& f : dm.features) f = dm.standardization.apply(f);
}

}  // namespace

DesignMatrix build_design_matrix(const AvailabilityMatrix& obs, SlotRange obs_range,
                                 SlotRange label_range,
                                 std::span<const std::size_t> users,
                                 bool standardize) {
  auto dm = build_raw(obs, obs_range, label_range, users);
  if (standardize) {
    dm.standardization = fit_standardization(dm.features);
    apply_in_place(dm);
  }
  return dm;
}

DesignMatrix build_design_matrix(const AvailabilityMatrix& obs, SlotRange obs_range,
                                 SlotRange label_range,
                                 std::span<const std::size_t> users,
                                 const Standardization& reuse) {
  auto dm = build_raw(obs, obs_range, label_range, users);
  dm.standardization = reuse;
  apply_in_place(dm);
  return dm;
}

std::string format_design_csv(const DesignMatrix& dm) {
  std::string out = "user_id,slot,f1,f2,f3,f4,f5,label\n";
  out.reserve(out.size() + dm.size() * 64);
  for (std::size_t r = 0; r < dm.size(); ++r) {
    out += dm.users[dm.row_user[r]];
    out += ',';
    out += std::to_string(dm.row_slot[r]);
    for (double v : dm.features[r]) {
      out += ',';
      out += text::format_fixed(v, 6);
    }
    out += ',';
    out += dm.labels[r] ? '1' : '0';
    out += '\n';
  }
  return out;
}

void write_design_csv(const std::filesystem::path& path, const DesignMatrix& dm) {
  text::write_file(path, format_design_csv(dm));
}

}  // namespace uptime
