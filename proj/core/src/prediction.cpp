#include "uptime/prediction.hpp"

#include <optional>

#include "uptime/error.hpp"
#include "uptime/parallel.hpp"
#include "uptime/text_io.hpp"

namespace uptime {

PredictionMatrix::PredictionMatrix(std::vector<std::string> users, SlotRange range)
    : users_(std::move(users)), range_(range), values_(users_.size() * range.size(), 0.0) {
  if (range.empty()) throw DataError("prediction range is empty");
}

PredictionMatrix::PredictionMatrix(std::vector<std::string> users, SlotRange range,
                                   std::vector<double> values)
    : users_(std::move(users)), range_(range), values_(std::move(values)) {
  if (range.empty()) throw DataError("prediction range is empty");
  if (values_.size() != users_.size() * range.size())
    throw DataError("prediction values do not match users x slots");
  for (double v : values_)
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("prediction outside [0,1]");
}

void PredictionMatrix::set(std::size_t u, std::size_t slot, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DataError("prediction outside [0,1]");
  if (!range_.contains(slot)) throw DataError("prediction slot out of range");
  values_[u * range_.size() + (slot - range_.begin)] = p;
}

PredictionMatrix PredictionMatrix::select_users(std::span<const std::size_t> users) const {
  std::vector<std::string> ids;
  std::vector<double> values;
  values.reserve(users.size() * range_.size());
  for (auto u : users) {
    if (u >= users_.size()) throw DataError("prediction user index out of range");
    ids.push_back(users_[u]);
    const auto r = row(u);
    values.insert(values.end(), r.begin(), r.end());
  }
  return PredictionMatrix(std::move(ids), range_, std::move(values));
}

PredictionMatrix predict_matrix(const TrainedModel& model,
                                const AvailabilityMatrix& obs, SlotRange obs_range,
                                SlotRange target, std::span<const std::size_t> users) {
  if (target.empty()) throw DataError("empty prediction range");
  if (obs_range.end > target.begin && target.end > obs_range.begin)
    throw DataError("prediction target overlaps the observation range");
  const ObservationCounters counters(obs, obs_range);
  std::vector<std::string> ids;
  for (auto u : users) {
    if (u >= obs.user_count()) throw DataError("prediction: bad user index");
    ids.push_back(obs.user_id(u));
  }
  PredictionMatrix out(std::move(ids), target);
  parallel_for(users.size(), [&](std::size_t i) {
    for (std::size_t t = target.begin; t < target.end; ++t)
      out.set(i, t, model.predict_raw(counters.extract(users[i], t)));
  });
  return out;
}

std::string format_predictions(const PredictionMatrix& p) {
  std::string out = "#slot_begin=" + std::to_string(p.range().begin) +
                    " slots=" + std::to_string(p.slot_count()) + "\n";
  for (std::size_t u = 0; u < p.user_count(); ++u) {
    out += p.users()[u];
    for (double v : p.row(u)) {
      out += ',';
      out += text::format_exact(v);
    }
    out += '\n';
  }
  return out;
}

PredictionMatrix parse_predictions(std::string_view content) {
  const auto rows = text::lines(content);
  if (rows.empty() || rows[0].empty() || rows[0][0] != '#')
    throw DataError("prediction file must start with '#slot_begin=...' header");
  std::optional<std::int64_t> begin, slots;
  for (auto tok : text::split(rows[0].substr(1), ' ')) {
    if (tok.empty()) continue;
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos) throw DataError("bad prediction header token");
    const auto key = tok.substr(0, eq);
    const auto v = text::parse_int(tok.substr(eq + 1), key);
    if (key == "slot_begin") begin = v;
    else if (key == "slots") slots = v;
    else throw DataError("unknown prediction header key '" + std::string(key) + "'");
  }
  if (!begin || !slots || *begin < 0 || *slots <= 0)
    throw DataError("prediction header needs slot_begin and slots");
  std::vector<std::string> ids;
  std::vector<double> values;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    const auto fields = text::split(rows[i], ',');
    if (fields.size() != static_cast<std::size_t>(*slots) + 1)
      throw DataError("prediction line " + std::to_string(i + 1) + ": expected " +
                      std::to_string(*slots) + " values");
    ids.emplace_back(fields[0]);
    for (std::size_t k = 1; k < fields.size(); ++k)
      values.push_back(text::parse_real(fields[k], "prediction"));
  }
  const auto b = static_cast<std::size_t>(*begin);
  return PredictionMatrix(std::move(ids), {b, b + static_cast<std::size_t>(*slots)},
                          std::move(values));
}

void write_predictions(const std::filesystem::path& path, const PredictionMatrix& p) {
  text::write_file(path, format_predictions(p));
}

PredictionMatrix read_predictions(const std::filesystem::path& path) {
  return parse_predictions(text::read_file(path));
}

}  // namespace uptime
