#include "uptime/trace.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <string>

#include "uptime/error.hpp"
#include "uptime/text_io.hpp"

namespace uptime {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  return -floor_div(-a, b);
}

}  // namespace

AvailabilityMatrix::AvailabilityMatrix(std::int64_t origin_ts,
                                       std::int64_t slot_seconds,
                                       std::vector<std::string> users,
                                       std::size_t slots)
    : origin_ts_(origin_ts),
      slot_seconds_(slot_seconds),
      slots_(slots),
      users_(std::move(users)) {
  if (slot_seconds_ <= 0) throw DataError("slot_seconds must be positive");
  if (slots_ == 0) throw DataError("matrix must have at least one slot");
  index_.reserve(users_.size());
  for (std::size_t u = 0; u < users_.size(); ++u) {
    if (users_[u].empty()) throw DataError("empty user id");
    if (!index_.emplace(users_[u], u).second)
      throw DataError("duplicate user id '" + users_[u] + "'");
  }
  cells_.assign(users_.size() * slots_, 0);
}

std::optional<std::size_t> AvailabilityMatrix::index_of(
    std::string_view user_id) const {
  const auto it = index_.find(std::string(user_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t AvailabilityMatrix::slots_per_day() const {
  if (kSecondsPerDay % slot_seconds_ != 0)
    throw DataError("slot_seconds=" + std::to_string(slot_seconds_) +
                    " does not divide a day");
  return static_cast<std::size_t>(kSecondsPerDay / slot_seconds_);
}

std::size_t AvailabilityMatrix::online_count(std::size_t u,
                                             SlotRange range) const {
  const auto r = row(u);
  return static_cast<std::size_t>(std::count(
      r.begin() + static_cast<std::ptrdiff_t>(range.begin),
      r.begin() + static_cast<std::ptrdiff_t>(range.end), std::uint8_t{1}));
}

AvailabilityMatrix AvailabilityMatrix::select_users(
    std::span<const std::size_t> users) const {
  std::vector<std::string> ids;
  ids.reserve(users.size());
  for (auto u : users) {
    if (u >= users_.size()) throw DataError("user index out of range");
    ids.push_back(users_[u]);
  }
  AvailabilityMatrix out(origin_ts_, slot_seconds_, std::move(ids), slots_);
  for (std::size_t i = 0; i < users.size(); ++i)
    std::copy_n(cells_.begin() + static_cast<std::ptrdiff_t>(users[i] * slots_),
                slots_,
                out.cells_.begin() + static_cast<std::ptrdiff_t>(i * slots_));
  return out;
}

AvailabilityMatrix AvailabilityMatrix::select_users(
    std::span<const std::string> users) const {
  std::vector<std::size_t> idx;
  idx.reserve(users.size());
  for (const auto& id : users) {
    const auto u = index_of(id);
    if (!u) throw DataError("unknown user '" + id + "'");
    idx.push_back(*u);
  }
  return select_users(std::span<const std::size_t>(idx));
}

bool AvailabilityMatrix::operator==(const AvailabilityMatrix& other) const {
  return origin_ts_ == other.origin_ts_ &&
         slot_seconds_ == other.slot_seconds_ && slots_ == other.slots_ &&
         users_ == other.users_ && cells_ == other.cells_;
}

SlotRange PeriodSplit::by_name(std::string_view name) const {
  if (name.size() == 1) {
    switch (std::toupper(static_cast<unsigned char>(name[0]))) {
      case 'A': return a;
      case 'B': return b;
      case 'C': return c;
      case 'D': return d;
      default: break;
    }
  }
  throw DataError("unknown period '" + std::string(name) + "'");
}

AvailabilityMatrix ingest_events(std::span<const SessionEvent> events,
                                 std::int64_t origin_ts,
                                 std::int64_t slot_seconds,
                                 std::size_t horizon_slots,
                                 const IngestOptions& options) {
  if (horizon_slots == 0) throw DataError("horizon_slots must be >= 1");
  if (slot_seconds <= 0) throw DataError("slot_seconds must be positive");
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.user_id.empty())
      throw DataError("row " + std::to_string(i + 1) + ": empty user_id");
    if (e.logout_ts <= e.login_ts)
      throw DataError("row " + std::to_string(i + 1) + ": logout_ts (" +
                      std::to_string(e.logout_ts) + ") <= login_ts (" +
                      std::to_string(e.login_ts) + ")");
  }

  std::vector<std::string> ids;
  ids.reserve(events.size());
  for (const auto& e : events) ids.push_back(e.user_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  AvailabilityMatrix m(origin_ts, slot_seconds, ids, horizon_slots);
  const auto horizon = static_cast<std::int64_t>(horizon_slots);
  for (const auto& e : events) {
    // Slot t overlaps [login, logout) iff t*ss < logout-o and (t+1)*ss > login-o.
    const std::int64_t first =
        std::max<std::int64_t>(0, floor_div(e.login_ts - origin_ts, slot_seconds));
    const std::int64_t last = std::min<std::int64_t>(
        horizon, ceil_div(e.logout_ts - origin_ts, slot_seconds));
    const auto u = *m.index_of(e.user_id);
    for (std::int64_t t = first; t < last; ++t)
      m.set(u, static_cast<std::size_t>(t), true);
  }

  if (!options.drop_never_online) return m;
  std::vector<std::size_t> keep;
  for (std::size_t u = 0; u < m.user_count(); ++u)
    if (m.online_count(u, m.all_slots()) > 0) keep.push_back(u);
  if (keep.size() == m.user_count()) return m;
  return m.select_users(std::span<const std::size_t>(keep));
}

PeriodSplit split_periods(const AvailabilityMatrix& m) {
  const std::size_t period = m.slots_per_week() * kWeeksPerPeriod;
  const std::size_t required = period * kPeriodCount;
  if (m.slot_count() < required)
    throw DataError("trace too short: " + std::to_string(required) +
                    " slots (24 weeks) required, " +
                    std::to_string(m.slot_count()) + " available");
  PeriodSplit s;
  s.a = {0, period};
  s.b = {period, 2 * period};
  s.c = {2 * period, 3 * period};
  s.d = {3 * period, 4 * period};
  return s;
}

std::vector<std::string> filter_superpeers(const AvailabilityMatrix& m,
                                           SlotRange reference,
                                           double threshold_hours_per_day) {
  if (reference.empty()) throw DataError("empty reference range");
  if (reference.end > m.slot_count())
    throw DataError("reference range exceeds matrix slots");
  // online/size >= threshold/24, kept in integers-as-doubles to make the
  // boundary exact.
  const double rhs = threshold_hours_per_day * static_cast<double>(reference.size());
  std::vector<std::string> out;
  for (std::size_t u = 0; u < m.user_count(); ++u) {
    const double online = static_cast<double>(m.online_count(u, reference));
    if (online * 24.0 >= rhs) out.push_back(m.user_id(u));
  }
  return out;
}

double average_availability(const AvailabilityMatrix& m,
                            std::span<const std::size_t> users,
                            SlotRange range) {
  if (users.empty()) throw DataError("average_availability: empty user set");
  if (range.empty()) throw DataError("average_availability: empty range");
  if (range.end > m.slot_count())
    throw DataError("average_availability: range exceeds matrix slots");
  std::size_t online = 0;
  for (auto u : users) online += m.online_count(u, range);
  return static_cast<double>(online) /
         (static_cast<double>(users.size()) * static_cast<double>(range.size()));
}

std::vector<double> user_availability(const AvailabilityMatrix& m,
                                      SlotRange range) {
  if (range.empty()) throw DataError("user_availability: empty range");
  std::vector<double> out(m.user_count());
  for (std::size_t u = 0; u < m.user_count(); ++u)
    out[u] = static_cast<double>(m.online_count(u, range)) /
             static_cast<double>(range.size());
  return out;
}

SlotRange parse_range(std::string_view spec, const PeriodSplit* split) {
  spec = text::trim(spec);
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    if (!split) throw DataError("period name needs a 24-week trace");
    return split->by_name(spec);
  }
  const auto b = text::parse_int(spec.substr(0, colon), "range begin");
  const auto e = text::parse_int(spec.substr(colon + 1), "range end");
  if (b < 0 || e <= b) throw DataError("invalid range '" + std::string(spec) + "'");
  return {static_cast<std::size_t>(b), static_cast<std::size_t>(e)};
}

std::vector<SessionEvent> parse_events_csv(std::string_view content) {
  const auto rows = text::lines(content);
  if (rows.empty() || text::trim(rows[0]) != "user_id,login_ts,logout_ts")
    throw DataError("event CSV must start with header 'user_id,login_ts,logout_ts'");
  std::vector<SessionEvent> events;
  events.reserve(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (text::trim(rows[i]).empty()) continue;
    const auto fields = text::split(rows[i], ',');
    const std::string where = "line " + std::to_string(i + 1);
    if (fields.size() != 3) throw DataError(where + ": expected 3 fields");
    SessionEvent e;
    e.user_id = std::string(text::trim(fields[0]));
    e.login_ts = text::parse_int(fields[1], where + " login_ts");
    e.logout_ts = text::parse_int(fields[2], where + " logout_ts");
    if (e.user_id.empty()) throw DataError(where + ": empty user_id");
    if (e.logout_ts <= e.login_ts)
      throw DataError(where + ": logout_ts <= login_ts");
    events.push_back(std::move(e));
  }
  return events;
}

std::vector<SessionEvent> read_events_csv(const std::filesystem::path& path) {
  return parse_events_csv(text::read_file(path));
}

std::string format_matrix(const AvailabilityMatrix& m) {
  std::string out = "#origin_ts=" + std::to_string(m.origin_ts()) +
                    " slot_seconds=" + std::to_string(m.slot_seconds()) +
                    " slots=" + std::to_string(m.slot_count()) + "\n";
  out.reserve(out.size() + m.user_count() * (m.slot_count() + 16));
  for (std::size_t u = 0; u < m.user_count(); ++u) {
    out += m.user_id(u);
    out += ',';
    for (auto c : m.row(u)) out += c ? '1' : '0';
    out += '\n';
  }
  return out;
}

AvailabilityMatrix parse_matrix(std::string_view content) {
  const auto rows = text::lines(content);
  if (rows.empty() || rows[0].empty() || rows[0][0] != '#')
    throw DataError("matrix file must start with '#origin_ts=...' header");
  std::optional<std::int64_t> origin, slot_seconds, slots;
  for (auto tok : text::split(rows[0].substr(1), ' ')) {
    if (tok.empty()) continue;
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos) throw DataError("bad matrix header token");
    const auto key = tok.substr(0, eq);
    const auto value = text::parse_int(tok.substr(eq + 1), key);
    if (key == "origin_ts") origin = value;
    else if (key == "slot_seconds") slot_seconds = value;
    else if (key == "slots") slots = value;
    else throw DataError("unknown matrix header key '" + std::string(key) + "'");
  }
  if (!origin || !slot_seconds || !slots || *slots <= 0)
    throw DataError("matrix header needs origin_ts, slot_seconds and slots");

  std::vector<std::string> ids;
  std::vector<std::string_view> bits;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    const auto comma = rows[i].rfind(',');
    if (comma == std::string_view::npos)
      throw DataError("line " + std::to_string(i + 1) + ": missing ','");
    ids.emplace_back(rows[i].substr(0, comma));
    bits.push_back(rows[i].substr(comma + 1));
    if (bits.back().size() != static_cast<std::size_t>(*slots))
      throw DataError("line " + std::to_string(i + 1) + ": expected " +
                      std::to_string(*slots) + " cells, found " +
                      std::to_string(bits.back().size()));
  }
  AvailabilityMatrix m(*origin, *slot_seconds, std::move(ids),
                       static_cast<std::size_t>(*slots));
  for (std::size_t u = 0; u < bits.size(); ++u)
    for (std::size_t t = 0; t < bits[u].size(); ++t) {
      const char c = bits[u][t];
      if (c != '0' && c != '1')
        throw DataError("user '" + m.user_id(u) + "': cell is not 0/1");
      m.set(u, t, c == '1');
    }
  return m;
}

void write_matrix(const std::filesystem::path& path, const AvailabilityMatrix& m) {
  text::write_file(path, format_matrix(m));
}

AvailabilityMatrix read_matrix(const std::filesystem::path& path) {
  return parse_matrix(text::read_file(path));
}

}  // namespace uptime
