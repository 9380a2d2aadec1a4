#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace uptime {

inline constexpr std::int64_t kSecondsPerDay = 86400;
inline constexpr std::size_t kDaysPerWeek = 7;
inline constexpr std::size_t kWeeksPerPeriod = 6;
inline constexpr std::size_t kPeriodCount = 4;

/// Half-open range [begin, end) of slot indices.
struct SlotRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end > begin ? end - begin : 0; }
  bool empty() const { return end <= begin; }
  bool contains(std::size_t slot) const { return slot >= begin && slot < end; }
  bool covers(const SlotRange& other) const {
    return other.begin >= begin && other.end <= end;
  }
  bool operator==(const SlotRange&) const = default;
};

/// One login session. The interval is [login_ts, logout_ts).
struct SessionEvent {
  std::string user_id;
  std::int64_t login_ts = 0;
  std::int64_t logout_ts = 0;
};

/// Boolean users x slots occupancy grid. Slot t covers
/// [origin_ts + t*slot_seconds, origin_ts + (t+1)*slot_seconds).
class AvailabilityMatrix {
 public:
  AvailabilityMatrix() = default;
  /// All-zero matrix. Throws DataError on duplicate or empty ids, on
  /// slot_seconds <= 0 or on slots == 0.
  AvailabilityMatrix(std::int64_t origin_ts, std::int64_t slot_seconds,
                     std::vector<std::string> users, std::size_t slots);

  std::int64_t origin_ts() const { return origin_ts_; }
  std::int64_t slot_seconds() const { return slot_seconds_; }
  std::size_t user_count() const { return users_.size(); }
  std::size_t slot_count() const { return slots_; }
  SlotRange all_slots() const { return {0, slots_}; }

  const std::vector<std::string>& users() const { return users_; }
  const std::string& user_id(std::size_t u) const { return users_[u]; }
  std::optional<std::size_t> index_of(std::string_view user_id) const;

  bool at(std::size_t u, std::size_t t) const {
    return cells_[u * slots_ + t] != 0;
  }
  void set(std::size_t u, std::size_t t, bool online) {
    cells_[u * slots_ + t] = online ? 1 : 0;
  }
  std::span<const std::uint8_t> row(std::size_t u) const {
    return {cells_.data() + u * slots_, slots_};
  }

  /// Slots per day; throws DataError unless slot_seconds divides a day.
  std::size_t slots_per_day() const;
  std::size_t slots_per_week() const { return slots_per_day() * kDaysPerWeek; }

  std::size_t online_count(std::size_t u, SlotRange range) const;

  /// Rows of `users` (indices), in the given order.
  AvailabilityMatrix select_users(std::span<const std::size_t> users) const;
  /// Rows of the named users, in the given order; throws on unknown ids.
  AvailabilityMatrix select_users(std::span<const std::string> users) const;

  bool operator==(const AvailabilityMatrix& other) const;

 private:
  std::int64_t origin_ts_ = 0;
  std::int64_t slot_seconds_ = 3600;
  std::size_t slots_ = 0;
  std::vector<std::string> users_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::uint8_t> cells_;
};

/// The four consecutive six-week periods A, B, C and D.
struct PeriodSplit {
  SlotRange a, b, c, d;

  /// Accepts "A".."D" (case-insensitive).
  SlotRange by_name(std::string_view name) const;
};

struct IngestOptions {
  /// Drop users that are never online within the horizon.
  bool drop_never_online = false;
};

/// Builds an availability matrix: cell (u, t) is 1 iff some session of u
/// overlaps slot t. Users are sorted lexicographically. Events with
/// logout_ts <= login_ts are rejected (the message names the 1-based row).
AvailabilityMatrix ingest_events(std::span<const SessionEvent> events,
                                 std::int64_t origin_ts,
                                 std::int64_t slot_seconds,
                                 std::size_t horizon_slots,
                                 const IngestOptions& options = {});

PeriodSplit split_periods(const AvailabilityMatrix& m);

/// Users whose mean online time over `reference` is at least
/// `threshold_hours_per_day` hours per day (boundary included).
std::vector<std::string> filter_superpeers(const AvailabilityMatrix& m,
                                           SlotRange reference,
                                           double threshold_hours_per_day = 4.0);

/// Mean of the cells over users x range.
double average_availability(const AvailabilityMatrix& m,
                            std::span<const std::size_t> users,
                            SlotRange range);

/// Per-user online fraction over `range`.
std::vector<double> user_availability(const AvailabilityMatrix& m,
                                      SlotRange range);

/// Parses "A".."D" through `split`, or "begin:end" as explicit slot indices.
SlotRange parse_range(std::string_view spec, const PeriodSplit* split);

// Event CSV: header "user_id,login_ts,logout_ts".
std::vector<SessionEvent> parse_events_csv(std::string_view content);
std::vector<SessionEvent> read_events_csv(const std::filesystem::path& path);

// Matrix file: "#origin_ts=<int> slot_seconds=<int> slots=<int>" followed
// by one "<user_id>,<0/1 string>" line per user.
std::string format_matrix(const AvailabilityMatrix& m);
AvailabilityMatrix parse_matrix(std::string_view content);
void write_matrix(const std::filesystem::path& path, const AvailabilityMatrix& m);
AvailabilityMatrix read_matrix(const std::filesystem::path& path);

}  // namespace uptime
