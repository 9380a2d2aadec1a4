#include "uptime/synth.hpp"

#include <algorithm>
#include <cstdio>

#include "uptime/error.hpp"
#include "uptime/random.hpp"
#include "uptime/text_io.hpp"

namespace uptime {

double UserProfile::online_probability(std::size_t hour, std::size_t dow) const {
  return std::clamp(base_rate * daily[hour] * weekday[dow], 0.0, 1.0);
}

void UserProfile::validate() const {
  if (!(base_rate >= 0.0 && base_rate <= 1.0))
    throw DataError("base_rate must lie in [0,1]");
  if (!(noise >= 0.0 && noise <= 1.0)) throw DataError("noise must lie in [0,1]");
  for (double v : daily)
    if (!(v >= 0.0)) throw DataError("daily multipliers must be >= 0");
  for (double v : weekday)
    if (!(v >= 0.0)) throw DataError("weekday multipliers must be >= 0");
}

AvailabilityMatrix generate_trace(std::span<const UserProfile> profiles,
                                  std::size_t weeks, std::uint64_t seed) {
  if (weeks == 0) throw DataError("weeks must be >= 1");
  for (const auto& p : profiles) p.validate();
  std::vector<std::string> ids;
  ids.reserve(profiles.size());
  for (std::size_t u = 0; u < profiles.size(); ++u) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "u%06zu", u);
    ids.emplace_back(buf);
  }
  const std::size_t slots = weeks * kDaysPerWeek * 24;
  AvailabilityMatrix m(0, 3600, std::move(ids), slots);
  for (std::size_t u = 0; u < profiles.size(); ++u) {
    const auto& p = profiles[u];
    Rng rng(derive_seed(seed, "synth.user", u));
    for (std::size_t t = 0; t < slots; ++t) {
      const std::size_t hour = t % 24;
      const std::size_t dow = (t / 24) % kDaysPerWeek;
      bool online = bernoulli(rng, p.online_probability(hour, dow));
      if (bernoulli(rng, p.noise)) online = !online;
      m.set(u, t, online);
    }
  }
  return m;
}

std::vector<UserProfile> expand_groups(std::span<const ProfileGroup> groups) {
  std::vector<UserProfile> out;
  for (const auto& g : groups) out.insert(out.end(), g.count, g.profile);
  return out;
}

std::vector<std::string> group_labels(std::span<const ProfileGroup> groups) {
  std::vector<std::string> out;
  for (const auto& g : groups) out.insert(out.end(), g.count, g.name);
  return out;
}

namespace {

template <std::size_t N>
void parse_array(std::string_view value, std::array<double, N>& out,
                 std::string_view what) {
  const auto v = text::parse_real_list(value, what);
  if (v.size() != N)
    throw DataError(std::string(what) + " needs " + std::to_string(N) +
                    " values, got " + std::to_string(v.size()));
  std::copy(v.begin(), v.end(), out.begin());
}

}  // namespace

std::vector<ProfileGroup> parse_profiles(std::string_view content) {
  std::vector<ProfileGroup> groups;
  const auto rows = text::lines(content);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto line = rows[i];
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    const std::string where = "profile line " + std::to_string(i + 1);
    if (line.front() == '[') {
      if (line.back() != ']') throw DataError(where + ": unterminated '['");
      ProfileGroup g;
      g.name = std::string(text::trim(line.substr(1, line.size() - 2)));
      if (g.name.empty()) throw DataError(where + ": empty group name");
      groups.push_back(std::move(g));
      continue;
    }
    if (groups.empty()) throw DataError(where + ": key outside a [group] block");
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw DataError(where + ": expected key=value");
    const auto key = text::trim(line.substr(0, eq));
    const auto value = text::trim(line.substr(eq + 1));
    auto& g = groups.back();
    if (key == "count") {
      const auto c = text::parse_int(value, where);
      if (c < 0) throw DataError(where + ": negative count");
      g.count = static_cast<std::size_t>(c);
    } else if (key == "base_rate") {
      g.profile.base_rate = text::parse_real(value, where);
    } else if (key == "noise") {
      g.profile.noise = text::parse_real(value, where);
    } else if (key == "daily") {
      parse_array(value, g.profile.daily, where + " daily");
    } else if (key == "weekday") {
      parse_array(value, g.profile.weekday, where + " weekday");
    } else {
      throw DataError(where + ": unknown key '" + std::string(key) + "'");
    }
  }
  for (const auto& g : groups) g.profile.validate();
  return groups;
}

std::vector<ProfileGroup> read_profiles(const std::filesystem::path& path) {
  return parse_profiles(text::read_file(path));
}

std::string format_profiles(std::span<const ProfileGroup> groups) {
  std::string out;
  for (const auto& g : groups) {
    out += "[" + g.name + "]\n";
    out += "count=" + std::to_string(g.count) + "\n";
    out += "base_rate=" + text::format_exact(g.profile.base_rate) + "\n";
    out += "daily=" + text::join_exact(g.profile.daily.data(), 24) + "\n";
    out += "weekday=" + text::join_exact(g.profile.weekday.data(), 7) + "\n";
    out += "noise=" + text::format_exact(g.profile.noise) + "\n\n";
  }
  return out;
}

}  // namespace uptime
