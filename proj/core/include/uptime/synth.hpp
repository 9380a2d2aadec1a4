#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "uptime/trace.hpp"

namespace uptime {

/// Per-user generative availability model on an hourly grid. Slot t is
/// online with probability clamp(base_rate * daily[hour] * weekday[dow]),
/// then flipped with probability `noise`.
struct UserProfile {
  double base_rate = 0.5;
  std::array<double, 24> daily;
  std::array<double, 7> weekday;
  double noise = 0.0;

  UserProfile() { daily.fill(1.0); weekday.fill(1.0); }

  double online_probability(std::size_t hour, std::size_t dow) const;
  void validate() const;
};

/// A named block of the profile file replicated `count` times.
struct ProfileGroup {
  std::string name;
  std::size_t count = 1;
  UserProfile profile;
};

/// Generated users are named "u000000", "u000001", ... so that
/// lexicographic and generation order coincide. Each user draws from its
/// own stream seeded by (seed, user index).
AvailabilityMatrix generate_trace(std::span<const UserProfile> profiles,
                                  std::size_t weeks, std::uint64_t seed);

std::vector<UserProfile> expand_groups(std::span<const ProfileGroup> groups);
/// Group name of every expanded user, aligned with expand_groups().
std::vector<std::string> group_labels(std::span<const ProfileGroup> groups);

// Profile file: "[name]" opens a block; inside, key=value lines with keys
// count, base_rate, daily (24 comma-separated), weekday (7, Monday first),
// noise. '#' starts a comment.
std::vector<ProfileGroup> parse_profiles(std::string_view content);
std::vector<ProfileGroup> read_profiles(const std::filesystem::path& path);
std::string format_profiles(std::span<const ProfileGroup> groups);

}  // namespace uptime
