#include "uptime/random.hpp"

namespace uptime {

std::uint64_t derive_seed(std::uint64_t root, std::string_view name,
                          std::uint64_t index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(root ^ h) + splitmix64(index));
}

}  // namespace uptime
