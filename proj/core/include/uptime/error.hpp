#pragma once

#include <stdexcept>
#include <string>

namespace uptime {

/// Raised for malformed input data or violated preconditions on data
/// (bad rows, wrong dimensions, too-short traces).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace uptime
