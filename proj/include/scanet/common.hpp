#pragma once

#include <stdexcept>
#include <string>

namespace scanet {

// Error taxonomy mapped to CLI exit codes: usage errors are handled by the
// argument parser, DataError -> 2, NumericError -> 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void check(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void check_data(bool cond, const std::string& msg) {
  if (!cond) throw DataError(msg);
}

}  // namespace scanet
