#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fmsckf {

/// Covariance or state became non-finite. Not recoverable.
class FilterDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two consecutive IMU samples further apart than the integration limit.
class ImuGap : public std::runtime_error {
 public:
  ImuGap(std::int64_t from_ns, std::int64_t to_ns)
      : std::runtime_error("IMU gap between " + std::to_string(from_ns) + " ns and " +
                           std::to_string(to_ns) + " ns"),
        from_ns(from_ns),
        to_ns(to_ns) {}
  std::int64_t from_ns;
  std::int64_t to_ns;
};

/// Malformed input file; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line(line) {}
  std::size_t line;
};

}  // namespace fmsckf
