#pragma once

#include <stdexcept>
#include <string>

namespace rssiloc {

/// Caller passed a value outside an operation's domain (empty list, NaN, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Anchor geometry cannot determine a position (collinear or coincident beacons).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No sample for a beacon within the allowed staleness window.
class StalenessError : public std::runtime_error {
 public:
  StalenessError(std::string beacon_id, const std::string& what)
      : std::runtime_error(what), beacon_id_(std::move(beacon_id)) {}

  const std::string& beacon_id() const noexcept { return beacon_id_; }

 private:
  std::string beacon_id_;
};

/// Malformed input file. `line` is 1-based, 0 when the error is not tied to a row.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& message)
      : std::runtime_error(format(source, line, message)),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& source, std::size_t line,
                            const std::string& message) {
    if (line == 0) return source + ": " + message;
    return source + ":" + std::to_string(line) + ": " + message;
  }

  std::string source_;
  std::size_t line_;
};

}  // namespace rssiloc
