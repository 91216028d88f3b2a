#ifndef ADVP_ERRORS_HPP
#define ADVP_ERRORS_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace advp {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments or mismatched shapes/configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A NaN/Inf appeared; `layer()` names the offending layer when known.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what, std::optional<std::size_t> layer = std::nullopt)
      : Error(what), layer_(layer) {}
  std::optional<std::size_t> layer() const { return layer_; }

 private:
  std::optional<std::size_t> layer_;
};

// Malformed input file. `offset()` is the byte offset where parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Well-formed input whose contents contradict themselves (counts, shapes).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class UnsupportedVersionError : public Error {
 public:
  using Error::Error;
};

// A ratio metric whose denominator is empty (reported as N/A, never 0).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace advp

#endif  // ADVP_ERRORS_HPP
