#pragma once

#include <stdexcept>
#include <string>

namespace klbss {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define KLBSS_DEFINE_ERROR(name)                                   \
  class name : public error {                                      \
   public:                                                         \
    explicit name(const std::string& what) : error(#name ": " + what) {} \
  }

KLBSS_DEFINE_ERROR(SingularConditioning);
KLBSS_DEFINE_ERROR(NotPositiveDefinite);
KLBSS_DEFINE_ERROR(RankDeficient);
KLBSS_DEFINE_ERROR(DimensionMismatch);
KLBSS_DEFINE_ERROR(TooManyCandidates);
KLBSS_DEFINE_ERROR(DegenerateSplit);
KLBSS_DEFINE_ERROR(NoCollider);
KLBSS_DEFINE_ERROR(CovarianceMismatch);
KLBSS_DEFINE_ERROR(NotBipartite);
KLBSS_DEFINE_ERROR(ParseError);
KLBSS_DEFINE_ERROR(CyclicGraph);

#undef KLBSS_DEFINE_ERROR

/// Configuration error carrying the offending line (0 when not line-bound).
class ConfigError : public error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : error("ConfigError: " + (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + what),
        line_(line),
        detail_(what) {}
  int line() const noexcept { return line_; }
  /// Message without the prefix and line number.
  const std::string& detail() const noexcept { return detail_; }

 private:
  int line_;
  std::string detail_;
};

}  // namespace klbss
