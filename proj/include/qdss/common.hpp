#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qdss {

enum class ErrorKind {
  validation,
  referential,
  duplicate,
  not_found,
  state,
  approval_required,
  permission,
  parse,
  io,
  no_history,
};

std::string_view to_string(ErrorKind kind);

/// Every failure in the engine is reported as an Error carrying its kind.
/// `field` names the offending field for validation errors when known.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message, std::string field = {})
      : std::runtime_error(message), kind_(kind), field_(std::move(field)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& field() const noexcept { return field_; }

private:
  ErrorKind kind_;
  std::string field_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message, std::string field = {}) {
  throw Error(kind, message, std::move(field));
}

inline void require(bool ok, std::string_view field, const std::string& message) {
  if (!ok) fail(ErrorKind::validation, std::string(field) + ": " + message, std::string(field));
}

/// UTC instant, second precision, stored as seconds since the Unix epoch.
struct Timestamp {
  std::int64_t seconds = 0;

  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;

  static Timestamp epoch() { return {}; }
  static Timestamp now();
};

/// Parses "YYYY-MM-DDTHH:MM:SSZ" (also accepts a "+00:00" suffix).
Timestamp parse_rfc3339(std::string_view text);
std::string format_rfc3339(Timestamp ts);

struct CivilTime {
  int year;
  unsigned month;
  unsigned day;
};

CivilTime civil_date(Timestamp ts);
Timestamp from_civil(int year, unsigned month, unsigned day, int hour = 0, int minute = 0, int second = 0);

}  // namespace qdss
