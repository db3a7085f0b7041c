#include "qdss/common.hpp"

#include <chrono>
#include <cstdio>

namespace qdss {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::referential: return "referential";
    case ErrorKind::duplicate: return "duplicate";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::state: return "state";
    case ErrorKind::approval_required: return "approval_required";
    case ErrorKind::permission: return "permission";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
    case ErrorKind::no_history: return "no_history";
  }
  return "unknown";
}

Timestamp Timestamp::now() {
  auto since = std::chrono::system_clock::now().time_since_epoch();
  return {std::chrono::duration_cast<std::chrono::seconds>(since).count()};
}

namespace {

int digits(std::string_view text, std::size_t pos, std::size_t count) {
  if (pos + count > text.size()) fail(ErrorKind::parse, "timestamp too short: " + std::string(text));
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    char c = text[i];
    if (c < '0' || c > '9') fail(ErrorKind::parse, "bad timestamp digit in: " + std::string(text));
    value = value * 10 + (c - '0');
  }
  return value;
}

void expect(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || (text[pos] != c && !(c == 'T' && text[pos] == 't')))
    fail(ErrorKind::parse, "malformed timestamp: " + std::string(text));
}

}  // namespace

Timestamp from_civil(int year, unsigned month, unsigned day, int hour, int minute, int second) {
  using namespace std::chrono;
  year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok()) fail(ErrorKind::validation, "invalid calendar date");
  auto days = sys_days{ymd}.time_since_epoch().count();
  return {static_cast<std::int64_t>(days) * 86400 + hour * 3600 + minute * 60 + second};
}

Timestamp parse_rfc3339(std::string_view text) {
  int y = digits(text, 0, 4);
  expect(text, 4, '-');
  int mo = digits(text, 5, 2);
  expect(text, 7, '-');
  int d = digits(text, 8, 2);
  expect(text, 10, 'T');
  int h = digits(text, 11, 2);
  expect(text, 13, ':');
  int mi = digits(text, 14, 2);
  expect(text, 16, ':');
  int s = digits(text, 17, 2);
  std::string_view zone = text.substr(19);
  if (zone != "Z" && zone != "z" && zone != "+00:00")
    fail(ErrorKind::parse, "timestamp must be UTC: " + std::string(text));
  if (mo < 1 || mo > 12 || h > 23 || mi > 59 || s > 59)
    fail(ErrorKind::parse, "timestamp field out of range: " + std::string(text));
  try {
    return from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d), h, mi, s);
  } catch (const Error&) {
    fail(ErrorKind::parse, "invalid calendar date: " + std::string(text));
  }
}

CivilTime civil_date(Timestamp ts) {
  using namespace std::chrono;
  std::int64_t day_count = ts.seconds >= 0 ? ts.seconds / 86400 : (ts.seconds - 86399) / 86400;
  year_month_day ymd{sys_days{days{day_count}}};
  return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
          static_cast<unsigned>(ymd.day())};
}

std::string format_rfc3339(Timestamp ts) {
  CivilTime c = civil_date(ts);
  std::int64_t rem = ts.seconds % 86400;
  if (rem < 0) rem += 86400;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", c.year, c.month, c.day,
                static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60), static_cast<int>(rem % 60));
  return buf;
}

}  // namespace qdss
