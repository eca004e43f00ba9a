#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace devrec {

/// UTC instant at one-second resolution.
using Timestamp = std::chrono::sys_seconds;

/// Parses ISO-8601 UTC: `YYYY-MM-DD`, `YYYY-MM-DDThh:mm:ss`, optionally with
/// fractional seconds (truncated) and a `Z` or `+hh:mm` offset.
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// Formats as `YYYY-MM-DDThh:mm:ssZ`.
std::string format_timestamp(Timestamp ts);

Timestamp now_utc();

inline double days_between(Timestamp from, Timestamp to) {
  return static_cast<double>((to - from).count()) / 86400.0;
}

}  // namespace devrec
