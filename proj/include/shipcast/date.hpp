#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace shipcast {

using Date = std::chrono::sys_days;

/// Parses "M/D/YYYY H:MM" (DataCo style), falling back to ISO-8601
/// "YYYY-MM-DD" with an optional "THH:MM[:SS]" or " HH:MM[:SS]" suffix.
/// The time of day is validated and discarded.
std::optional<Date> parse_date(std::string_view text);

/// "YYYY-MM-DD".
std::string format_iso(Date d);

/// First day of the week containing `d`, for weeks starting on `anchor`.
Date week_start(Date d, std::chrono::weekday anchor);

}  // namespace shipcast
