#include "shipcast/date.hpp"

#include <charconv>
#include <fmt/format.h>

namespace shipcast {
namespace {

// Reads an unsigned integer of 1..max_digits digits starting at pos.
std::optional<int> read_int(std::string_view s, std::size_t& pos, std::size_t max_digits) {
    std::size_t end = pos;
    while (end < s.size() && end - pos < max_digits && s[end] >= '0' && s[end] <= '9') ++end;
    if (end == pos) return std::nullopt;
    int value = 0;
    std::from_chars(s.data() + pos, s.data() + end, value);
    pos = end;
    return value;
}

bool expect(std::string_view s, std::size_t& pos, char c) {
    if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
    }
    return false;
}

// Optional "HH:MM[:SS]" clock. Returns false on a malformed clock.
bool read_clock(std::string_view s, std::size_t& pos) {
    auto hh = read_int(s, pos, 2);
    if (!hh || *hh > 23 || !expect(s, pos, ':')) return false;
    auto mm = read_int(s, pos, 2);
    if (!mm || *mm > 59) return false;
    if (expect(s, pos, ':')) {
        auto ss = read_int(s, pos, 2);
        if (!ss || *ss > 60) return false;
    }
    return true;
}

std::optional<Date> make_date(int y, int m, int d) {
    using namespace std::chrono;
    year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd};
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::optional<Date> parse_us(std::string_view s) {
    std::size_t pos = 0;
    auto m = read_int(s, pos, 2);
    if (!m || !expect(s, pos, '/')) return std::nullopt;
    auto d = read_int(s, pos, 2);
    if (!d || !expect(s, pos, '/')) return std::nullopt;
    const std::size_t year_pos = pos;
    auto y = read_int(s, pos, 4);
    if (!y || pos - year_pos != 4) return std::nullopt;
    if (pos < s.size()) {
        if (!expect(s, pos, ' ') || !read_clock(s, pos) || pos != s.size()) return std::nullopt;
    }
    return make_date(*y, *m, *d);
}

std::optional<Date> parse_iso(std::string_view s) {
    std::size_t pos = 0;
    auto y = read_int(s, pos, 4);
    if (!y || pos != 4 || !expect(s, pos, '-')) return std::nullopt;
    auto m = read_int(s, pos, 2);
    if (!m || !expect(s, pos, '-')) return std::nullopt;
    auto d = read_int(s, pos, 2);
    if (!d) return std::nullopt;
    if (pos < s.size()) {
        if (!(expect(s, pos, 'T') || expect(s, pos, ' ')) || !read_clock(s, pos)) return std::nullopt;
        expect(s, pos, 'Z');
        if (pos != s.size()) return std::nullopt;
    }
    return make_date(*y, *m, *d);
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
    const auto s = trim(text);
    if (s.empty()) return std::nullopt;
    if (auto d = parse_us(s)) return d;
    return parse_iso(s);
}

std::string format_iso(Date d) {
    const std::chrono::year_month_day ymd{d};
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

Date week_start(Date d, std::chrono::weekday anchor) {
    const std::chrono::weekday wd{d};
    return d - (wd - anchor);  // weekday difference is always in [0, 6]
}

}  // namespace shipcast
