#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace shipcast {

/// Minimal RFC 4180 reader: comma separated, double-quote quoting with ""
/// escapes, quoted fields may span lines, LF or CRLF record terminators.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    /// Reads the next record into `fields`. Returns false at end of input.
    bool next(std::vector<std::string>& fields);

    /// 1-based physical line on which the last record started.
    std::size_t line() const noexcept { return record_line_; }

private:
    std::istream& in_;
    std::size_t line_ = 1;
    std::size_t record_line_ = 0;
};

/// Quotes a field when it contains a comma, quote or line break.
std::string csv_field(std::string_view value);

}  // namespace shipcast
