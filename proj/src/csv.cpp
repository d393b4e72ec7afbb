#include "shipcast/csv.hpp"

namespace shipcast {

bool CsvReader::next(std::vector<std::string>& fields) {
    fields.clear();
    int c = in_.get();
    if (c == std::char_traits<char>::eof()) return false;

    record_line_ = line_;
    std::string field;
    bool quoted = false;
    bool field_started_quoted = false;

    for (;; c = in_.get()) {
        if (c == std::char_traits<char>::eof()) {
            fields.push_back(std::move(field));
            return true;
        }
        const char ch = static_cast<char>(c);
        if (quoted) {
            if (ch == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                if (ch == '\n') ++line_;
                field.push_back(ch);
            }
            continue;
        }
        switch (ch) {
            case '"':
                if (field.empty() && !field_started_quoted) {
                    quoted = true;
                    field_started_quoted = true;
                } else {
                    field.push_back(ch);
                }
                break;
            case ',':
                fields.push_back(std::move(field));
                field.clear();
                field_started_quoted = false;
                break;
            case '\r':
                if (in_.peek() == '\n') break;
                field.push_back(ch);
                break;
            case '\n':
                ++line_;
                fields.push_back(std::move(field));
                return true;
            default:
                field.push_back(ch);
        }
    }
}

std::string csv_field(std::string_view value) {
    if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
    std::string out = "\"";
    for (char ch : value) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

}  // namespace shipcast
