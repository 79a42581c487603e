#ifndef EDF_CSV_HPP
#define EDF_CSV_HPP

#include <fstream>
#include <string>
#include <vector>

#include "edf/errors.hpp"

namespace edf::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// RFC-4180 style: comma separated, optional double-quote quoting with ""
// escapes, first row is the header. Accepts LF and CRLF line endings.
inline Table read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open file: " + path);
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());

    Table table;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool any_field = false;

    auto end_field = [&]() {
        record.push_back(field);
        field.clear();
        any_field = false;
    };
    auto end_record = [&]() {
        end_field();
        if (table.header.empty())
            table.header = std::move(record);
        else
            table.rows.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < content.size(); ++i) {
        const char c = content[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                any_field = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                break;
            case '\n':
                end_record();
                break;
            default:
                field.push_back(c);
                any_field = true;
        }
    }
    if (in_quotes) throw data_error("unterminated quoted field in " + path);
    if (any_field || !field.empty() || !record.empty()) end_record();

    if (table.header.empty()) throw data_error("empty CSV file: " + path);
    for (const auto& row : table.rows)
        if (row.size() != table.header.size())
            throw data_error("ragged CSV row in " + path);
    return table;
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    std::size_t pos = 0;
    try {
        out = std::stod(s, &pos);
    } catch (const std::exception&) {
        return false;
    }
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    return pos == s.size();
}

} // namespace edf::csv

#endif
