#include "carate/csv.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <system_error>

namespace carate::csv {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

// Data rows start on line 2 (line 1 is the header).
std::string at_line(std::size_t row) { return "line " + std::to_string(row + 2); }

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw DataError("cannot format number");
    return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
        throw DataError("not a finite number: '" + std::string(text) + "'");
    return v;
}

long long parse_int(std::string_view text) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw DataError("not an integer: '" + std::string(text) + "'");
    return v;
}

std::size_t Table::find(std::string_view name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c] == name) return c;
    return std::string_view::npos;
}

std::size_t Table::require(std::string_view name) const {
    const auto c = find(name);
    if (c == std::string_view::npos)
        throw DataError("CSV is missing required column '" + std::string(name) + "'");
    return c;
}

double Table::number(std::size_t row, std::size_t col) const {
    try {
        return parse_double(rows[row][col]);
    } catch (const DataError& e) {
        throw DataError(at_line(row) + ", column '" + header[col] + "': " + e.what());
    }
}

long long Table::integer(std::size_t row, std::size_t col) const {
    try {
        return parse_int(rows[row][col]);
    } catch (const DataError& e) {
        throw DataError(at_line(row) + ", column '" + header[col] + "': " + e.what());
    }
}

Table read(std::istream& in) {
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw DataError("CSV is empty (header required)");
    t.header = split(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split(line);
        if (fields.size() != t.header.size())
            throw DataError("line " + std::to_string(lineno) + ": expected " +
                            std::to_string(t.header.size()) + " fields, found " +
                            std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
    }
    return t;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << fields[i];
    }
    out << '\n';
}

}  // namespace carate::csv
