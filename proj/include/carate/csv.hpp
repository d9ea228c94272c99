#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "carate/core.hpp"

namespace carate::csv {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

double parse_double(std::string_view text);
long long parse_int(std::string_view text);

/// A header row plus data rows of raw fields. Parse errors carry the 1-based
/// line number of the offending row.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index or npos.
    std::size_t find(std::string_view name) const;
    std::size_t require(std::string_view name) const;

    double number(std::size_t row, std::size_t col) const;
    long long integer(std::size_t row, std::size_t col) const;
};

Table read(std::istream& in);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace carate::csv
