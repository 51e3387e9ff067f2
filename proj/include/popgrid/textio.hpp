#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace popgrid {

// Shortest round-trip decimal form (std::to_chars); parse the result back
// and you get the identical double.
std::string format_double(double v);
std::string format_int(long long v);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

// Whitespace-separated tokens.
std::vector<std::string_view> split_ws(std::string_view line);
// Comma-separated fields, no quoting (artifact CSVs never need it).
std::vector<std::string_view> split_csv(std::string_view line);

std::string_view trim(std::string_view s);

}  // namespace popgrid
