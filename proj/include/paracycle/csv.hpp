#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace paracycle::csv {

/// Shortest decimal text that parses back to exactly `x`.
std::string format(double x);

double parse_double(std::string_view text);

std::vector<std::string> split_line(std::string_view line);

}  // namespace paracycle::csv
