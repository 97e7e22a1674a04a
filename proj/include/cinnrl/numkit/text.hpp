#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cinnrl::num {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);
/// Whole-field parse; throws ParseError on trailing garbage.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);
std::vector<std::string_view> split(std::string_view line, char sep);

}  // namespace cinnrl::num
