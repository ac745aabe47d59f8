#ifndef FIREMU_TEXT_HPP
#define FIREMU_TEXT_HPP

#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace firemu::text {

std::string_view trim(std::string_view s);
std::string lower(std::string_view s);
std::vector<std::string_view> split_whitespace(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char delim);

std::optional<double> parse_double(std::string_view s);
std::optional<float> parse_float(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

/// Shortest representation that reads back to the same float.
std::string format_float(float v);
std::string format_double(double v);

}  // namespace firemu::text

#endif  // FIREMU_TEXT_HPP
