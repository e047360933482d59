#ifndef AQE_TEXT_FORMAT_HPP
#define AQE_TEXT_FORMAT_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace aqe {

// Shortest representation that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);
std::uint64_t parse_uint(std::string_view text);

// Bytes outside '!'..'~', plus '%' and '"', become %XX. The empty string is
// written as "".
std::string percent_encode(std::string_view s);
std::string percent_decode(std::string_view s);

// Splits on runs of spaces/tabs.
std::vector<std::string> split_ws(std::string_view line);

}  // namespace aqe

#endif  // AQE_TEXT_FORMAT_HPP
