#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ranatomy {

/// RFC 4180 field: quoted when it contains a comma, quote, CR or LF.
[[nodiscard]] std::string csv_field(std::string_view value);

/// Joined fields terminated by CRLF.
[[nodiscard]] std::string csv_row(const std::vector<std::string>& fields);

/// Inverse of csv_row over a whole document. Accepts LF or CRLF endings.
[[nodiscard]] std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Shortest round-trip text of a number, the same form the JSON output uses.
[[nodiscard]] std::string format_number(double value);

}  // namespace ranatomy
