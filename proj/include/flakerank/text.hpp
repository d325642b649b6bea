#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace flakerank {

std::string_view trim(std::string_view s);

std::string ascii_lower(std::string_view s);

/// Removes ANSI CSI and OSC escape sequences. Every ESC byte is consumed,
/// so the result contains no 0x1B and the function is idempotent.
std::string strip_ansi(std::string_view s);

/// Replaces invalid UTF-8 bytes with U+FFFD (one replacement per bad byte).
std::string sanitize_utf8(std::string_view s);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int64(std::string_view s);

}  // namespace flakerank
