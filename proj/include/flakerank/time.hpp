#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace flakerank {

/// UTC instant with microsecond resolution.
struct Timestamp {
    std::int64_t micros = 0;  // since 1970-01-01T00:00:00Z

    auto operator<=>(const Timestamp&) const = default;

    static Timestamp from_seconds(std::int64_t s) { return Timestamp{s * 1'000'000}; }
    double seconds() const { return static_cast<double>(micros) / 1e6; }
};

/// Parses an RFC 3339 timestamp. Offsets are normalized to UTC; a missing
/// offset is read as UTC. Fractional seconds beyond microseconds are
/// truncated. Returns nullopt on malformed input.
std::optional<Timestamp> parse_rfc3339(std::string_view s);

/// Canonical UTC form: `YYYY-MM-DDTHH:MM:SS[.ffffff]Z` with the fraction
/// omitted when zero and trailing fraction zeros trimmed.
std::string format_rfc3339(Timestamp t);

/// Calendar month of a UTC instant as `YYYY-MM`.
std::string month_of(Timestamp t);

}  // namespace flakerank
