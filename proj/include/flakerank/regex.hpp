#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "flakerank/errors.hpp"

namespace flakerank::rx {

/// Raised for patterns outside the supported dialect (backreferences,
/// lookaround, word boundaries) or malformed syntax.
class pattern_error : public validation_error {
public:
    pattern_error(const std::string& reason, std::size_t position)
        : validation_error(reason + " (at offset " + std::to_string(position) + ")"),
          reason_(reason),
          position_(position) {}

    const std::string& reason() const { return reason_; }
    std::size_t position() const { return position_; }

private:
    std::string reason_;
    std::size_t position_;
};

/// Byte-class membership set.
struct CharMask {
    std::array<std::uint64_t, 4> bits{};

    void set(unsigned char c) { bits[c >> 6] |= std::uint64_t{1} << (c & 63); }
    bool test(unsigned char c) const { return (bits[c >> 6] >> (c & 63)) & 1; }
    void invert() {
        for (auto& w : bits) w = ~w;
    }
    void fold_case() {
        for (unsigned c = 'a'; c <= 'z'; ++c) {
            const unsigned up = c - 'a' + 'A';
            if (test(static_cast<unsigned char>(c))) set(static_cast<unsigned char>(up));
            if (test(static_cast<unsigned char>(up))) set(static_cast<unsigned char>(c));
        }
    }
};

/// Compiled pattern over a linear-time dialect: literals, classes,
/// alternation, grouping, counted repetition, and multiline `^`/`$`.
/// `.` does not cross newlines. Backreferences and lookaround are
/// rejected at compile time. Matching is a Thompson NFA simulation,
/// O(text length x pattern size), immutable and thread-safe.
class Regex {
public:
    static Regex compile(std::string_view pattern, bool case_insensitive = false);

    /// True when the pattern matches anywhere in `text`.
    bool search(std::string_view text) const;

    const std::string& source() const { return source_; }

private:
    enum class Op : std::uint8_t { chars, split, eps, line_start, line_end, accept };

    struct State {
        Op op;
        std::uint32_t next0 = 0;
        std::uint32_t next1 = 0;
        std::uint32_t mask = 0;  // index into masks_, for Op::chars
    };

    friend class Compiler;

    std::string source_;
    std::vector<State> states_;
    std::vector<CharMask> masks_;
    std::uint32_t start_ = 0;
};

}  // namespace flakerank::rx
