#include "flakerank/text.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace flakerank {

std::string_view trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
    return s.substr(b, e - b);
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::string strip_ansi(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    const std::size_t n = s.size();
    while (i < n) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        if (c != 0x1B) {
            out.push_back(s[i]);
            ++i;
            continue;
        }
        // ESC alone is dropped; CSI and OSC swallow their bodies.
        if (i + 1 >= n) {
            ++i;
            break;
        }
        const char kind = s[i + 1];
        if (kind == '[') {
            i += 2;
            while (i < n && static_cast<unsigned char>(s[i]) >= 0x30 && static_cast<unsigned char>(s[i]) <= 0x3F) ++i;
            while (i < n && static_cast<unsigned char>(s[i]) >= 0x20 && static_cast<unsigned char>(s[i]) <= 0x2F) ++i;
            if (i < n && static_cast<unsigned char>(s[i]) >= 0x40 && static_cast<unsigned char>(s[i]) <= 0x7E) ++i;
        } else if (kind == ']') {
            i += 2;
            while (i < n) {
                if (s[i] == '\x07') {
                    ++i;
                    break;
                }
                if (s[i] == '\x1B' && i + 1 < n && s[i + 1] == '\\') {
                    i += 2;
                    break;
                }
                ++i;
            }
        } else {
            ++i;  // drop the lone ESC, keep the byte after it
        }
    }
    return out;
}

namespace {

constexpr char kReplacement[] = "\xEF\xBF\xBD";  // U+FFFD

int utf8_seq_len(unsigned char lead) {
    if (lead < 0x80) return 1;
    if (lead >= 0xC2 && lead <= 0xDF) return 2;
    if (lead >= 0xE0 && lead <= 0xEF) return 3;
    if (lead >= 0xF0 && lead <= 0xF4) return 4;
    return 0;
}

}  // namespace

std::string sanitize_utf8(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    const std::size_t n = s.size();
    while (i < n) {
        const unsigned char lead = static_cast<unsigned char>(s[i]);
        const int len = utf8_seq_len(lead);
        if (len == 1) {
            out.push_back(s[i]);
            ++i;
            continue;
        }
        bool ok = len > 0 && i + static_cast<std::size_t>(len) <= n;
        if (ok) {
            for (int k = 1; k < len; ++k) {
                const unsigned char cont = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
                if (cont < 0x80 || cont > 0xBF) {
                    ok = false;
                    break;
                }
            }
        }
        if (ok && len == 3) {
            const unsigned char b1 = static_cast<unsigned char>(s[i + 1]);
            if (lead == 0xE0 && b1 < 0xA0) ok = false;              // overlong
            if (lead == 0xED && b1 > 0x9F) ok = false;              // surrogate
        }
        if (ok && len == 4) {
            const unsigned char b1 = static_cast<unsigned char>(s[i + 1]);
            if (lead == 0xF0 && b1 < 0x90) ok = false;              // overlong
            if (lead == 0xF4 && b1 > 0x8F) ok = false;              // > U+10FFFF
        }
        if (ok) {
            out.append(s.substr(i, static_cast<std::size_t>(len)));
            i += static_cast<std::size_t>(len);
        } else {
            out.append(kReplacement, 3);
            ++i;
        }
    }
    return out;
}

std::string format_double(double v) {
    if (!std::isfinite(v)) throw std::invalid_argument("format_double: non-finite value");
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) return std::nullopt;
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<std::int64_t> parse_int64(std::string_view s) {
    std::int64_t v = 0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) return std::nullopt;
    return v;
}

}  // namespace flakerank
