#include "flakerank/time.hpp"

#include <array>
#include <cstdio>

namespace flakerank {

namespace {

// Days from civil date, proleptic Gregorian (Howard Hinnant's algorithm).
std::int64_t days_from_civil(std::int64_t y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct CivilDate {
    std::int64_t year;
    int month;
    int day;
};

CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return CivilDate{y + (m <= 2), static_cast<int>(m), static_cast<int>(d)};
}

bool is_leap(std::int64_t y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

int days_in_month(std::int64_t y, int m) {
    static constexpr std::array<int, 12> kDays{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return kDays[static_cast<std::size_t>(m - 1)];
}

bool read_digits(std::string_view s, std::size_t& i, int count, std::int64_t& out) {
    out = 0;
    for (int k = 0; k < count; ++k) {
        if (i >= s.size() || s[i] < '0' || s[i] > '9') return false;
        out = out * 10 + (s[i] - '0');
        ++i;
    }
    return true;
}

}  // namespace

std::optional<Timestamp> parse_rfc3339(std::string_view s) {
    std::size_t i = 0;
    std::int64_t year, month, day, hour, minute, second;
    if (!read_digits(s, i, 4, year)) return std::nullopt;
    if (i >= s.size() || s[i] != '-') return std::nullopt;
    ++i;
    if (!read_digits(s, i, 2, month)) return std::nullopt;
    if (i >= s.size() || s[i] != '-') return std::nullopt;
    ++i;
    if (!read_digits(s, i, 2, day)) return std::nullopt;
    if (i >= s.size() || (s[i] != 'T' && s[i] != 't')) return std::nullopt;
    ++i;
    if (!read_digits(s, i, 2, hour)) return std::nullopt;
    if (i >= s.size() || s[i] != ':') return std::nullopt;
    ++i;
    if (!read_digits(s, i, 2, minute)) return std::nullopt;
    if (i >= s.size() || s[i] != ':') return std::nullopt;
    ++i;
    if (!read_digits(s, i, 2, second)) return std::nullopt;

    if (month < 1 || month > 12) return std::nullopt;
    if (day < 1 || day > days_in_month(year, static_cast<int>(month))) return std::nullopt;
    if (hour > 23 || minute > 59 || second > 59) return std::nullopt;

    std::int64_t frac_micros = 0;
    if (i < s.size() && s[i] == '.') {
        ++i;
        int digits = 0;
        std::int64_t scale = 100000;
        if (i >= s.size() || s[i] < '0' || s[i] > '9') return std::nullopt;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
            if (digits < 6) frac_micros += (s[i] - '0') * scale;
            scale /= 10;
            ++digits;
            ++i;
        }
    }

    std::int64_t offset_minutes = 0;
    if (i < s.size()) {
        const char c = s[i];
        if (c == 'Z' || c == 'z') {
            ++i;
        } else if (c == '+' || c == '-') {
            ++i;
            std::int64_t oh, om;
            if (!read_digits(s, i, 2, oh)) return std::nullopt;
            if (i >= s.size() || s[i] != ':') return std::nullopt;
            ++i;
            if (!read_digits(s, i, 2, om)) return std::nullopt;
            if (oh > 23 || om > 59) return std::nullopt;
            offset_minutes = oh * 60 + om;
            if (c == '-') offset_minutes = -offset_minutes;
        } else {
            return std::nullopt;
        }
    }
    if (i != s.size()) return std::nullopt;

    const std::int64_t days = days_from_civil(year, static_cast<int>(month), static_cast<int>(day));
    std::int64_t secs = days * 86400 + hour * 3600 + minute * 60 + second;
    secs -= offset_minutes * 60;
    return Timestamp{secs * 1'000'000 + frac_micros};
}

std::string format_rfc3339(Timestamp t) {
    std::int64_t micros = t.micros;
    std::int64_t secs = micros >= 0 ? micros / 1'000'000 : (micros - 999'999) / 1'000'000;
    std::int64_t frac = micros - secs * 1'000'000;
    std::int64_t days = secs >= 0 ? secs / 86400 : (secs - 86399) / 86400;
    std::int64_t sod = secs - days * 86400;
    const CivilDate cd = civil_from_days(days);

    char buf[48];
    int len = std::snprintf(buf, sizeof(buf), "%04lld-%02d-%02dT%02d:%02d:%02d",
                            static_cast<long long>(cd.year), cd.month, cd.day,
                            static_cast<int>(sod / 3600), static_cast<int>((sod % 3600) / 60),
                            static_cast<int>(sod % 60));
    std::string out(buf, static_cast<std::size_t>(len));
    if (frac != 0) {
        std::snprintf(buf, sizeof(buf), ".%06lld", static_cast<long long>(frac));
        std::string f(buf);
        while (f.back() == '0') f.pop_back();
        out += f;
    }
    out += 'Z';
    return out;
}

std::string month_of(Timestamp t) {
    std::int64_t secs = t.micros >= 0 ? t.micros / 1'000'000 : (t.micros - 999'999) / 1'000'000;
    std::int64_t days = secs >= 0 ? secs / 86400 : (secs - 86399) / 86400;
    const CivilDate cd = civil_from_days(days);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04lld-%02d", static_cast<long long>(cd.year), cd.month);
    return buf;
}

}  // namespace flakerank
