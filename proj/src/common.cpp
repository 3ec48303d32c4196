#include "streamlens/common.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace streamlens {

std::string_view to_string(InteractionKind kind) {
    switch (kind) {
        case InteractionKind::Mention: return "mention";
        case InteractionKind::Retweet: return "retweet";
        case InteractionKind::Reply: return "reply";
        case InteractionKind::Quote: return "quote";
    }
    return "unknown";
}

InteractionKind parse_interaction_kind(std::string_view text) {
    for (auto kind : kAllInteractionKinds) {
        if (to_string(kind) == text) return kind;
    }
    throw ConfigError("kind", "unknown interaction kind '" + std::string(text) +
                                  "' (expected mention|retweet|reply|quote)");
}

Day day_of(Timestamp ts) { return std::chrono::floor<std::chrono::days>(ts); }

std::string format_day(Day day) {
    const std::chrono::year_month_day ymd{day};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string format_timestamp(Timestamp ts) {
    const auto day = day_of(ts);
    const auto secs = (ts - day).count();
    char buf[64];
    std::snprintf(buf, sizeof buf, "T%02lld:%02lld:%02lldZ", static_cast<long long>(secs / 3600),
                  static_cast<long long>(secs / 60 % 60), static_cast<long long>(secs % 60));
    return format_day(day) + buf;
}

namespace {

constexpr std::array<std::string_view, 12> kMonths = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                      "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
constexpr std::array<std::string_view, 7> kWeekdays = {"Sun", "Mon", "Tue", "Wed",
                                                       "Thu", "Fri", "Sat"};

}  // namespace

std::string format_platform_timestamp(Timestamp ts) {
    const auto day = day_of(ts);
    const std::chrono::year_month_day ymd{day};
    const std::chrono::weekday wd{day};
    const auto secs = (ts - day).count();
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s %s %02u %02lld:%02lld:%02lld +0000 %04d",
                  kWeekdays[wd.c_encoding()].data(),
                  kMonths[static_cast<unsigned>(ymd.month()) - 1].data(),
                  static_cast<unsigned>(ymd.day()), static_cast<long long>(secs / 3600),
                  static_cast<long long>(secs / 60 % 60), static_cast<long long>(secs % 60),
                  static_cast<int>(ymd.year()));
    return buf;
}

namespace {

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > text.size()) return false;
    const char* first = text.data() + pos;
    const char* last = first + len;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

std::optional<Timestamp> make_timestamp(int y, int mo, int d, int h, int mi, int s) {
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                             day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) {
        return std::nullopt;
    }
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

// "Sun Mar 15 23:59:00 +0000 2020"
std::optional<Timestamp> parse_platform_form(std::string_view t) {
    if (t.size() != 30 || t[3] != ' ' || t[7] != ' ' || t[10] != ' ' || t[19] != ' ' ||
        t[25] != ' ') {
        return std::nullopt;
    }
    int month = 0;
    for (std::size_t i = 0; i < kMonths.size(); ++i) {
        if (t.substr(4, 3) == kMonths[i]) month = static_cast<int>(i) + 1;
    }
    int d, h, mi, s, y, off;
    if (month == 0 || !read_int(t, 8, 2, d) || !read_int(t, 11, 2, h) ||
        !read_int(t, 14, 2, mi) || !read_int(t, 17, 2, s) || !read_int(t, 26, 4, y) ||
        !read_int(t, 21, 4, off)) {
        return std::nullopt;
    }
    if (t[20] != '+' && t[20] != '-') return std::nullopt;
    auto ts = make_timestamp(y, month, d, h, mi, s);
    if (!ts) return std::nullopt;
    const auto offset = std::chrono::minutes{(off / 100) * 60 + off % 100};
    return t[20] == '+' ? *ts - offset : *ts + offset;
}

std::optional<Timestamp> parse_iso_form(std::string_view t) {
    int y, mo, d, h = 0, mi = 0, s = 0;
    if (t.size() < 10 || t[4] != '-' || t[7] != '-' || !read_int(t, 0, 4, y) ||
        !read_int(t, 5, 2, mo) || !read_int(t, 8, 2, d)) {
        return std::nullopt;
    }
    std::size_t pos = 10;
    if (pos < t.size()) {
        if ((t[pos] != 'T' && t[pos] != ' ') || t.size() < 19 || t[13] != ':' || t[16] != ':' ||
            !read_int(t, 11, 2, h) || !read_int(t, 14, 2, mi) || !read_int(t, 17, 2, s)) {
            return std::nullopt;
        }
        pos = 19;
        if (pos < t.size() && t[pos] == '.') {
            ++pos;
            while (pos < t.size() && t[pos] >= '0' && t[pos] <= '9') ++pos;
        }
    }
    auto ts = make_timestamp(y, mo, d, h, mi, s);
    if (!ts) return std::nullopt;
    if (pos == t.size() || (t[pos] == 'Z' && pos + 1 == t.size())) return ts;
    if ((t[pos] == '+' || t[pos] == '-') && t.size() - pos == 6 && t[pos + 3] == ':') {
        int oh, om;
        if (!read_int(t, pos + 1, 2, oh) || !read_int(t, pos + 4, 2, om)) return std::nullopt;
        const auto offset = std::chrono::minutes{oh * 60 + om};
        return t[pos] == '+' ? *ts - offset : *ts + offset;
    }
    return std::nullopt;
}

}  // namespace

std::optional<Day> parse_day(std::string_view text) {
    if (text.size() != 10) return std::nullopt;
    auto ts = parse_iso_form(text);
    if (!ts) return std::nullopt;
    return day_of(*ts);
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    if (auto ts = parse_platform_form(text)) return ts;
    return parse_iso_form(text);
}

std::string with_thousands(std::uint64_t value) {
    std::string digits = std::to_string(value);
    std::string out;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i != 0 && (digits.size() - i) % 3 == 0) out.push_back(',');
        out.push_back(digits[i]);
    }
    return out;
}

std::string format_real(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (value == 0.0) return "0";
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

}  // namespace streamlens
