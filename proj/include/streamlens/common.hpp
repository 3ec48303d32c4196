#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace streamlens {

using Timestamp = std::chrono::sys_seconds;
using Day = std::chrono::sys_days;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller supplied data that violates an operation's precondition.
class InputError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration; `field` is a dotted path into the config document.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Interaction kinds a conversation graph can be built from.
enum class InteractionKind { Mention, Retweet, Reply, Quote };

std::string_view to_string(InteractionKind kind);
InteractionKind parse_interaction_kind(std::string_view text);  // throws ConfigError

inline constexpr InteractionKind kAllInteractionKinds[] = {
    InteractionKind::Mention, InteractionKind::Retweet, InteractionKind::Reply,
    InteractionKind::Quote};

// Timestamps and UTC calendar days.
Day day_of(Timestamp ts);
std::string format_day(Day day);
std::string format_timestamp(Timestamp ts);  // 2020-03-15T23:59:00Z
std::string format_platform_timestamp(Timestamp ts);  // Sun Mar 15 23:59:00 +0000 2020
std::optional<Day> parse_day(std::string_view text);  // YYYY-MM-DD
/// Accepts the platform's "Sun Mar 15 23:59:00 +0000 2020" form and ISO-8601
/// "2020-03-15T23:59:00Z" (fractional seconds and numeric offsets allowed).
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// Renders 206330119 as "206,330,119".
std::string with_thousands(std::uint64_t value);

/// Shortest round-trip decimal rendering, locale independent.
std::string format_real(double value);

}  // namespace streamlens
