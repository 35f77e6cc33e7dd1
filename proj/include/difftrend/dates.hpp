#pragma once

#include <string>
#include <string_view>

namespace difftrend {

/// Proleptic Gregorian calendar date. Weekly series arithmetic only needs
/// day counting, so this stays deliberately small: no time zones, no times.
struct Date {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31

    friend bool operator==(const Date&, const Date&) = default;
    friend auto operator<=>(const Date&, const Date&) = default;
};

/// Days since 1970-01-01 (negative before).
long to_days(const Date& d);

Date from_days(long days);

Date add_days(const Date& d, long days);

/// b - a in days.
long days_between(const Date& a, const Date& b);

/// Parses "YYYY-MM-DD". Throws std::invalid_argument on malformed input.
Date parse_date(std::string_view text);

std::string format_date(const Date& d);

bool is_valid_date(const Date& d);

}  // namespace difftrend
