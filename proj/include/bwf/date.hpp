#pragma once

#include <array>
#include <compare>
#include <string>
#include <string_view>

namespace bwf {

// Simulation calendar: fixed 365-day years (no Feb 29) so every year has
// exactly 8760 hourly steps.
inline constexpr int kDaysPerYear = 365;
inline constexpr int kHoursPerYear = 8760;
inline constexpr std::array<int, 12> kDaysInMonth{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};

struct Date {
    int year = 2025;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;

    static Date jan1(int year) { return Date{year, 1, 1}; }
    static Date parse(std::string_view text);
    static Date from_day_of_year(int year, int day_of_year);

    bool valid() const;
    bool is_jan1() const { return month == 1 && day == 1; }
    bool is_quarter_start() const { return day == 1 && (month == 1 || month == 4 || month == 7 || month == 10); }
    int day_of_year() const;  // 0-based
    int quarter() const { return (month - 1) / 3; }
    Date plus_years(int years) const { return Date{year + years, month, day}; }
    std::string str() const;
};

int month_start_day(int month);  // 0-based day of year for the 1st of month (1..12)
int quarter_start_day(int quarter);
int month_of_day(int day_of_year);  // 1..12

}  // namespace bwf
