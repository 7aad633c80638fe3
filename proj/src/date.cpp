#include "bwf/date.hpp"

#include "bwf/error.hpp"

#include <charconv>
#include <cstdio>

namespace bwf {

namespace {

int parse_int(std::string_view text, std::string_view whole)
{
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw DateError("malformed date '" + std::string(whole) + "' (expected YYYY-MM-DD)");
    return value;
}

}  // namespace

Date Date::parse(std::string_view text)
{
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        throw DateError("malformed date '" + std::string(text) + "' (expected YYYY-MM-DD)");
    Date d{parse_int(text.substr(0, 4), text), parse_int(text.substr(5, 2), text),
           parse_int(text.substr(8, 2), text)};
    if (!d.valid())
        throw DateError("invalid calendar date '" + std::string(text) + "'");
    return d;
}

Date Date::from_day_of_year(int year, int day_of_year)
{
    if (day_of_year < 0 || day_of_year >= kDaysPerYear)
        throw DateError("day of year out of range: " + std::to_string(day_of_year));
    int month = month_of_day(day_of_year);
    return Date{year, month, day_of_year - month_start_day(month) + 1};
}

bool Date::valid() const
{
    return month >= 1 && month <= 12 && day >= 1 && day <= kDaysInMonth[month - 1];
}

int Date::day_of_year() const
{
    return month_start_day(month) + day - 1;
}

std::string Date::str() const
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

int month_start_day(int month)
{
    int start = 0;
    for (int m = 1; m < month; ++m)
        start += kDaysInMonth[m - 1];
    return start;
}

int quarter_start_day(int quarter)
{
    return month_start_day(quarter * 3 + 1);
}

int month_of_day(int day_of_year)
{
    int month = 1;
    while (month < 12 && day_of_year >= month_start_day(month + 1))
        ++month;
    return month;
}

}  // namespace bwf
