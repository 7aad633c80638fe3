#include "bwf/economy.hpp"

#include "bwf/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bwf::economy {

BudgetRule parse_budget_rule(std::string_view text)
{
    if (text == "per_capita")
        return BudgetRule::PerCapita;
    if (text == "inverse_population")
        return BudgetRule::InversePopulation;
    if (text == "income_based")
        return BudgetRule::IncomeBased;
    if (text == "equity")
        return BudgetRule::Equity;
    if (text == "custom")
        return BudgetRule::Custom;
    throw ConfigError("unknown budget rule '" + std::string(text) + "'");
}

std::string_view budget_rule_name(BudgetRule rule)
{
    switch (rule) {
    case BudgetRule::PerCapita:
        return "per_capita";
    case BudgetRule::InversePopulation:
        return "inverse_population";
    case BudgetRule::IncomeBased:
        return "income_based";
    case BudgetRule::Equity:
        return "equity";
    case BudgetRule::Custom:
        return "custom";
    }
    return "custom";
}

std::vector<double> allocate_budget(double national_total, BudgetRule rule, const std::vector<UtilityStats>& stats,
                                    const std::vector<double>& custom_weights)
{
    const std::size_t n = stats.size();
    if (n == 0)
        return {};
    if (!(national_total >= 0.0) || !std::isfinite(national_total))
        throw ConfigError("national budget must be a finite non-negative amount");

    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const UtilityStats& s = stats[i];
        switch (rule) {
        case BudgetRule::PerCapita:
            w[i] = s.population;
            break;
        case BudgetRule::InversePopulation:
            if (!(s.population > 0.0))
                throw ConfigError("inverse-population rule needs positive populations");
            w[i] = 1.0 / s.population;
            break;
        case BudgetRule::IncomeBased:
            w[i] = s.income_index;
            break;
        case BudgetRule::Equity:
            if (!(s.income_index > 0.0))
                throw ConfigError("equity rule needs positive income indices");
            w[i] = 1.0 / s.income_index;
            break;
        case BudgetRule::Custom:
            break;
        }
    }
    if (rule == BudgetRule::Custom) {
        if (custom_weights.size() != n)
            throw ConfigError("custom budget weights must list every utility");
        double sum = 0.0;
        for (double x : custom_weights) {
            if (!(x >= 0.0))
                throw ConfigError("custom budget weights must be non-negative");
            sum += x;
        }
        if (std::fabs(sum - 1.0) > 1e-9)
            throw ConfigError("custom budget weights must sum to 1");
        w = custom_weights;
    }
    double total_w = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(total_w > 0.0))
        throw ConfigError("budget weights are all zero");

    const auto cents = static_cast<long long>(std::llround(national_total * 100.0));
    std::vector<long long> share(n);
    std::vector<double> remainder(n);
    long long given = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double exact = static_cast<double>(cents) * (w[i] / total_w);
        share[i] = static_cast<long long>(std::floor(exact));
        remainder[i] = exact - static_cast<double>(share[i]);
        given += share[i];
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; given < cents; k = (k + 1) % n, ++given)
        ++share[order[k]];
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = static_cast<double>(share[i]) / 100.0;
    return out;
}

double coupon_rate(const MarketConditions& m)
{
    // grouped so the d = 0.8 / 1.0 / 1.2 endpoints come out exact in binary
    return m.risk_free + (m.credit_spread + m.demand_sensitivity * (1.0 - m.investor_demand));
}

std::optional<Bond> issue_bond_if_needed(const std::string& utility, int year, double shortfall,
                                         const MarketConditions& market, int maturity_years)
{
    if (!(shortfall > 0.0))
        return std::nullopt;
    Bond b;
    b.utility = utility;
    b.issue_year = year;
    b.principal = shortfall;
    b.coupon = coupon_rate(market);
    b.issue_price = shortfall;
    b.maturity_years = maturity_years;
    return b;
}

double tariff_revenue(double households, double fixed_per_month, double billed_volume, double volumetric)
{
    return households * fixed_per_month * 12.0 + std::max(billed_volume, 0.0) * volumetric;
}

double escalate(double value, const std::map<int, double>& inflation, int from_year, int to_year)
{
    auto rate = [&](int y) {
        auto it = inflation.find(y);
        if (it == inflation.end())
            throw InputError("inflation path does not cover year " + std::to_string(y));
        return it->second;
    };
    double out = value;
    for (int y = from_year; y < to_year; ++y)
        out *= 1.0 + rate(y);
    for (int y = to_year; y < from_year; ++y)
        out /= 1.0 + rate(y);
    return out;
}

DailyShape DailyShape::flat()
{
    DailyShape s;
    s.factor.fill(1.0);
    return s;
}

void DailyShape::validate() const
{
    double sum = 0.0;
    for (double f : factor) {
        if (!(f >= 0.0))
            throw InputError("daily price shape factors must be non-negative");
        sum += f;
    }
    if (std::fabs(sum / 24.0 - 1.0) > 1e-9)
        throw InputError("daily price shape must have mean 1");
}

double hourly_electricity_price(double yearly_level, const DailyShape& shape, int hour)
{
    if (hour < 0 || hour > 23)
        throw InputError("hour of day out of range");
    return yearly_level * shape.factor[static_cast<std::size_t>(hour)];
}

std::optional<Bond> LedgerYear::close(const MarketConditions& market, int maturity_years)
{
    double balance = balance_before_bond();
    auto bond = issue_bond_if_needed(utility, year, -balance, market, maturity_years);
    bond_issued = bond ? bond->principal : 0.0;
    remaining = bond ? 0.0 : balance;
    return bond;
}

double LedgerYear::identity_residual() const
{
    return remaining - (balance_before_bond() + bond_issued);
}

}  // namespace bwf::economy
