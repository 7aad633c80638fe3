#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bwf::economy {

enum class BudgetRule { PerCapita, InversePopulation, IncomeBased, Equity, Custom };
BudgetRule parse_budget_rule(std::string_view text);  // throws ConfigError
std::string_view budget_rule_name(BudgetRule rule);

struct UtilityStats {
    double population = 0.0;
    double income_index = 1.0;
};

// Shares normalised to the national total to the cent (largest remainder,
// ties to the lower index). Custom weights must sum to 1 within 1e-9.
std::vector<double> allocate_budget(double national_total, BudgetRule rule, const std::vector<UtilityStats>& stats,
                                    const std::vector<double>& custom_weights = {});

struct MarketConditions {
    double risk_free = 0.03;
    double credit_spread = 0.01;
    double demand_sensitivity = 0.02;
    double investor_demand = 1.0;  // d in [0.8, 1.2]
};

double coupon_rate(const MarketConditions& m);

struct Bond {
    std::string utility;
    int issue_year = 0;
    double principal = 0.0;
    double coupon = 0.0;
    double issue_price = 0.0;
    int maturity_years = 20;

    int maturity_year() const { return issue_year + maturity_years; }
    // Interest is paid in every year after issue up to and including maturity.
    bool accrues_in(int year) const { return year > issue_year && year <= maturity_year(); }
    double interest() const { return coupon * principal; }
};

std::optional<Bond> issue_bond_if_needed(const std::string& utility, int year, double shortfall,
                                         const MarketConditions& market, int maturity_years);

// Households pay the fixed charge monthly; only delivered water is billed.
double tariff_revenue(double households, double fixed_per_month, double billed_volume, double volumetric);

// value * prod(1 + rate[y]) for y in [from_year, to_year); divides when going back.
double escalate(double value, const std::map<int, double>& inflation, int from_year, int to_year);

// Daily price shape with mean 1; price = yearly level * shape[hour].
struct DailyShape {
    std::array<double, 24> factor{};

    static DailyShape flat();
    void validate() const;  // throws InputError unless mean is 1 within 1e-9 and factors >= 0
};

double hourly_electricity_price(double yearly_level, const DailyShape& shape, int hour);

// One utility-year of money flows. remaining = carry_in + allocated + revenue
// - capex - opex - fines - interest - principal_repaid + bond_issued.
struct LedgerYear {
    std::string utility;
    int year = 0;
    double carry_in = 0.0;
    double allocated = 0.0;
    double revenue = 0.0;
    double capex = 0.0;
    double opex = 0.0;
    double fines = 0.0;
    double interest = 0.0;
    double principal_repaid = 0.0;
    double bond_issued = 0.0;
    double remaining = 0.0;

    double balance_before_bond() const
    {
        return carry_in + allocated + revenue - capex - opex - fines - interest - principal_repaid;
    }
    // Books a bond for any shortfall and sets the remaining budget.
    std::optional<Bond> close(const MarketConditions& market, int maturity_years);
    double identity_residual() const;
};

}  // namespace bwf::economy
