#pragma once

#include "bwf/economy.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bwf::kpi {

// A capital intervention annualized straight-line over its life: K/L is
// charged in each of the L years from commissioning.
struct Asset {
    std::string id;
    std::string utility;
    std::string kind;  // source, pipe, pump, pv
    double capital = 0.0;  // EUR
    double lifetime = 1.0;  // years
    int commission_year = 0;
    double embedded_emissions = 0.0;  // tCO2eq over the whole life
    std::string emission_basis;        // per_meter, per_unit, per_capacity

    bool alive_in(int year) const { return year >= commission_year && year < commission_year + lifetime; }
};

double annualized_capex(const std::vector<Asset>& assets, int year);  // throws InputError on L <= 0
double embedded_ghg(const std::vector<Asset>& assets, int year);      // tCO2eq
double bond_interest(const std::vector<economy::Bond>& bonds, int year);

// Yearly TAC = sum K/L over alive assets + OPEX + sum coupon * principal.
double tac_year(const std::vector<Asset>& assets, double opex, const std::vector<economy::Bond>& bonds, int year);

double operational_ghg(double energy_kwh, double ef_kg_per_kwh);  // tCO2eq

struct Cell {
    std::string utility;
    std::string municipality;
    std::string household_class;
    int year = 0;
    double demand = 0.0;
    double delivered = 0.0;

    double undelivered() const { return demand > delivered ? demand - delivered : 0.0; }
};

// Not-applicable (nullopt) when the slice has no demand.
std::optional<double> reliability(const std::vector<Cell>& cells);

double lifeline_volume(double household_size, double per_person = 1.5);  // m3/month
// Percent of the 20th-percentile monthly income spent on the lifeline bill.
double affordability(double volumetric, double lifeline, double fixed, double income_p20);
double nearest_rank(std::vector<double> values, double p);  // p in (0, 1]

struct CostRow {
    std::string utility;
    int year = 0;
    double annualized_capex = 0.0;
    double opex = 0.0;  // includes fines
    double interest = 0.0;
    double embedded_ghg = 0.0;
    double operational_ghg = 0.0;

    double tac() const { return annualized_capex + opex + interest; }
    double ghg() const { return embedded_ghg + operational_ghg; }
};

struct AffordRow {
    std::string utility;
    std::string municipality;
    std::string household_class;
    int year = 0;
    double volumetric = 0.0;      // EUR/m3
    double fixed = 0.0;           // EUR/month
    double lifeline = 0.0;        // m3/month
    double monthly_income = 0.0;  // EUR/month
    double weight = 0.0;          // households in the row
};

struct Tables {
    std::vector<CostRow> costs;
    std::vector<Cell> cells;
    std::vector<AffordRow> afford;
};

// Selection over utility, municipality, household class and a year window.
// Text form: "national" or comma-separated key=value with keys utility,
// municipality, class and years (Y or Y1-Y2).
struct Slice {
    std::optional<std::string> utility;
    std::optional<std::string> municipality;
    std::optional<std::string> household_class;
    std::optional<int> first_year;
    std::optional<int> last_year;

    static Slice parse(std::string_view text);  // throws ConfigError
    std::string str() const;
    bool year_in(int y) const;
};

struct Report {
    std::string slice;
    double tac = 0.0;
    double ghg = 0.0;
    std::optional<double> reliability;
    std::optional<double> affordability;  // percent, mean over the slice's years
};

// Costs and GHG belong to utilities: only the utility and year filters apply
// to them. Affordability per year uses the household-weighted lifeline bill
// over the slice's rows and the nearest-rank 20th percentile of their incomes.
Report evaluate(const Tables& tables, const Slice& slice);

}  // namespace bwf::kpi
