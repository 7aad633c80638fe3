#include "bwf/kpi.hpp"

#include "bwf/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace bwf::kpi {

double annualized_capex(const std::vector<Asset>& assets, int year)
{
    double s = 0.0;
    for (const auto& a : assets) {
        if (!(a.lifetime > 0.0))
            throw InputError("asset '" + a.id + "' has a non-positive lifetime");
        if (a.alive_in(year))
            s += a.capital / a.lifetime;
    }
    return s;
}

double embedded_ghg(const std::vector<Asset>& assets, int year)
{
    double s = 0.0;
    for (const auto& a : assets) {
        if (!(a.lifetime > 0.0))
            throw InputError("asset '" + a.id + "' has a non-positive lifetime");
        if (a.alive_in(year))
            s += a.embedded_emissions / a.lifetime;
    }
    return s;
}

double bond_interest(const std::vector<economy::Bond>& bonds, int year)
{
    double s = 0.0;
    for (const auto& b : bonds)
        if (b.accrues_in(year))
            s += b.interest();
    return s;
}

double tac_year(const std::vector<Asset>& assets, double opex, const std::vector<economy::Bond>& bonds, int year)
{
    return annualized_capex(assets, year) + opex + bond_interest(bonds, year);
}

double operational_ghg(double energy_kwh, double ef_kg_per_kwh)
{
    return energy_kwh * ef_kg_per_kwh / 1000.0;
}

std::optional<double> reliability(const std::vector<Cell>& cells)
{
    double d = 0.0, u = 0.0;
    for (const auto& c : cells) {
        d += c.demand;
        u += c.undelivered();
    }
    if (!(d > 0.0))
        return std::nullopt;
    return 1.0 - u / d;
}

double lifeline_volume(double household_size, double per_person)
{
    return household_size * per_person;
}

double affordability(double volumetric, double lifeline, double fixed, double income_p20)
{
    if (!(income_p20 > 0.0))
        throw InputError("20th-percentile income must be positive");
    return (volumetric * lifeline + fixed) / income_p20 * 100.0;
}

double nearest_rank(std::vector<double> values, double p)
{
    if (values.empty())
        throw InputError("percentile of an empty set");
    if (!(p > 0.0 && p <= 1.0))
        throw InputError("percentile rank must lie in (0, 1]");
    std::sort(values.begin(), values.end());
    auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(values.size())));
    return values[std::max<std::size_t>(rank, 1) - 1];
}

Slice Slice::parse(std::string_view text)
{
    Slice s;
    if (text.empty() || text == "national")
        return s;
    std::string all(text);
    std::istringstream ss(all);
    for (std::string part; std::getline(ss, part, ',');) {
        auto eq = part.find('=');
        if (eq == std::string::npos)
            throw ConfigError("slice term '" + part + "' is not key=value");
        std::string key = part.substr(0, eq), value = part.substr(eq + 1);
        if (value.empty())
            throw ConfigError("slice term '" + part + "' has an empty value");
        if (key == "utility") {
            s.utility = value;
        } else if (key == "municipality") {
            s.municipality = value;
        } else if (key == "class") {
            s.household_class = value;
        } else if (key == "years") {
            try {
                auto dash = value.find('-');
                std::size_t used = 0;
                s.first_year = std::stoi(value.substr(0, dash), &used);
                if (used != (dash == std::string::npos ? value.size() : dash))
                    throw ConfigError("");
                s.last_year = dash == std::string::npos ? *s.first_year : std::stoi(value.substr(dash + 1), &used);
                if (dash != std::string::npos && used != value.size() - dash - 1)
                    throw ConfigError("");
            } catch (const std::exception&) {
                throw ConfigError("slice years '" + value + "' must be Y or Y1-Y2");
            }
            if (*s.last_year < *s.first_year)
                throw ConfigError("slice years '" + value + "' are reversed");
        } else {
            throw ConfigError("unknown slice key '" + key + "'");
        }
    }
    return s;
}

std::string Slice::str() const
{
    std::string out;
    auto add = [&](const std::string& t) { out += (out.empty() ? "" : ",") + t; };
    if (utility)
        add("utility=" + *utility);
    if (municipality)
        add("municipality=" + *municipality);
    if (household_class)
        add("class=" + *household_class);
    if (first_year)
        add("years=" + std::to_string(*first_year) +
            (*last_year != *first_year ? "-" + std::to_string(*last_year) : std::string()));
    return out.empty() ? "national" : out;
}

bool Slice::year_in(int y) const
{
    return (!first_year || y >= *first_year) && (!last_year || y <= *last_year);
}

Report evaluate(const Tables& tables, const Slice& slice)
{
    Report r;
    r.slice = slice.str();
    for (const auto& c : tables.costs) {
        if ((slice.utility && c.utility != *slice.utility) || !slice.year_in(c.year))
            continue;
        r.tac += c.tac();
        r.ghg += c.ghg();
    }
    auto keep = [&](const std::string& u, const std::string& m, const std::string& k, int y) {
        return (!slice.utility || u == *slice.utility) && (!slice.municipality || m == *slice.municipality) &&
               (!slice.household_class || k == *slice.household_class) && slice.year_in(y);
    };
    std::vector<Cell> cells;
    for (const auto& c : tables.cells)
        if (keep(c.utility, c.municipality, c.household_class, c.year))
            cells.push_back(c);
    r.reliability = reliability(cells);

    std::map<int, std::vector<const AffordRow*>> by_year;
    for (const auto& a : tables.afford)
        if (keep(a.utility, a.municipality, a.household_class, a.year))
            by_year[a.year].push_back(&a);
    double af_sum = 0.0;
    int af_years = 0;
    for (const auto& [year, rows] : by_year) {
        double w = 0.0, bill = 0.0;
        std::vector<double> incomes;
        for (const AffordRow* a : rows) {
            w += a->weight;
            bill += a->weight * (a->volumetric * a->lifeline + a->fixed);
            incomes.push_back(a->monthly_income);
        }
        if (!(w > 0.0))
            continue;
        // bill is already the household-weighted mean, so AF is linear in it
        af_sum += affordability(1.0, bill / w, 0.0, nearest_rank(incomes, 0.2));
        ++af_years;
    }
    if (af_years)
        r.affordability = af_sum / af_years;
    return r;
}

}  // namespace bwf::kpi
