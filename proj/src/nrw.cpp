#include "bwf/nrw.hpp"

#include "bwf/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bwf::nrw {

namespace {
constexpr std::array<std::string_view, kClassCount> kClassNames{"A", "B", "C", "D", "E"};
constexpr std::array<std::string_view, kSizeClassCount> kSizeNames{"small", "medium", "large"};
}  // namespace

std::string_view class_name(NrwClass c)
{
    return kClassNames[static_cast<std::size_t>(c)];
}

NrwClass parse_class(std::string_view text)
{
    for (std::size_t i = 0; i < kClassNames.size(); ++i)
        if (kClassNames[i] == text)
            return static_cast<NrwClass>(i);
    throw InputError("unknown NRW class '" + std::string(text) + "'");
}

SizeClass size_class(double population)
{
    if (population < 20000.0)
        return SizeClass::Small;
    return population <= 100000.0 ? SizeClass::Medium : SizeClass::Large;
}

std::string_view size_class_name(SizeClass c)
{
    return kSizeNames[static_cast<std::size_t>(c)];
}

void NrwClassTable::validate() const
{
    for (std::size_t i = 1; i < age_breakpoints.size(); ++i)
        if (!(age_breakpoints[i] > age_breakpoints[i - 1]))
            throw InputError("NRW age breakpoints must be strictly increasing");
    if (!(age_breakpoints.front() > 0.0) || !(oldest_age > age_breakpoints.back()))
        throw InputError("NRW age bands must start above 0 and end below the oldest age");
    for (int c = 0; c < kClassCount; ++c) {
        if (!(rate_upper[c] > rate_lower[c]) || rate_lower[c] < 0.0)
            throw InputError("NRW rate bounds of class " + std::string(kClassNames[c]) + " are invalid");
        if (c > 0 && rate_lower[c] != rate_upper[c - 1])
            throw InputError("NRW rate bounds must be contiguous");
    }
}

NrwClass NrwClassTable::classify(double age) const
{
    if (!(age >= 0.0))
        throw InputError("network age must be non-negative");
    int c = 0;
    while (c < 4 && age >= age_breakpoints[static_cast<std::size_t>(c)])
        ++c;
    return static_cast<NrwClass>(c);
}

double NrwClassTable::age_midpoint(NrwClass c) const
{
    const int i = static_cast<int>(c);
    double lo = i == 0 ? 0.0 : age_breakpoints[static_cast<std::size_t>(i - 1)];
    double hi = i == 4 ? oldest_age : age_breakpoints[static_cast<std::size_t>(i)];
    return 0.5 * (lo + hi);
}

double km_pipes(double population)
{
    return 57.7 * (population / 10000.0);
}

double sample_rate(const NrwClassTable& table, NrwClass c, double u)
{
    const double a = table.rate_lower[static_cast<std::size_t>(c)];
    const double b = table.rate_upper[static_cast<std::size_t>(c)];
    const double mode = a + (b - a) / 3.0;
    const double split = (mode - a) / (b - a);
    double x = u < split ? a + std::sqrt(u * (b - a) * (mode - a)) : b - std::sqrt((1.0 - u) * (b - a) * (b - mode));
    return std::clamp(x, a, b);
}

double sample_nrw_demand(const NrwClassTable& table, NrwClass c, double km, double u)
{
    if (km <= 0.0)
        return 0.0;
    return sample_rate(table, c, u) * km;
}

Policy parse_policy(std::string_view text)
{
    if (text == "by_leak_class")
        return Policy::ByLeakClass;
    if (text == "by_population")
        return Policy::ByPopulation;
    throw ConfigError("unknown NRW intervention policy '" + std::string(text) + "'");
}

std::string_view policy_name(Policy p)
{
    return p == Policy::ByLeakClass ? "by_leak_class" : "by_population";
}

InterventionResult apply_intervention(const NrwClassTable& table, const std::vector<NrwMunicipality>& munis,
                                      double budget, Policy policy, const InterventionCosts& costs)
{
    InterventionResult out;
    out.new_age.resize(munis.size());
    out.spend.assign(munis.size(), 0.0);
    for (std::size_t i = 0; i < munis.size(); ++i)
        out.new_age[i] = munis[i].age;
    double remaining = std::max(budget, 0.0);

    if (policy == Policy::ByLeakClass) {
        std::vector<std::size_t> order(munis.size());
        std::iota(order.begin(), order.end(), 0);
        std::vector<NrwClass> cls(munis.size());
        for (std::size_t i = 0; i < munis.size(); ++i)
            cls[i] = table.classify(munis[i].age);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            if (cls[x] != cls[y])
                return cls[x] > cls[y];
            if (munis[x].km != munis[y].km)
                return munis[x].km > munis[y].km;
            return munis[x].id < munis[y].id;
        });
        for (std::size_t i : order) {
            if (cls[i] == NrwClass::A || munis[i].km <= 0.0)
                continue;
            const auto c = static_cast<std::size_t>(cls[i]);
            const auto s = static_cast<std::size_t>(size_class(munis[i].population));
            const double cost = costs.unit_cost[c][s] * munis[i].km;
            if (cost > remaining)
                continue;
            remaining -= cost;
            out.spend[i] = cost;
            out.new_age[i] = std::min(munis[i].age, table.age_midpoint(static_cast<NrwClass>(c - 1)));
        }
    } else {
        double total_pop = 0.0;
        for (const auto& m : munis)
            if (m.km > 0.0)
                total_pop += m.population;
        if (total_pop > 0.0) {
            const double funds_total = std::max(budget, 0.0);
            std::size_t last = munis.size();
            for (std::size_t i = 0; i < munis.size(); ++i)
                if (munis[i].km > 0.0)
                    last = i;
            double allotted = 0.0;
            for (std::size_t i = 0; i < munis.size(); ++i) {
                const auto& m = munis[i];
                if (m.km <= 0.0)
                    continue;
                // the last share takes the remainder so the total never exceeds the budget
                double funds = funds_total * (m.population / total_pop);
                if (i == last) {
                    funds = std::max(0.0, funds_total - allotted);
                    while (funds > 0.0 && allotted + funds > funds_total)
                        funds = std::nextafter(funds, 0.0);
                }
                allotted += funds;
                const auto c = static_cast<std::size_t>(table.classify(m.age));
                const auto s = static_cast<std::size_t>(size_class(m.population));
                out.new_age[i] = std::max(0.0, m.age - funds * costs.effectiveness[c][s] / m.km);
                out.spend[i] = funds;
            }
            remaining = funds_total - allotted;
        }
    }
    out.unspent = remaining;
    out.spent = std::max(budget, 0.0) - remaining;
    return out;
}

}  // namespace bwf::nrw
