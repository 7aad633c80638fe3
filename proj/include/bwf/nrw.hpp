#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace bwf::nrw {

enum class NrwClass { A = 0, B, C, D, E };
inline constexpr int kClassCount = 5;

std::string_view class_name(NrwClass c);
NrwClass parse_class(std::string_view text);  // throws InputError

// Municipality size class, shared with the demand profile buckets.
enum class SizeClass { Small = 0, Medium, Large };
inline constexpr int kSizeClassCount = 3;

SizeClass size_class(double population);  // <20k, 20k-100k, >100k
std::string_view size_class_name(SizeClass c);

// Age bands and per-km NRW rate bounds (m3/day per km of pipe).
struct NrwClassTable {
    std::array<double, 4> age_breakpoints{25.0, 43.0, 54.0, 60.0};
    std::array<double, 5> rate_lower{0.0, 12.0, 20.0, 35.0, 55.0};
    std::array<double, 5> rate_upper{12.0, 20.0, 35.0, 55.0, 80.0};  // E capped for sampling
    double oldest_age = 80.0;  // closes the E age band for its midpoint

    void validate() const;  // throws InputError
    NrwClass classify(double age) const;
    double age_midpoint(NrwClass c) const;
};

double km_pipes(double population);

// Per-km rate from a triangular law on the class bounds with its mode at the
// lower third, via inverse CDF of a uniform u in [0, 1).
double sample_rate(const NrwClassTable& table, NrwClass c, double u);
double sample_nrw_demand(const NrwClassTable& table, NrwClass c, double km, double u);  // m3/day

enum class Policy { ByLeakClass, ByPopulation };
Policy parse_policy(std::string_view text);  // throws ConfigError
std::string_view policy_name(Policy p);

// Cost (EUR per km) and effectiveness (years of age removed per EUR per km)
// by NRW class and municipality size class.
struct InterventionCosts {
    std::array<std::array<double, kSizeClassCount>, kClassCount> unit_cost{};
    std::array<std::array<double, kSizeClassCount>, kClassCount> effectiveness{};
};

struct NrwMunicipality {
    std::string id;
    double population = 0.0;
    double km = 0.0;
    double age = 0.0;
};

struct InterventionResult {
    std::vector<double> new_age;  // parallel to the input
    std::vector<double> spend;
    double spent = 0.0;
    double unspent = 0.0;
};

InterventionResult apply_intervention(const NrwClassTable& table, const std::vector<NrwMunicipality>& munis,
                                      double budget, Policy policy, const InterventionCosts& costs);

}  // namespace bwf::nrw
