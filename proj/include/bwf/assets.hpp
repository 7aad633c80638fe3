#pragma once

#include "bwf/date.hpp"
#include "bwf/hydraulics.hpp"

#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace bwf::assets {

enum class SourceType { Groundwater = 0, Surface, Desalination };
inline constexpr int kSourceTypeCount = 3;
SourceType parse_source_type(std::string_view text);  // throws InputError
std::string_view source_type_name(SourceType t);

// Cost lookup size classes: < 30, 30-60, > 60 Mm3/year of nominal capacity.
enum class SourceSize { Small = 0, Medium, Large };
inline constexpr int kSourceSizeCount = 3;
SourceSize source_size(double nominal_m3_per_day);

struct SourceCostEntry {
    double fixed_per_year = 0.0;       // EUR
    double energy_intensity = 0.0;     // kWh/m3 for treatment
    double non_energy = 0.0;           // EUR/m3
    double over_target_multiplier = 1.0;
    double construction_unit_cost = 0.0;  // EUR per m3/day of nominal capacity
    double lifetime_years = 40.0;
    double embedded_emissions = 0.0;      // tCO2eq per m3/day of capacity built
};

struct SourceCostModel {
    std::array<std::array<SourceCostEntry, kSourceSizeCount>, kSourceTypeCount> entries{};

    const SourceCostEntry& lookup(SourceType type, double nominal_m3_per_day) const;
    void validate() const;
};

struct CostBreakdown {
    double fixed = 0.0;
    double energy = 0.0;
    double non_energy = 0.0;
    double extra = 0.0;

    double total() const { return fixed + energy + non_energy + extra; }
};

// One day of production. The fixed share is the yearly fixed cost / 365.
CostBreakdown production_cost(double volume_day, double nominal_capacity, double target_factor,
                              const SourceCostEntry& cost, double electricity_price);

struct FineBand {
    double max_ratio = 0.0;  // exceedance / permit upper edge of the band; last band open
    double rate = 0.0;       // EUR/m3 of exceedance
};

struct FineSchedule {
    std::vector<FineBand> bands;

    void validate() const;
    int severity(double exceedance, double permit) const;  // 0-based band index
};

double permit_fine(double annual_volume, double permit, const FineSchedule& schedule);

// Size rules for a new or existing source.
bool groundwater_size_ok(double nominal, double permit);
bool capped_size_ok(double nominal, double max_capacity);

// Activation = start + whole years drawn uniformly in [min, max] from u.
Date schedule_construction(const Date& start, int min_years, int max_years, double u);

struct PumpOption {
    std::string id;
    std::shared_ptr<const hydraulics::PumpCharacteristic> curves;
    int lifetime_min = 10;
    int lifetime_max = 20;
    double unit_cost = 0.0;  // EUR
    double embedded_emissions = 0.0;  // tCO2eq per unit

    void validate() const;
};

int realized_lifetime(const PumpOption& option, double u);  // whole years in [min, max]

struct PumpUnit {
    int install_year = 0;
    int lifetime = 0;
    int generation = 0;  // replacements so far, keys the lifetime draw
};

struct Replacement {
    std::size_t unit = 0;
    int year = 0;
    double cost = 0.0;
};

// Units reaching end of life in `year` are replaced in place by identical
// units. `draw(unit, generation)` supplies the uniform for the new lifetime.
template <class Draw>
std::vector<Replacement> age_pump_fleet(std::vector<PumpUnit>& units, const PumpOption& option, int year,
                                        double unit_cost_now, Draw draw)
{
    std::vector<Replacement> out;
    for (std::size_t i = 0; i < units.size(); ++i) {
        PumpUnit& u = units[i];
        if (u.install_year + u.lifetime > year)
            continue;
        out.push_back({i, year, unit_cost_now});
        u.install_year = year;
        ++u.generation;
        u.lifetime = realized_lifetime(option, draw(i, u.generation));
    }
    return out;
}

struct PipeOption {
    std::string id;
    double diameter = 0.0;  // m
    std::string material;
    double friction_new = 0.0;
    double decay_min = 0.0;  // per-year friction increase bounds
    double decay_max = 0.0;
    double cost_per_m = 0.0;       // EUR/m at the instance base year
    double emissions_per_m = 0.0;  // tCO2eq/m
    double lifetime_years = 50.0;

    void validate() const;
};

enum class DecayLaw { Linear, Exponential };
DecayLaw parse_decay_law(std::string_view text);
std::string_view decay_law_name(DecayLaw law);

double realized_decay_rate(const PipeOption& option, double u);
// Linear: f_new + rate * t. Exponential: f_new * (1 + rate / f_new)^t, which
// matches the linear law to first order.
double decay_pipe_friction(double friction_new, double years_elapsed, double rate, DecayLaw law = DecayLaw::Linear);

inline constexpr int kPvLifetimeYears = 25;

struct PvInstallation {
    Date install_date;
    double capacity_kw = 0.0;

    bool active_on(const Date& d) const { return d >= install_date && d < install_date.plus_years(kPvLifetimeYears); }
};

// Per-kWp output for an hour of the year: a clipped cosine day arc scaled by
// a seasonal factor peaking at midsummer.
double pv_yield(int day_of_year, int hour, double peak_factor = 0.75);

}  // namespace bwf::assets
