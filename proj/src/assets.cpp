#include "bwf/assets.hpp"

#include "bwf/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bwf::assets {

SourceType parse_source_type(std::string_view text)
{
    if (text == "groundwater")
        return SourceType::Groundwater;
    if (text == "surface")
        return SourceType::Surface;
    if (text == "desalination")
        return SourceType::Desalination;
    throw InputError("unknown source type '" + std::string(text) + "'");
}

std::string_view source_type_name(SourceType t)
{
    switch (t) {
    case SourceType::Groundwater:
        return "groundwater";
    case SourceType::Surface:
        return "surface";
    case SourceType::Desalination:
        return "desalination";
    }
    return "groundwater";
}

SourceSize source_size(double nominal_m3_per_day)
{
    const double mm3_year = nominal_m3_per_day * 365.0 / 1e6;
    if (mm3_year < 30.0)
        return SourceSize::Small;
    return mm3_year <= 60.0 ? SourceSize::Medium : SourceSize::Large;
}

const SourceCostEntry& SourceCostModel::lookup(SourceType type, double nominal_m3_per_day) const
{
    return entries[static_cast<std::size_t>(type)][static_cast<std::size_t>(source_size(nominal_m3_per_day))];
}

void SourceCostModel::validate() const
{
    for (const auto& row : entries) {
        for (const SourceCostEntry& e : row) {
            if (e.fixed_per_year < 0.0 || e.energy_intensity < 0.0 || e.non_energy < 0.0 ||
                e.construction_unit_cost < 0.0 || e.embedded_emissions < 0.0)
                throw InputError("source cost entries must be non-negative");
            if (!(e.over_target_multiplier >= 1.0))
                throw InputError("over-target multiplier must be at least 1");
            if (!(e.lifetime_years > 0.0))
                throw InputError("source lifetime must be positive");
        }
    }
}

CostBreakdown production_cost(double volume_day, double nominal_capacity, double target_factor,
                              const SourceCostEntry& cost, double electricity_price)
{
    if (volume_day < 0.0)
        throw InputError("negative production volume");
    if (volume_day > nominal_capacity * (1.0 + 1e-9))
        throw CapacityError("daily production " + std::to_string(volume_day) + " m3 exceeds nominal capacity " +
                            std::to_string(nominal_capacity) + " m3");
    CostBreakdown out;
    out.fixed = cost.fixed_per_year / kDaysPerYear;
    out.energy = volume_day * cost.energy_intensity * electricity_price;
    out.non_energy = volume_day * cost.non_energy;
    const double planned = nominal_capacity * target_factor;
    out.extra = std::max(0.0, volume_day - planned) * cost.non_energy * (cost.over_target_multiplier - 1.0);
    return out;
}

void FineSchedule::validate() const
{
    if (bands.empty())
        throw InputError("permit fine schedule needs at least one band");
    for (std::size_t i = 0; i < bands.size(); ++i) {
        if (bands[i].rate < 0.0)
            throw InputError("permit fine rates must be non-negative");
        if (i + 1 < bands.size() && !(bands[i].max_ratio > (i ? bands[i - 1].max_ratio : 0.0)))
            throw InputError("permit fine bands must have increasing upper edges");
    }
}

int FineSchedule::severity(double exceedance, double permit) const
{
    const double ratio = exceedance / permit;
    for (std::size_t i = 0; i + 1 < bands.size(); ++i)
        if (ratio <= bands[i].max_ratio)
            return static_cast<int>(i);
    return static_cast<int>(bands.size()) - 1;
}

double permit_fine(double annual_volume, double permit, const FineSchedule& schedule)
{
    if (!(permit > 0.0))
        throw ValidationError("groundwater permit must be positive");
    const double exceedance = std::max(0.0, annual_volume - permit);
    if (exceedance == 0.0)
        return 0.0;
    return exceedance * schedule.bands[static_cast<std::size_t>(schedule.severity(exceedance, permit))].rate;
}

bool groundwater_size_ok(double nominal, double permit)
{
    // permit is annual, nominal daily; the relative slack absorbs the /365 rounding
    return nominal > 0.0 && nominal * kDaysPerYear <= 1.3 * permit * (1.0 + 1e-12);
}

bool capped_size_ok(double nominal, double max_capacity)
{
    return nominal > 0.0 && nominal <= max_capacity;
}

Date schedule_construction(const Date& start, int min_years, int max_years, double u)
{
    if (min_years < 0 || max_years < min_years)
        throw InputError("construction time bounds are invalid");
    const int span = max_years - min_years + 1;
    int k = std::min(static_cast<int>(std::floor(u * span)), span - 1);
    return start.plus_years(min_years + k);
}

void PumpOption::validate() const
{
    if (!curves)
        throw InputError("pump option '" + id + "' has no curves");
    curves->validate();
    if (lifetime_min < 1 || lifetime_max < lifetime_min)
        throw InputError("pump option '" + id + "' lifetime bounds are invalid");
    if (unit_cost < 0.0 || embedded_emissions < 0.0)
        throw InputError("pump option '" + id + "' costs must be non-negative");
}

int realized_lifetime(const PumpOption& option, double u)
{
    const int span = option.lifetime_max - option.lifetime_min + 1;
    return option.lifetime_min + std::min(static_cast<int>(std::floor(u * span)), span - 1);
}

void PipeOption::validate() const
{
    if (!(diameter > 0.0))
        throw InputError("pipe option '" + id + "' needs a positive diameter");
    if (!(friction_new > 0.0))
        throw InputError("pipe option '" + id + "' needs a positive new-pipe friction factor");
    if (decay_min < 0.0 || decay_max < decay_min)
        throw InputError("pipe option '" + id + "' decay bounds are invalid");
    if (cost_per_m < 0.0 || emissions_per_m < 0.0)
        throw InputError("pipe option '" + id + "' cost and emissions must be non-negative");
    if (!(lifetime_years > 0.0))
        throw InputError("pipe option '" + id + "' lifetime must be positive");
}

DecayLaw parse_decay_law(std::string_view text)
{
    if (text == "linear")
        return DecayLaw::Linear;
    if (text == "exponential")
        return DecayLaw::Exponential;
    throw ConfigError("unknown friction decay law '" + std::string(text) + "'");
}

std::string_view decay_law_name(DecayLaw law)
{
    return law == DecayLaw::Linear ? "linear" : "exponential";
}

double realized_decay_rate(const PipeOption& option, double u)
{
    return option.decay_min + u * (option.decay_max - option.decay_min);
}

double decay_pipe_friction(double friction_new, double years_elapsed, double rate, DecayLaw law)
{
    const double t = std::max(years_elapsed, 0.0);
    if (law == DecayLaw::Linear)
        return friction_new + rate * t;
    return friction_new * std::pow(1.0 + rate / friction_new, t);
}

double pv_yield(int day_of_year, int hour, double peak_factor)
{
    // daylight from 6:00 to 20:00 at midsummer, 8:00 to 16:00 at midwinter
    const double season = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * (day_of_year + 10) / kDaysPerYear));
    const double half_day = 4.0 + 3.0 * season;
    const double t = (hour + 0.5) - 12.5;
    if (std::fabs(t) >= half_day)
        return 0.0;
    const double arc = std::cos(0.5 * std::numbers::pi * t / half_day);
    return peak_factor * (0.35 + 0.65 * season) * arc;
}

}  // namespace bwf::assets
