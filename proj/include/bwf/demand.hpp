#pragma once

#include "bwf/date.hpp"
#include "bwf/nrw.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace bwf::demand {

using nrw::SizeClass;

struct MunicipalityDemandInput {
    std::string id;
    double houses = 0.0;
    double businesses = 0.0;
};

struct AnnualVolumes {
    std::string id;
    double household = 0.0;  // m3/year
    double business = 0.0;   // m3/year

    double total() const { return household + business; }
};

struct AnnualVolumePlan {
    int year = 0;
    double calibration = 1.0;
    std::vector<AnnualVolumes> volumes;  // parallel to the input

    double national_total() const;
};

// Raw volumes from per-unit daily demands, one national calibration factor to
// the target (none when absent), then a mean-one lognormal factor per
// municipality renormalised to keep the national total. sigma = 0 skips the
// perturbation entirely.
AnnualVolumePlan phase1_annual_volumes(const std::vector<MunicipalityDemandInput>& munis, double household_daily,
                                       double business_daily, std::optional<double> national_target, double sigma,
                                       std::uint64_t seed, int year);

struct Profile {
    std::string id;
    std::vector<double> samples;  // kHoursPerYear values, mean 1
};

struct ProfileLibrary {
    std::array<std::vector<Profile>, nrw::kSizeClassCount> residential;
    std::vector<Profile> nonresidential;

    void validate() const;  // throws LibraryError

    // Diurnal double-peak residential shapes (four per size class) and
    // working-hours non-residential shapes (three), deterministic.
    static ProfileLibrary synthetic();
};

// Columnar text: one header line naming each column "residential/<class>/<id>"
// or "nonresidential/<id>", then 8760 rows of tab-separated values.
void write_library(std::ostream& out, const ProfileLibrary& library);
ProfileLibrary read_library(std::istream& in);  // throws LibraryError

struct ProfileChoice {
    std::size_t residential_a = 0;
    std::size_t residential_b = 0;
    std::size_t nonresidential = 0;
    SizeClass size = SizeClass::Small;
};

ProfileChoice phase2_assign_profiles(const std::string& muni_id, double population, const ProfileLibrary& library,
                                     std::uint64_t seed, int year);

struct SeasonalParams {
    std::vector<double> cos_coeff{0.15, 0.03};  // order = size
    std::vector<double> sin_coeff{0.0, 0.0};
    int peak_day = 196;                  // 0-based day of year
    double climate_coeff = 0.03;         // per degree C on the first harmonic
    double reference_temperature = 30.0;  // C
    double noise_sigma = 0.05;           // hourly lognormal perturbation
    double noise_phi = 0.8;              // AR(1) coefficient

    void validate() const;  // throws ConfigError
};

struct DemandSeries {
    std::string id;
    int year = 0;
    std::vector<double> samples;  // m3/h, kHoursPerYear values
    double residential_volume = 0.0;
    double nonresidential_volume = 0.0;

    double annual_volume() const { return residential_volume + nonresidential_volume; }
};

// Daily seasonal factor (1 + Fourier terms), before clamping.
double seasonal_factor(const SeasonalParams& params, int day_of_year, double max_temperature);

// w weights the first residential profile. Each component is scaled to its
// own annual volume after clamping negatives.
DemandSeries phase3_hourly_series(const AnnualVolumes& volumes, const ProfileLibrary& library,
                                  const ProfileChoice& choice, double w, double max_temperature,
                                  const SeasonalParams& params, std::uint64_t seed, int year);

// Residential mixing weight from the household share of connections.
double default_mix_weight(double houses, double businesses);

}  // namespace bwf::demand
