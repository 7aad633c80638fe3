#include "bwf/demand.hpp"

#include "bwf/error.hpp"
#include "bwf/random.hpp"
#include "bwf/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace bwf::demand {

namespace {

constexpr auto kN = static_cast<std::size_t>(kHoursPerYear);

void normalise_mean_one(std::vector<double>& x)
{
    const double s = simd::sum(x);
    simd::scale(x, static_cast<double>(kN) / s);
}

double bump(double hour, double centre, double width)
{
    double d = hour - centre;
    return std::exp(-0.5 * d * d / (width * width));
}

Profile residential_shape(int size, int k)
{
    Profile p;
    p.id = "r" + std::to_string(k);
    p.samples.resize(kN);
    const double morning = 7.0 + 0.5 * k;
    const double evening = 19.0 + 0.25 * (k % 3);
    const double peaky = 0.9 + 0.3 * (2 - size);  // small towns swing harder
    for (std::size_t h = 0; h < kN; ++h) {
        const int day = static_cast<int>(h / 24);
        const double hour = static_cast<double>(h % 24);
        const bool weekend = day % 7 >= 5;
        const double am = weekend ? morning + 1.5 : morning;
        p.samples[h] = 0.35 + peaky * (1.0 * bump(hour, am, 1.3) + 0.8 * bump(hour, evening, 1.8)) +
                       0.15 * bump(hour, 13.0, 2.5);
    }
    normalise_mean_one(p.samples);
    return p;
}

Profile nonresidential_shape(int k)
{
    Profile p;
    p.id = "n" + std::to_string(k);
    p.samples.resize(kN);
    const double open = 7.0 + k;
    const double close = 17.0 + k;
    for (std::size_t h = 0; h < kN; ++h) {
        const int day = static_cast<int>(h / 24);
        const double hour = static_cast<double>(h % 24);
        const bool weekend = day % 7 >= 5;
        const bool working = hour >= open && hour < close;
        double v = 0.25;
        if (working)
            v += weekend ? 0.3 : 1.6;
        p.samples[h] = v;
    }
    normalise_mean_one(p.samples);
    return p;
}

void check_profile(const Profile& p, const std::string& where)
{
    if (p.samples.size() != kN)
        throw LibraryError("profile " + where + " has " + std::to_string(p.samples.size()) + " samples, expected 8760");
    for (double v : p.samples)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw LibraryError("profile " + where + " has a negative or non-finite sample");
    const double mean = simd::sum(p.samples) / static_cast<double>(kN);
    if (std::fabs(mean - 1.0) > 1e-9)
        throw LibraryError("profile " + where + " does not have mean 1");
}

// Scales x so it sums to volume, clamping negatives first.
void fit_volume(std::vector<double>& x, double volume, const std::string& id)
{
    if (volume == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return;
    }
    for (int pass = 0; pass < 10; ++pass) {
        simd::clamp_nonnegative(x);
        const double s = simd::sum(x);
        if (!(s > 0.0))
            break;
        simd::scale(x, volume / s);
        if (std::fabs(simd::sum(x) - volume) <= 1e-9 * volume)
            return;
    }
    throw GenerationError("demand series for '" + id + "' cannot be rescaled to its annual volume");
}

}  // namespace

double AnnualVolumePlan::national_total() const
{
    double s = 0.0;
    for (const auto& v : volumes)
        s += v.total();
    return s;
}

AnnualVolumePlan phase1_annual_volumes(const std::vector<MunicipalityDemandInput>& munis, double household_daily,
                                       double business_daily, std::optional<double> national_target, double sigma,
                                       std::uint64_t seed, int year)
{
    if (household_daily < 0.0 || business_daily < 0.0 || sigma < 0.0)
        throw InputError("per-unit demands and sigma must be non-negative");
    AnnualVolumePlan plan;
    plan.year = year;
    double raw_total = 0.0;
    for (const auto& m : munis) {
        if (m.houses < 0.0 || m.businesses < 0.0)
            throw InputError("municipality '" + m.id + "' has negative houses or businesses");
        AnnualVolumes v{m.id, m.houses * household_daily * kDaysPerYear, m.businesses * business_daily * kDaysPerYear};
        raw_total += v.total();
        plan.volumes.push_back(v);
    }
    if (!(raw_total > 0.0))
        throw DegenerateInputError("national raw demand volume is zero");
    if (national_target) {
        if (!(*national_target > 0.0))
            throw InputError("national demand target must be positive");
        plan.calibration = *national_target / raw_total;
        for (auto& v : plan.volumes) {
            v.household *= plan.calibration;
            v.business *= plan.calibration;
        }
    }
    if (sigma == 0.0)
        return plan;

    const double target = national_target ? *national_target : raw_total;
    std::vector<double> factor(plan.volumes.size());
    double perturbed = 0.0;
    for (std::size_t i = 0; i < plan.volumes.size(); ++i) {
        RandomStream rng(derive_seed(seed, "demand.phase1", plan.volumes[i].id, year));
        factor[i] = std::exp(sigma * rng.normal() - 0.5 * sigma * sigma);
        perturbed += factor[i] * plan.volumes[i].total();
    }
    const double k = target / perturbed;
    for (std::size_t i = 0; i < plan.volumes.size(); ++i) {
        plan.volumes[i].household *= factor[i] * k;
        plan.volumes[i].business *= factor[i] * k;
    }
    return plan;
}

void ProfileLibrary::validate() const
{
    for (int c = 0; c < nrw::kSizeClassCount; ++c) {
        const auto& bucket = residential[static_cast<std::size_t>(c)];
        const std::string name(nrw::size_class_name(static_cast<SizeClass>(c)));
        if (bucket.size() < 2)
            throw LibraryError("residential bucket '" + name + "' needs at least 2 profiles");
        for (const auto& p : bucket)
            check_profile(p, "residential/" + name + "/" + p.id);
    }
    if (nonresidential.empty())
        throw LibraryError("library has no non-residential profiles");
    for (const auto& p : nonresidential)
        check_profile(p, "nonresidential/" + p.id);
}

ProfileLibrary ProfileLibrary::synthetic()
{
    ProfileLibrary lib;
    for (int c = 0; c < nrw::kSizeClassCount; ++c)
        for (int k = 0; k < 4; ++k)
            lib.residential[static_cast<std::size_t>(c)].push_back(residential_shape(c, k));
    for (int k = 0; k < 3; ++k)
        lib.nonresidential.push_back(nonresidential_shape(k));
    return lib;
}

void write_library(std::ostream& out, const ProfileLibrary& library)
{
    std::vector<const Profile*> cols;
    std::vector<std::string> names;
    for (int c = 0; c < nrw::kSizeClassCount; ++c) {
        for (const auto& p : library.residential[static_cast<std::size_t>(c)]) {
            cols.push_back(&p);
            names.push_back("residential/" + std::string(nrw::size_class_name(static_cast<SizeClass>(c))) + "/" + p.id);
        }
    }
    for (const auto& p : library.nonresidential) {
        cols.push_back(&p);
        names.push_back("nonresidential/" + p.id);
    }
    for (std::size_t j = 0; j < names.size(); ++j)
        out << (j ? "\t" : "") << names[j];
    out << '\n';
    char buf[32];
    for (std::size_t h = 0; h < kN; ++h) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", cols[j]->samples[h]);
            out << (j ? "\t" : "") << buf;
        }
        out << '\n';
    }
}

ProfileLibrary read_library(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        throw LibraryError("profile library is empty");
    struct Col {
        bool residential;
        std::size_t size;
        std::string id;
    };
    std::vector<Col> cols;
    std::istringstream header(line);
    std::string name;
    while (std::getline(header, name, '\t')) {
        std::vector<std::string> parts;
        std::istringstream ps(name);
        for (std::string part; std::getline(ps, part, '/');)
            parts.push_back(part);
        if (parts.size() == 3 && parts[0] == "residential") {
            std::size_t size = nrw::kSizeClassCount;
            for (int c = 0; c < nrw::kSizeClassCount; ++c)
                if (nrw::size_class_name(static_cast<SizeClass>(c)) == parts[1])
                    size = static_cast<std::size_t>(c);
            if (size == nrw::kSizeClassCount)
                throw LibraryError("unknown size class in column '" + name + "'");
            cols.push_back({true, size, parts[2]});
        } else if (parts.size() == 2 && parts[0] == "nonresidential") {
            cols.push_back({false, 0, parts[1]});
        } else {
            throw LibraryError("bad profile column name '" + name + "'");
        }
    }
    std::vector<std::vector<double>> data(cols.size());
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        ++row;
        std::istringstream rs(line);
        std::string cell;
        std::size_t j = 0;
        while (std::getline(rs, cell, '\t')) {
            if (j >= cols.size())
                throw LibraryError("row " + std::to_string(row + 1) + " has too many columns");
            try {
                data[j].push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw LibraryError("row " + std::to_string(row + 1) + ": bad number '" + cell + "'");
            }
            ++j;
        }
        if (j != cols.size())
            throw LibraryError("row " + std::to_string(row + 1) + " has too few columns");
    }
    ProfileLibrary lib;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        Profile p{cols[j].id, std::move(data[j])};
        if (cols[j].residential)
            lib.residential[cols[j].size].push_back(std::move(p));
        else
            lib.nonresidential.push_back(std::move(p));
    }
    lib.validate();
    return lib;
}

ProfileChoice phase2_assign_profiles(const std::string& muni_id, double population, const ProfileLibrary& library,
                                     std::uint64_t seed, int year)
{
    ProfileChoice choice;
    choice.size = nrw::size_class(population);
    const auto& bucket = library.residential[static_cast<std::size_t>(choice.size)];
    if (bucket.size() < 2)
        throw LibraryError("residential bucket '" + std::string(nrw::size_class_name(choice.size)) +
                           "' has fewer than 2 profiles");
    if (library.nonresidential.empty())
        throw LibraryError("library has no non-residential profiles");
    RandomStream rng(derive_seed(seed, "demand.phase2", muni_id, year));
    const int n = static_cast<int>(bucket.size());
    const int a = rng.uniform_int(0, n - 1);
    int b = rng.uniform_int(0, n - 2);
    if (b >= a)
        ++b;
    choice.residential_a = static_cast<std::size_t>(a);
    choice.residential_b = static_cast<std::size_t>(b);
    choice.nonresidential =
        static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(library.nonresidential.size()) - 1));
    return choice;
}

void SeasonalParams::validate() const
{
    if (cos_coeff.size() != sin_coeff.size())
        throw ConfigError("seasonal cosine and sine coefficient lists differ in length");
    if (peak_day < 0 || peak_day >= kDaysPerYear)
        throw ConfigError("seasonal peak day out of range");
    if (noise_sigma < 0.0 || !(std::fabs(noise_phi) < 1.0))
        throw ConfigError("demand noise needs sigma >= 0 and |phi| < 1");
}

double seasonal_factor(const SeasonalParams& params, int day_of_year, double max_temperature)
{
    double f = 1.0;
    const double phase = 2.0 * std::numbers::pi * (day_of_year - params.peak_day) / kDaysPerYear;
    for (std::size_t k = 0; k < params.cos_coeff.size(); ++k) {
        double a = params.cos_coeff[k];
        if (k == 0)
            a *= 1.0 + params.climate_coeff * (max_temperature - params.reference_temperature);
        const double kk = static_cast<double>(k + 1);
        f += a * std::cos(kk * phase) + params.sin_coeff[k] * std::sin(kk * phase);
    }
    return f;
}

DemandSeries phase3_hourly_series(const AnnualVolumes& volumes, const ProfileLibrary& library,
                                  const ProfileChoice& choice, double w, double max_temperature,
                                  const SeasonalParams& params, std::uint64_t seed, int year)
{
    if (!(w >= 0.0 && w <= 1.0))
        throw InputError("residential mixing weight must lie in [0, 1]");
    if (volumes.household < 0.0 || volumes.business < 0.0)
        throw InputError("annual volumes must be non-negative");
    params.validate();
    const auto& bucket = library.residential[static_cast<std::size_t>(choice.size)];
    const auto& pa = bucket.at(choice.residential_a).samples;
    const auto& pb = bucket.at(choice.residential_b).samples;
    const auto& pn = library.nonresidential.at(choice.nonresidential).samples;

    std::vector<double> season(kN);
    for (int d = 0; d < kDaysPerYear; ++d) {
        const double f = seasonal_factor(params, d, max_temperature);
        std::fill_n(season.begin() + d * 24, 24, f);
    }

    RandomStream rng(derive_seed(seed, "demand.phase3", volumes.id, year));
    const double sigma = params.noise_sigma;
    const double innov = std::sqrt(1.0 - params.noise_phi * params.noise_phi);
    auto noise = [&](std::vector<double>& out) {
        double e = sigma * rng.normal();
        for (std::size_t h = 0; h < kN; ++h) {
            if (h)
                e = params.noise_phi * e + innov * sigma * rng.normal();
            out[h] = std::exp(e - 0.5 * sigma * sigma);
        }
    };

    std::vector<double> res(kN), non(pn), eps(kN);
    simd::blend(w, pa, pb, res);
    simd::multiply(res, season);
    noise(eps);
    simd::multiply(res, eps);
    fit_volume(res, volumes.household, volumes.id);

    simd::multiply(non, season);
    noise(eps);
    simd::multiply(non, eps);
    fit_volume(non, volumes.business, volumes.id);

    DemandSeries out;
    out.id = volumes.id;
    out.year = year;
    out.residential_volume = volumes.household;
    out.nonresidential_volume = volumes.business;
    out.samples.resize(kN);
    for (std::size_t h = 0; h < kN; ++h)
        out.samples[h] = res[h] + non[h];
    return out;
}

double default_mix_weight(double houses, double businesses)
{
    const double total = houses + businesses;
    return total > 0.0 ? std::clamp(houses / total, 0.0, 1.0) : 0.5;
}

}  // namespace bwf::demand
