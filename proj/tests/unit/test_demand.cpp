#include "doctest.h"

#include "bwf/demand.hpp"
#include "bwf/error.hpp"
#include "bwf/simd/kernels.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

using namespace bwf;
using namespace bwf::demand;

namespace {

Profile flat(const std::string& id)
{
    return Profile{id, std::vector<double>(kHoursPerYear, 1.0)};
}

ProfileLibrary flat_library(std::size_t per_bucket)
{
    ProfileLibrary lib;
    for (auto& bucket : lib.residential)
        for (std::size_t k = 0; k < per_bucket; ++k)
            bucket.push_back(flat("r" + std::to_string(k)));
    lib.nonresidential.push_back(flat("n0"));
    return lib;
}

// Plain double loop, independent of the SIMD kernels.
double oracle_sum(const std::vector<double>& x)
{
    long double s = 0.0L;
    for (double v : x)
        s += v;
    return static_cast<double>(s);
}

double month_mean(const DemandSeries& s, int month)
{
    const int d0 = month_start_day(month);
    const int d1 = d0 + kDaysInMonth[static_cast<std::size_t>(month - 1)];
    double sum = 0.0;
    for (int h = d0 * 24; h < d1 * 24; ++h)
        sum += s.samples[static_cast<std::size_t>(h)];
    return sum / ((d1 - d0) * 24);
}

}  // namespace

TEST_CASE("phase I calibration and perturbation")
{
    std::vector<MunicipalityDemandInput> m{{"a", 60.0 / 365.0, 0.0}, {"b", 40.0 / 365.0, 0.0}};
    auto plan = phase1_annual_volumes(m, 1.0, 0.0, 200.0, 0.0, 1, 2030);
    CHECK(plan.volumes[0].total() == doctest::Approx(120.0).epsilon(1e-12));
    CHECK(plan.volumes[1].total() == doctest::Approx(80.0).epsilon(1e-12));
    CHECK(plan.calibration == doctest::Approx(2.0).epsilon(1e-12));

    auto noisy = phase1_annual_volumes(m, 1.0, 0.0, 200.0, 0.05, 7, 2030);
    CHECK(std::fabs(noisy.national_total() - 200.0) <= 0.2);
    CHECK(noisy.volumes[0].total() != plan.volumes[0].total());
    auto again = phase1_annual_volumes(m, 1.0, 0.0, 200.0, 0.05, 7, 2030);
    CHECK(again.volumes[0].total() == noisy.volumes[0].total());

    auto uncal = phase1_annual_volumes(m, 1.0, 0.0, std::nullopt, 0.0, 7, 2030);
    CHECK(uncal.calibration == 1.0);
    CHECK(uncal.volumes[0].household == 60.0);
    CHECK_THROWS_AS(phase1_annual_volumes({{"z", 0, 0}}, 1, 1, 100.0, 0.0, 1, 2030), DegenerateInputError);
}

TEST_CASE("adding a municipality leaves other perturbation factors alone")
{
    std::vector<MunicipalityDemandInput> two{{"a", 100, 0}, {"b", 100, 0}};
    std::vector<MunicipalityDemandInput> three{{"a", 100, 0}, {"b", 100, 0}, {"c", 100, 0}};
    auto p2 = phase1_annual_volumes(two, 1.0, 0.0, std::nullopt, 0.1, 5, 2031);
    auto p3 = phase1_annual_volumes(three, 1.0, 0.0, std::nullopt, 0.1, 5, 2031);
    // ratios between a and b are fixed by their own sub-seeds
    CHECK(p2.volumes[0].total() / p2.volumes[1].total() ==
          doctest::Approx(p3.volumes[0].total() / p3.volumes[1].total()).epsilon(1e-12));
}

TEST_CASE("synthetic library is valid and survives a text round trip")
{
    auto lib = ProfileLibrary::synthetic();
    lib.validate();
    std::stringstream ss;
    write_library(ss, lib);
    auto back = read_library(ss);
    REQUIRE(back.nonresidential.size() == lib.nonresidential.size());
    for (std::size_t c = 0; c < lib.residential.size(); ++c)
        for (std::size_t k = 0; k < lib.residential[c].size(); ++k)
            CHECK(back.residential[c][k].samples == lib.residential[c][k].samples);
    std::istringstream bad("residential/small/x\tnonresidential/n\n1\t1\n");
    CHECK_THROWS_AS(read_library(bad), LibraryError);
}

TEST_CASE("phase II selection")
{
    auto lib2 = flat_library(2);
    auto c = phase2_assign_profiles("m", 5000, lib2, 3, 2030);
    CHECK(c.residential_a != c.residential_b);
    CHECK(c.residential_a + c.residential_b == 1);
    auto d = phase2_assign_profiles("m", 5000, lib2, 3, 2030);
    CHECK(c.residential_a == d.residential_a);

    auto lib1 = flat_library(1);
    CHECK_THROWS_AS(phase2_assign_profiles("m", 5000, lib1, 3, 2030), LibraryError);

    auto lib5 = flat_library(5);
    std::vector<int> count(5, 0);
    for (int i = 0; i < 1000; ++i)
        ++count[phase2_assign_profiles("m" + std::to_string(i), 5000, lib5, 99, 2030).residential_a];
    // each count ~ Binomial(1000, 0.2): sd = sqrt(160)
    for (int k : count)
        CHECK(std::fabs(k - 200.0) <= 3.0 * std::sqrt(160.0));
    double chi2 = 0.0;
    for (int k : count)
        chi2 += (k - 200.0) * (k - 200.0) / 200.0;
    CHECK(chi2 < 18.47);  // 0.999 quantile, 4 dof
}

TEST_CASE("phase III flat case is constant")
{
    auto lib = flat_library(2);
    SeasonalParams p;
    p.cos_coeff = {0.0, 0.0};
    p.noise_sigma = 0.0;
    AnnualVolumes v{"m", 8760.0 * 3.0, 8760.0};
    auto s = phase3_hourly_series(v, lib, {0, 1, 0, nrw::SizeClass::Small}, 0.5, 30.0, p, 1, 2030);
    for (double x : s.samples)
        CHECK(x == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("phase III volumes, non-negativity and seasonality")
{
    auto lib = ProfileLibrary::synthetic();
    SeasonalParams p;
    AnnualVolumes v{"m", 2.5e6, 0.7e6};
    auto c = phase2_assign_profiles("m", 50000, lib, 4, 2030);
    auto s = phase3_hourly_series(v, lib, c, 0.7, 32.0, p, 4, 2030);
    CHECK(std::fabs(oracle_sum(s.samples) - v.total()) / v.total() <= 1e-3);
    for (double x : s.samples)
        CHECK(x >= 0.0);
    CHECK(month_mean(s, 7) > month_mean(s, 1));

    // negative modulation clamps then rescales
    SeasonalParams wild = p;
    wild.cos_coeff = {1.6, 0.0};
    auto w = phase3_hourly_series(v, lib, c, 0.7, 30.0, wild, 4, 2030);
    CHECK(std::fabs(oracle_sum(w.samples) - v.total()) / v.total() <= 1e-3);
    for (double x : w.samples)
        CHECK(x >= 0.0);
}

TEST_CASE("phase III is deterministic, linear in volume and backend independent")
{
    auto lib = ProfileLibrary::synthetic();
    SeasonalParams p;
    AnnualVolumes v{"m", 1.0e6, 0.3e6};
    AnnualVolumes v2{"m", 2.0e6, 0.6e6};
    auto c = phase2_assign_profiles("m", 15000, lib, 8, 2040);
    auto a = phase3_hourly_series(v, lib, c, 0.4, 31.0, p, 8, 2040);
    auto b = phase3_hourly_series(v, lib, c, 0.4, 31.0, p, 8, 2040);
    CHECK(a.samples == b.samples);
    auto d = phase3_hourly_series(v2, lib, c, 0.4, 31.0, p, 8, 2040);
    bool doubled = true;
    for (std::size_t h = 0; h < a.samples.size(); ++h)
        doubled = doubled && d.samples[h] == 2.0 * a.samples[h];
    CHECK(doubled);

    const auto before = simd::active_backend();
    std::vector<std::vector<double>> runs;
    for (auto backend : {simd::Backend::Scalar, simd::Backend::Avx2}) {
        if (!simd::backend_available(backend))
            continue;
        simd::force_backend(backend);
        runs.push_back(phase3_hourly_series(v, lib, c, 0.4, 31.0, p, 8, 2040).samples);
    }
    simd::force_backend(before);
    for (const auto& r : runs)
        CHECK(r == runs.front());
}

TEST_CASE("hundred municipality-years meet the volume contract")
{
    auto lib = ProfileLibrary::synthetic();
    SeasonalParams p;
    std::vector<MunicipalityDemandInput> m;
    for (int i = 0; i < 20; ++i)
        m.push_back({"m" + std::to_string(i), 1000.0 + 900.0 * i, 50.0 + 20.0 * i});
    int checked = 0;
    for (int year = 2030; year < 2035; ++year) {
        auto plan = phase1_annual_volumes(m, 0.35, 2.0, std::nullopt, 0.05, 17, year);
        for (std::size_t i = 0; i < m.size(); ++i) {
            auto c = phase2_assign_profiles(m[i].id, m[i].houses * 2.2, lib, 17, year);
            auto s = phase3_hourly_series(plan.volumes[i], lib, c, default_mix_weight(m[i].houses, m[i].businesses),
                                          29.0 + (year - 2030), p, 17, year);
            CHECK(std::fabs(oracle_sum(s.samples) - s.annual_volume()) / s.annual_volume() <= 1e-3);
            ++checked;
        }
    }
    CHECK(checked == 100);
}
