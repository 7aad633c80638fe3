#include "doctest.h"

#include "bwf/assets.hpp"
#include "bwf/error.hpp"
#include "bwf/random.hpp"

#include <set>

using namespace bwf;
using namespace bwf::assets;

namespace {

SourceCostEntry entry(double non_energy, double multiplier)
{
    SourceCostEntry e;
    e.fixed_per_year = 3650.0;
    e.energy_intensity = 0.5;
    e.non_energy = non_energy;
    e.over_target_multiplier = multiplier;
    return e;
}

PumpOption option(int lo, int hi)
{
    auto ch = std::make_shared<hydraulics::PumpCharacteristic>();
    ch->option_id = "p";
    ch->head = TabulatedCurve({{0, 60}, {100, 50}, {200, 30}});
    ch->efficiency = TabulatedCurve({{0, 0.3}, {100, 0.75}, {200, 0.6}});
    return PumpOption{"p", ch, lo, hi, 500.0, 0.0};
}

}  // namespace

TEST_CASE("production cost breakdown")
{
    auto c = production_cost(900, 1000, 0.8, entry(0.10, 1.5), 0.2);
    CHECK(c.extra == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(c.energy == doctest::Approx(900 * 0.5 * 0.2));
    CHECK(c.non_energy == doctest::Approx(90.0));
    CHECK(c.fixed == 10.0);
    CHECK(c.total() == c.fixed + c.energy + c.non_energy + c.extra);
    CHECK(production_cost(800, 1000, 0.8, entry(0.10, 1.5), 0.2).extra == 0.0);
    auto zero = production_cost(0, 1000, 0.8, entry(0.10, 1.5), 0.2);
    CHECK(zero.total() == zero.fixed);
    CHECK_THROWS_AS(production_cost(1001, 1000, 0.8, entry(0.10, 1.5), 0.2), CapacityError);
}

TEST_CASE("permit fines by band")
{
    FineSchedule s{{{0.1, 0.5}, {0.3, 1.0}, {0.0, 2.0}}};
    s.validate();
    CHECK(permit_fine(900, 1000, s) == 0.0);
    CHECK(permit_fine(1000, 1000, s) == 0.0);
    CHECK(permit_fine(1050, 1000, s) == 50 * 0.5);
    CHECK(permit_fine(1200, 1000, s) == 200 * 1.0);
    CHECK(permit_fine(2000, 1000, s) == 1000 * 2.0);
    CHECK_THROWS_AS(permit_fine(10, 0, s), ValidationError);
}

TEST_CASE("groundwater 30 percent rule")
{
    const double permit = 365000.0;  // 1000 m3/day equivalent
    CHECK(groundwater_size_ok(1300.0, permit));
    CHECK(groundwater_size_ok(1.3 * permit / 365.0, permit));
    CHECK_FALSE(groundwater_size_ok(1310.0, permit));
    CHECK(capped_size_ok(100, 100));
    CHECK_FALSE(capped_size_ok(101, 100));
}

TEST_CASE("construction time draws cover the bounds")
{
    RandomStream rng(9);
    std::set<int> years;
    Date start{2030, 4, 1};
    for (int i = 0; i < 10000; ++i) {
        Date d = schedule_construction(start, 5, 10, rng.uniform());
        CHECK(d.month == 4);
        years.insert(d.year);
    }
    CHECK(years == std::set<int>{2035, 2036, 2037, 2038, 2039, 2040});
    CHECK(schedule_construction(start, 3, 3, 0.999).year == 2033);
}

TEST_CASE("pump fleet aging")
{
    auto opt = option(15, 15);
    std::vector<PumpUnit> units{{0, 15, 0}, {0, 20, 0}};
    CHECK(age_pump_fleet(units, opt, 14, 500, [](auto, auto) { return 0.5; }).empty());
    auto rep = age_pump_fleet(units, opt, 15, 500, [](auto, auto) { return 0.5; });
    REQUIRE(rep.size() == 1);
    CHECK(rep[0].unit == 0);
    CHECK(rep[0].year == 15);
    CHECK(units[0].install_year == 15);
    CHECK(units[0].lifetime == 15);
    std::vector<PumpUnit> both{{0, 10, 0}, {2, 8, 0}};
    CHECK(age_pump_fleet(both, option(5, 9), 10, 300, [](auto, auto) { return 0.0; }).size() == 2);
    CHECK(realized_lifetime(option(10, 20), 0.9999999) == 20);
    CHECK(realized_lifetime(option(10, 20), 0.0) == 10);
}

TEST_CASE("pipe friction decay")
{
    CHECK(decay_pipe_friction(0.015, 0, 0.0005) == 0.015);
    CHECK(decay_pipe_friction(0.015, 10, 0.0005) == doctest::Approx(0.020).epsilon(1e-12));
    CHECK(decay_pipe_friction(0.015, 50, 0.0) == 0.015);
    double prev = 0.0;
    for (int t = 0; t < 60; ++t) {
        double f = decay_pipe_friction(0.015, t, 0.0005, DecayLaw::Exponential);
        CHECK(f >= prev);
        prev = f;
    }
    CHECK(decay_pipe_friction(0.015, 1, 0.0005, DecayLaw::Exponential) == doctest::Approx(0.0155));
}

TEST_CASE("source size classes and pv")
{
    CHECK(source_size(30e6 / 365 - 1) == SourceSize::Small);
    CHECK(source_size(30e6 / 365) == SourceSize::Medium);
    CHECK(source_size(61e6 / 365) == SourceSize::Large);
    PvInstallation pv{{2030, 1, 1}, 100};
    CHECK(pv.active_on({2054, 12, 31}));
    CHECK_FALSE(pv.active_on({2055, 1, 1}));
    CHECK(pv_yield(172, 2) == 0.0);
    CHECK(pv_yield(172, 12) > pv_yield(355, 12));
}
