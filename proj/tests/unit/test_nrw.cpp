#include "doctest.h"

#include "bwf/error.hpp"
#include "bwf/nrw.hpp"
#include "bwf/random.hpp"

#include <algorithm>

using namespace bwf;
using namespace bwf::nrw;

namespace {

InterventionCosts flat_costs(double unit_cost, double effectiveness)
{
    InterventionCosts c;
    for (auto& row : c.unit_cost)
        row.fill(unit_cost);
    for (auto& row : c.effectiveness)
        row.fill(effectiveness);
    return c;
}

}  // namespace

TEST_CASE("classify reproduces the age table, lower-inclusive")
{
    NrwClassTable t;
    const double ages[] = {0, 24.9, 25, 42.9, 43, 53.9, 54, 59.9, 60, 100};
    const char* want[] = {"A", "A", "B", "B", "C", "C", "D", "D", "E", "E"};
    for (int i = 0; i < 10; ++i)
        CHECK(class_name(t.classify(ages[i])) == want[i]);
    CHECK(t.classify(30) == NrwClass::B);
    CHECK_THROWS_AS(t.classify(-1), InputError);
}

TEST_CASE("midpoints classify back to their own class")
{
    NrwClassTable t;
    for (int c = 0; c < kClassCount; ++c)
        CHECK(t.classify(t.age_midpoint(static_cast<NrwClass>(c))) == static_cast<NrwClass>(c));
    CHECK(t.age_midpoint(NrwClass::D) == 57.0);
}

TEST_CASE("km_pipes")
{
    CHECK(km_pipes(10000) == 57.7);
    CHECK(km_pipes(0) == 0.0);
    CHECK(km_pipes(25000) == 144.25);
}

TEST_CASE("sampled demand stays inside the class bounds")
{
    NrwClassTable t;
    RandomStream rng(11);
    double lo = 1e9, hi = -1e9;
    for (int i = 0; i < 100000; ++i) {
        double v = sample_nrw_demand(t, NrwClass::B, 10.0, rng.uniform());
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo >= 120.0);
    CHECK(hi <= 200.0);
    double a = sample_nrw_demand(t, NrwClass::A, 1.0, 0.5);
    CHECK(a > 0.0);
    CHECK(a < 12.0);
    CHECK(sample_nrw_demand(t, NrwClass::E, 0.0, 0.3) == 0.0);
}

TEST_CASE("triangular mode sits at the lower third")
{
    NrwClassTable t;
    // CDF at the mode equals (mode - a) / (b - a) = 1/3
    CHECK(sample_rate(t, NrwClass::C, 1.0 / 3.0) == doctest::Approx(25.0).epsilon(1e-12));
}

TEST_CASE("leak-class policy improves the worst class to the next midpoint")
{
    NrwClassTable t;
    std::vector<NrwMunicipality> m{{"e", 5000, 10.0, 65.0}};
    auto r = apply_intervention(t, m, 1e9, Policy::ByLeakClass, flat_costs(100.0, 0.0));
    CHECK(r.new_age[0] == 57.0);
    CHECK(t.classify(r.new_age[0]) == NrwClass::D);
    CHECK(r.spent == 1000.0);
}

TEST_CASE("budget zero changes nothing")
{
    NrwClassTable t;
    std::vector<NrwMunicipality> m{{"a", 100, 1.0, 70.0}, {"b", 300, 3.0, 30.0}};
    for (Policy p : {Policy::ByLeakClass, Policy::ByPopulation}) {
        auto r = apply_intervention(t, m, 0.0, p, flat_costs(1.0, 1.0));
        CHECK(r.new_age[0] == 70.0);
        CHECK(r.new_age[1] == 30.0);
        CHECK(r.spent == 0.0);
    }
}

TEST_CASE("population policy spends proportionally")
{
    NrwClassTable t;
    std::vector<NrwMunicipality> m{{"a", 100, 1.0, 50.0}, {"b", 300, 3.0, 50.0}};
    auto r = apply_intervention(t, m, 400.0, Policy::ByPopulation, flat_costs(1.0, 0.01));
    CHECK(r.spend[0] == 100.0);
    CHECK(r.spend[1] == 300.0);
    CHECK(r.new_age[0] == doctest::Approx(49.0));
    CHECK(r.new_age[1] == doctest::Approx(49.0));
    CHECK(r.spent <= 400.0);
}

TEST_CASE("leak-class policy serves worse classes first and never overspends")
{
    NrwClassTable t;
    std::vector<NrwMunicipality> m{
        {"b", 1000, 2.0, 30.0}, {"e1", 1000, 4.0, 70.0}, {"e2", 1000, 6.0, 65.0}, {"c", 1000, 1.0, 45.0}};
    // e2 (larger km) costs 600, e1 costs 400; budget 700 pays e2 then skips e1, pays c (100)
    auto r = apply_intervention(t, m, 700.0, Policy::ByLeakClass, flat_costs(100.0, 0.0));
    CHECK(r.new_age[2] == 57.0);
    CHECK(r.new_age[1] == 70.0);
    CHECK(r.new_age[3] == t.age_midpoint(NrwClass::B));
    CHECK(r.new_age[0] == 30.0);
    CHECK(r.spent == 700.0);
    CHECK(r.unspent == 0.0);
}

TEST_CASE("population policy floors ages at zero and stays within budget")
{
    NrwClassTable t;
    RandomStream rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<NrwMunicipality> m;
        int n = 1 + rng.uniform_int(0, 6);
        for (int i = 0; i < n; ++i)
            m.push_back({std::to_string(i), 1 + 1e5 * rng.uniform(), 0.1 + 50 * rng.uniform(), 80 * rng.uniform()});
        double budget = 1e6 * rng.uniform();
        auto r = apply_intervention(t, m, budget, Policy::ByPopulation, flat_costs(1.0, 1e-3));
        CHECK(r.spent <= budget);
        for (std::size_t i = 0; i < m.size(); ++i) {
            CHECK(r.new_age[i] >= 0.0);
            CHECK(r.new_age[i] <= m[i].age);
        }
    }
}

TEST_CASE("policy names")
{
    CHECK(parse_policy("by_population") == Policy::ByPopulation);
    CHECK_THROWS_AS(parse_policy("random"), ConfigError);
    CHECK(size_class(19999) == SizeClass::Small);
    CHECK(size_class(100000) == SizeClass::Medium);
    CHECK(size_class(100001) == SizeClass::Large);
}
