// One line per acceptance criterion; exit status is the number of failures.

#include "../support/random_networks.hpp"
#include "bwf/cli.hpp"
#include "bwf/demand.hpp"
#include "bwf/economy.hpp"
#include "bwf/engine.hpp"
#include "bwf/error.hpp"
#include "bwf/hydraulics.hpp"
#include "bwf/io.hpp"
#include "bwf/kpi.hpp"
#include "bwf/nrw.hpp"

#include <chrono>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

using namespace bwf;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

std::string data(const std::string& rel)
{
    return std::string(BWF_DATA_DIR) + "/" + rel;
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// ---- hydraulics -------------------------------------------------------------

hydraulics::HydraulicNetwork two_node(double source_head, double demand)
{
    hydraulics::HydraulicNetwork net;
    net.junctions.push_back({"J", 0.0, demand});
    net.fixed_heads.push_back({"R", source_head});
    net.pipes.push_back({"P", 1, 0, 1000.0, 0.5, 0.02});
    return net;
}

double hand_headloss(double q_m3s)
{
    const double v = q_m3s / (std::numbers::pi * 0.25 * 0.25);
    return 0.02 * (1000.0 / 0.5) * v * v / (2.0 * 9.81);
}

double bisect_pressure(double source_head, double demand)
{
    auto residual = [&](double p) {
        const double frac = p >= 30.0 ? 1.0 : (p <= 0.0 ? 0.0 : std::sqrt(p / 30.0));
        return source_head - hand_headloss(demand * frac / 3600.0) - p;
    };
    double lo = 0.0, hi = source_head;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (residual(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Outcome hydraulic_oracle()
{
    const auto net = two_node(50.0, 360.0);
    const double expected = 50.0 - hand_headloss(0.1);
    auto sol = hydraulics::solve_step(net);
    const int reps = 2000;
    const auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i)
        sol = hydraulics::solve_step(net);
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count() / reps;
    const double h = sol.junctions[0].head;
    const bool ok = sol.converged && std::fabs(h - 49.4711) <= 1e-4 && std::fabs(h - expected) <= 1e-6 && ms < 1.0;
    return {ok, "head " + fmt("%.6f", h) + " m (hand " + fmt("%.6f", expected) + "), " + fmt("%.4f", ms) + " ms/solve"};
}

Outcome pda()
{
    double worst = 0.0;
    int cases = 0;
    bool exact = true;
    for (double head = 1.0; head < 60.0; head += 0.5) {
        const auto sol = hydraulics::solve_step(two_node(head, 360.0));
        if (!sol.converged)
            return {false, "no convergence at head " + fmt("%g", head)};
        const double p = bisect_pressure(head, 360.0);
        const double ratio = sol.junctions[0].delivered / 360.0;
        if (p > 0.0 && p < 30.0) {
            worst = std::max(worst, std::fabs(ratio - std::sqrt(p / 30.0)));
            ++cases;
        } else if (p >= 30.0) {
            exact = exact && sol.junctions[0].delivered == 360.0;
        }
    }
    return {worst <= 1e-6 && exact && cases > 0,
            std::to_string(cases) + " partial cases, max |ratio - sqrt(p/30)| " + fmt("%.2e", worst) +
                (exact ? ", full delivery exact at p >= 30" : ", full delivery inexact")};
}

Outcome mass_balance()
{
    int converged = 0;
    double residual = 0.0, closure = 0.0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const auto rn = testing::make_random_network(seed * 7919, 3, 10, seed % 4 == 0);
        hydraulics::HydraulicSolution sol;
        try {
            sol = hydraulics::solve_step(rn.net);
        } catch (const PumpRangeError&) {
            continue;
        }
        if (!sol.converged)
            continue;
        ++converged;
        for (const auto& j : sol.junctions)
            residual = std::max(residual, j.mass_residual);
        for (const auto& loop : rn.loops)
            closure = std::max(closure, std::fabs(testing::loop_closure(rn, sol, loop)));
    }
    return {residual <= 1e-6 && closure <= 1e-6 && converged >= 180,
            std::to_string(converged) + "/200 converged, max residual " + fmt("%.2e", residual) + " m3/h, max loop " +
                fmt("%.2e", closure) + " m"};
}

// ---- NRW and KPI -------------------------------------------------------------

Outcome nrw_table()
{
    nrw::NrwClassTable t;
    const double ages[] = {0, 24.9, 25, 42.9, 43, 53.9, 54, 59.9, 60, 100};
    const char* want = "AABBCCDDEE";
    std::string got;
    for (double a : ages)
        got += nrw::class_name(t.classify(a));
    const double km = nrw::km_pipes(10000);
    return {got == want && km == 57.7, "classes " + got + ", km_pipes(10000) = " + fmt("%.15g", km)};
}

Outcome kpi_formulas()
{
    const auto r = kpi::reliability({{"u", "m", "", 2030, 100.0, 80.0}});
    economy::MarketConditions m;
    m.investor_demand = 0.8;
    const double c_low = economy::coupon_rate(m);
    m.investor_demand = 1.2;
    const double c_high = economy::coupon_rate(m);
    const double af = kpi::affordability(1.0, 4.5, 10.0, 1500.0);
    economy::Bond b;
    b.principal = 200.0;
    b.coupon = 0.04;
    b.issue_year = 2029;
    const std::vector<kpi::Asset> assets{{"k", "u", "pipe", 1000.0, 10.0, 2030, 0.0, ""}};
    const double tac = kpi::tac_year(assets, 50.0, {b}, 2030);
    const bool ok = r && *r == 0.8 && c_low == 0.044 && c_high == 0.036 && std::fabs(af - 0.9667) <= 1e-4 && tac == 158.0;
    return {ok, "R " + fmt("%.15g", r.value_or(-1)) + ", coupon " + fmt("%.15g", c_low) + "/" + fmt("%.15g", c_high) +
                    ", AF " + fmt("%.6f", af) + "%, TAC " + fmt("%.15g", tac)};
}

// ---- demand ------------------------------------------------------------------

Outcome demand_normalization()
{
    const auto lib = demand::ProfileLibrary::synthetic();
    const demand::SeasonalParams params;
    std::vector<demand::MunicipalityDemandInput> m;
    for (int i = 0; i < 20; ++i)
        m.push_back({"m" + std::to_string(i), 800.0 + 1300.0 * i, 40.0 + 25.0 * i});
    double worst = 0.0;
    bool nonneg = true, identical = true;
    int checked = 0;
    for (int year = 2025; year < 2030; ++year) {
        const auto plan = demand::phase1_annual_volumes(m, 0.35, 2.0, std::nullopt, 0.05, 23, year);
        for (std::size_t i = 0; i < m.size(); ++i) {
            const auto choice = demand::phase2_assign_profiles(m[i].id, m[i].houses * 2.2, lib, 23, year);
            const double w = demand::default_mix_weight(m[i].houses, m[i].businesses);
            const auto s = demand::phase3_hourly_series(plan.volumes[i], lib, choice, w, 31.0, params, 23, year);
            const auto again = demand::phase3_hourly_series(plan.volumes[i], lib, choice, w, 31.0, params, 23, year);
            long double sum = 0.0L;
            for (double v : s.samples) {
                sum += v;
                nonneg = nonneg && v >= 0.0;
            }
            worst = std::max(worst, std::fabs(static_cast<double>(sum) - s.annual_volume()) / s.annual_volume());
            identical = identical && again.samples == s.samples;
            ++checked;
        }
    }
    return {checked == 100 && worst <= 1e-3 && nonneg && identical,
            std::to_string(checked) + " municipality-years, max relative error " + fmt("%.2e", worst) +
                (nonneg ? ", non-negative" : ", NEGATIVE") + (identical ? ", bit-identical" : ", NOT identical")};
}

// ---- end to end on the demo instance -----------------------------------------

int cli(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    return cli::run_cli(args, out, err);
}

Outcome determinism()
{
    const auto root = fs::temp_directory_path() / "bwf-acceptance";
    fs::remove_all(root);
    const std::string a = (root / "a").string(), b = (root / "b").string();
    for (const auto& dir : {a, b})
        if (cli({"simulate", data("demo/instance.json"), data("demo/plan.json"), "--seed", "7", "--out", dir}) != 0)
            return {false, "simulate failed"};
    int files = 0;
    for (const auto& f : fs::directory_iterator(a)) {
        const auto other = fs::path(b) / f.path().filename();
        if (!fs::exists(other) || io::read_file(f.path().string()) != io::read_file(other.string()))
            return {false, f.path().filename().string() + " differs"};
        ++files;
    }
    const auto count = std::distance(fs::directory_iterator(b), fs::directory_iterator{});
    return {files > 0 && count == files, std::to_string(files) + " files byte-identical"};
}

struct Demo {
    domain::Instance instance;
    engine::Masterplan plan;
    scenario::ScenarioTrace trace;
};

const Demo& demo()
{
    static const Demo d = [] {
        Demo x;
        x.instance = io::load_instance(data("demo/instance.json"));
        x.plan = io::load_plan(data("demo/plan.json"));
        x.trace = scenario::generate_trace(domain::trace_request(x.instance, 7, 25));
        return x;
    }();
    return d;
}

engine::RunOutput run_demo(engine::SimMode mode, int years)
{
    const auto& d = demo();
    engine::RunOptions o;
    o.mode = mode;
    o.years = years;
    o.record_hours = false;
    return engine::run_stage(d.instance, domain::initial_state(d.instance, d.trace), d.plan, d.trace, o);
}

const engine::RunOutput& full_run()
{
    static const auto out = run_demo(engine::SimMode::Full, 25);
    return out;
}

Outcome daily_cap()
{
    const auto& out = full_run();
    const auto& d = demo();
    int days = 0, dry = 0, over = 0, wet_on_dry = 0;
    for (const auto& s : out.source_days) {
        ++days;
        over += s.outflow > s.nominal;
        if (s.surface && !d.trace.available(s.source, s.year, s.day)) {
            ++dry;
            wet_on_dry += s.outflow != 0.0;
        }
    }
    return {days > 0 && over == 0 && wet_on_dry == 0 && dry > 0,
            std::to_string(days) + " source-days over 25 full years, " + std::to_string(over) + " above nominal, " +
                std::to_string(dry) + " dry surface days with " + std::to_string(wet_on_dry) + " non-zero"};
}

Outcome plan_fixtures()
{
    const auto& in = demo().instance;
    const std::pair<const char*, const char*> fixtures[] = {{"fixtures/plan_permit_131.json", "permit_30pct"},
                                                            {"fixtures/plan_duplicate_pipe.json", "duplicate_pipe"},
                                                            {"fixtures/plan_unknown_site.json", "unknown_site"}};
    std::string detail;
    bool ok = true;
    for (const auto& [file, code] : fixtures) {
        const auto v = engine::validate_plan(io::load_plan(data(file)), in);
        const bool one = v.size() == 1 && v[0].code == code;
        ok = ok && one;
        detail += (detail.empty() ? "" : ", ") + std::string(code) + (one ? " only" : " MISSING");
    }
    return {ok, detail};
}

Outcome representative_fidelity()
{
    const auto& full = full_run();
    const auto rep = run_demo(engine::SimMode::Representative, 25);
    double worst = 0.0;
    for (std::size_t y = 0; y < full.summaries.size(); ++y) {
        const double f = full.summaries[y].delivered, r = rep.summaries[y].delivered;
        worst = std::max(worst, std::fabs(r - f) / f);
    }
    return {worst <= 0.05 && full.summaries.size() == 25, "max yearly deviation " + fmt("%.3f", 100 * worst) + "% over 25 years"};
}

Outcome performance()
{
    const auto t0 = Clock::now();
    const auto out = run_demo(engine::SimMode::Representative, 25);
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    const auto& in = demo().instance;
    const auto initial = std::count_if(in.municipalities.begin(), in.municipalities.end(),
                                       [&](auto& m) { return m.begin_date.year == in.start_year; });
    return {s < 60.0 && out.summaries.size() == 25,
            "25 representative years in " + fmt("%.2f", s) + " s (" + std::to_string(initial) + " municipalities, " +
                std::to_string(in.sources.size()) + " sources)"};
}

}  // namespace

int main()
{
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"hydraulic oracle", hydraulic_oracle},
        {"pressure-driven delivery", pda},
        {"mass balance on 200 random networks", mass_balance},
        {"NRW table fidelity", nrw_table},
        {"KPI formulas", kpi_formulas},
        {"demand normalization", demand_normalization},
        {"end-to-end determinism", determinism},
        {"daily cap", daily_cap},
        {"plan validation fixtures", plan_fixtures},
        {"representative-mode fidelity", representative_fidelity},
        {"performance", performance},
    };
    int failed = 0, k = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", ++k, name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%d criteria passed\n", k - failed, k);
    return failed;
}
