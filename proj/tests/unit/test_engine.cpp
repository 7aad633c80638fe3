#include "doctest.h"

#include "bwf/engine.hpp"
#include "bwf/error.hpp"
#include "bwf/generator.hpp"

#include <cmath>
#include <numeric>

using namespace bwf;
using namespace bwf::engine;

namespace {

struct World {
    domain::Instance instance;
    scenario::ScenarioTrace trace;
};

const World& world()
{
    static const World w = [] {
        World x;
        x.instance = generator::generate_instance({});
        x.trace = scenario::generate_trace(domain::trace_request(x.instance, 11, 30));
        return x;
    }();
    return w;
}

Intervention open_site(const std::string& site, double nominal, Date date)
{
    Intervention iv;
    iv.type = InterventionType::OpenSource;
    iv.date = date;
    iv.target = site;
    iv.nominal_capacity = nominal;
    iv.option = "P600";
    iv.count = 2;
    return iv;
}

Intervention pipe(const std::string& conn, Date date, InterventionType t = InterventionType::InstallPipe)
{
    Intervention iv;
    iv.type = t;
    iv.date = date;
    iv.target = conn;
    iv.option = "D500";
    return iv;
}

std::string unpiped_connection(const domain::Instance& in)
{
    for (const auto& c : in.connections)
        if (!c.pipe)
            return c.id;
    return {};
}

std::string piped_connection(const domain::Instance& in)
{
    for (const auto& c : in.connections)
        if (c.pipe)
            return c.id;
    return {};
}

std::vector<std::string> codes(const std::vector<Violation>& v)
{
    std::vector<std::string> out;
    for (const auto& x : v)
        out.push_back(x.code);
    return out;
}

RunOutput run(const Masterplan& plan, SimMode mode, int years)
{
    const auto& w = world();
    RunOptions o;
    o.mode = mode;
    o.years = years;
    return run_stage(w.instance, domain::initial_state(w.instance, w.trace), plan, w.trace, o);
}

}  // namespace

TEST_CASE("generated instance is valid")
{
    const auto& in = world().instance;
    CHECK(in.check().empty());
    CHECK(in.municipalities.size() == 13);  // twelve plus one clustered town
    auto again = generator::generate_instance({});
    CHECK(again.municipalities[3].population == in.municipalities[3].population);
}

TEST_CASE("simulated days")
{
    auto full = simulated_days(SimMode::Full);
    CHECK(full.size() == 365);
    auto rep = simulated_days(SimMode::Representative);
    CHECK(rep.size() == 84);
    double w = 0.0;
    for (const auto& d : rep)
        w += d.weight;
    CHECK(w == doctest::Approx(365.0).epsilon(1e-12));
    for (int q = 0; q < 4; ++q)
        CHECK(std::any_of(rep.begin(), rep.end(), [&](auto& d) { return d.day == quarter_start_day(q); }));
    CHECK(parse_mode("rep") == SimMode::Representative);
    CHECK_THROWS_AS(parse_mode("fast"), ConfigError);
}

TEST_CASE("plan violations each carry their own code")
{
    const auto& in = world().instance;
    const domain::Site* gw = nullptr;
    for (const auto& s : in.sites)
        if (s.type == assets::SourceType::Groundwater)
            gw = &s;
    REQUIRE(gw);
    const double limit = *gw->permit / 365.0;
    const Date d = Date::jan1(2026);

    Masterplan ok;
    ok.interventions = {open_site(gw->id, 1.29 * limit, d), pipe(unpiped_connection(in), Date{2027, 4, 1})};
    CHECK(validate_plan(ok, in).empty());

    Masterplan permit;
    permit.interventions = {open_site(gw->id, 1.31 * limit, d)};
    CHECK(codes(validate_plan(permit, in)) == std::vector<std::string>{"permit_30pct"});

    Masterplan dup;
    dup.interventions = {pipe(piped_connection(in), d)};
    CHECK(codes(validate_plan(dup, in)) == std::vector<std::string>{"duplicate_pipe"});

    Masterplan site;
    site.interventions = {open_site("nowhere", 100.0, d)};
    CHECK(codes(validate_plan(site, in)) == std::vector<std::string>{"unknown_site"});

    Masterplan misc;
    misc.interventions = {open_site(gw->id, 100.0, Date{2026, 2, 1}), open_site(gw->id, 100.0, Date::jan1(2080)),
                          pipe(piped_connection(in), d, InterventionType::ReplacePipe)};
    CHECK(codes(validate_plan(misc, in)) == std::vector<std::string>{"date_alignment", "date_out_of_horizon", "site_in_use"});

    Intervention close;
    close.type = InterventionType::CloseSource;
    close.target = gw->id;
    close.date = Date{2027, 1, 1};
    Masterplan reopen;
    reopen.interventions = {open_site(gw->id, 100.0, d), close, open_site(gw->id, 100.0, Date::jan1(2028))};
    CHECK(codes(validate_plan(reopen, in)) == std::vector<std::string>{"reopen_source"});

    CHECK_THROWS_AS(run(permit, SimMode::Representative, 1), ValidationError);
}

TEST_CASE("runs are deterministic and conserve water")
{
    Masterplan plan;
    auto a = run(plan, SimMode::Representative, 2);
    auto b = run(plan, SimMode::Representative, 2);
    REQUIRE(a.summaries.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(a.summaries[k].delivered == b.summaries[k].delivered);
        CHECK(a.summaries[k].energy_cost == b.summaries[k].energy_cost);
        const auto& s = a.summaries[k];
        CHECK(s.source_outflow == doctest::Approx(s.delivered + s.nrw_delivered).epsilon(1e-6));
        CHECK(s.delivered <= s.demand * (1 + 1e-12));
    }
    for (const auto& l : a.ledgers)
        CHECK(std::fabs(l.identity_residual()) <= 1e-6 * (1.0 + std::fabs(l.remaining)));
    CHECK(a.tables.costs.size() == 2 * world().instance.utilities.size());
    CHECK(a.observations.values.count("consumption"));
}

TEST_CASE("daily extraction never exceeds nominal capacity in a full year")
{
    auto out = run(Masterplan{}, SimMode::Full, 1);
    REQUIRE(!out.source_days.empty());
    for (const auto& d : out.source_days) {
        CHECK(d.outflow <= d.nominal);
        if (!d.available)
            CHECK(d.outflow == 0.0);
    }
}

TEST_CASE("interventions book capital and change the network")
{
    const auto& in = world().instance;
    const domain::Site* gw = &in.sites[0];
    Masterplan plan;
    plan.interventions = {open_site(gw->id, 2000.0, Date::jan1(2025)), pipe(unpiped_connection(in), Date{2025, 4, 1})};
    Intervention pv;
    pv.type = InterventionType::InstallPv;
    pv.target = in.sources[0].id;
    pv.date = Date{2025, 7, 1};
    pv.capacity_kw = 500.0;
    plan.interventions.push_back(pv);
    Intervention nrwb;
    nrwb.type = InterventionType::NrwBudget;
    nrwb.target = in.utilities[0].id;
    nrwb.date = Date::jan1(2025);
    nrwb.share = 0.2;
    plan.interventions.push_back(nrwb);

    auto out = run(plan, SimMode::Representative, 5);
    const auto& st = out.final_state;
    const auto* s = st.source(gw->id);
    REQUIRE(s);
    CHECK(s->from_plan);
    CHECK(s->data.activation_date.year >= 2026);
    CHECK(s->data.activation_date.year <= 2028);
    CHECK(st.connection(unpiped_connection(in))->pipe.has_value());
    CHECK(st.source(in.sources[0].id)->pv.size() == 1);
    double capex = 0.0;
    for (const auto& l : out.ledgers)
        if (l.year == 2025)
            capex += l.capex;
    CHECK(capex > 2000.0 * 800.0 * 0.9);
    CHECK(std::any_of(out.source_days.begin(), out.source_days.end(),
                      [&](auto& d) { return d.source == gw->id && d.outflow > 0.0; }));
    bool pv_used = false;
    for (const auto& y : out.summaries)
        pv_used = pv_used || y.pv_kwh > 0.0;
    CHECK(pv_used);
}

TEST_CASE("two stages reproduce one run")
{
    const auto& w = world();
    Masterplan plan;
    plan.interventions = {pipe(unpiped_connection(w.instance), Date{2026, 10, 1})};
    auto whole = run(plan, SimMode::Representative, 4);
    auto first = run(plan, SimMode::Representative, 2);
    auto boundary = step_stage_boundary(w.instance, first, plan, w.trace);
    // already built in stage one and dated before the new stage
    CHECK(codes(boundary.violations) == std::vector<std::string>{"date_out_of_horizon", "duplicate_pipe"});
    Masterplan rest;
    boundary = step_stage_boundary(w.instance, first, rest, w.trace);
    CHECK(boundary.violations.empty());
    CHECK(boundary.history.up_to_year == 2027);
    CHECK(boundary.history.values.count("electricity_price"));
    CHECK_FALSE(boundary.history.values.count("population"));
    CHECK(boundary.history.values.at("consumption").begin()->second.count(2026));
    RunOptions o;
    o.years = 2;
    auto second = run_stage(w.instance, boundary.state, rest, w.trace, o);
    REQUIRE(second.summaries.size() == 2);
    CHECK(second.summaries[0].year == 2027);
    CHECK(second.summaries[1].delivered == whole.summaries[3].delivered);
    CHECK(second.ledgers.back().remaining == whole.ledgers.back().remaining);
}

TEST_CASE("lifecycle events run inside the simulation")
{
    auto out = run(Masterplan{}, SimMode::Representative, 7);
    const auto& in = world().instance;
    std::string absorbed;
    for (const auto& m : in.municipalities)
        if (m.end && m.end->kind == domain::Disposition::Absorbed)
            absorbed = m.id;
    REQUIRE(!absorbed.empty());
    bool seen_before = false, seen_after = false;
    for (const auto& m : out.municipalities) {
        if (m.municipality != absorbed)
            continue;
        seen_before = seen_before || m.year < 2028;
        seen_after = seen_after || m.year >= 2028;
    }
    CHECK(seen_before);
    CHECK_FALSE(seen_after);
    CHECK(std::any_of(out.municipalities.begin(), out.municipalities.end(),
                      [](auto& m) { return m.municipality == "M13" && m.year == 2031 && m.population > 0.0; }));
}

TEST_CASE("cancellation aborts the run")
{
    const auto& w = world();
    std::atomic<bool> stop{true};
    RunOptions o;
    o.years = 1;
    o.cancel = &stop;
    CHECK_THROWS_AS(run_stage(w.instance, domain::initial_state(w.instance, w.trace), Masterplan{}, w.trace, o),
                    SimulationAbort);
}

TEST_CASE("pipe works on a link closed by a lifecycle event are refunded at half cost")
{
    const auto& in = world().instance;
    const domain::Municipality* gone = nullptr;
    for (const auto& m : in.municipalities)
        if (m.end && m.end->kind == domain::Disposition::Absorbed)
            gone = &m;
    REQUIRE(gone);
    const domain::Connection* link = nullptr;
    for (const auto& c : in.connections)
        if ((c.node_a == gone->id && c.node_b == gone->end->target) ||
            (c.node_b == gone->id && c.node_a == gone->end->target))
            link = &c;
    REQUIRE(link);
    const int year = gone->end_date->year + 1;
    Masterplan plan;
    plan.interventions = {pipe(link->id, Date::jan1(year), link->pipe ? InterventionType::ReplacePipe : InterventionType::InstallPipe)};
    auto out = run(plan, SimMode::Representative, year - 2025 + 1);
    const auto& assets = out.final_state.assets;
    auto it = std::find_if(assets.begin(), assets.end(), [&](auto& a) { return a.id.find("/cancelled/") != std::string::npos; });
    REQUIRE(it != assets.end());
    const auto& opt = in.catalogs.pipes.at("D500");
    CHECK(it->capital < opt.cost_per_m * link->distance);
    CHECK(it->capital > 0.4 * opt.cost_per_m * link->distance);
    const auto* c = out.final_state.connection(link->id);
    CHECK(c->hidden);
    CHECK(c->pipe.has_value() == link->pipe.has_value());
}
