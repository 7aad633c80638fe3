#include "bwf/cli.hpp"

#include "bwf/error.hpp"
#include "bwf/generator.hpp"
#include "bwf/io.hpp"
#include "bwf/output.hpp"
#include "bwf/service.hpp"

#include "CLI11.hpp"
#include "httplib.h"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace bwf::cli {

namespace {

std::string fixed(const std::optional<double>& v)
{
    if (!v)
        return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", *v);
    return buf;
}

void print_violations(std::ostream& err, const std::string& origin, const std::vector<engine::Violation>& v)
{
    for (const auto& x : v)
        err << origin << ": intervention " << x.index << ": " << x.code << ": " << x.message << "\n";
}

scenario::ScenarioTrace load_trace(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw InputError("cannot read '" + path + "'");
    return scenario::read_trace(f);
}

struct Args {
    std::string instance;
    std::string plan;
    std::string out;
    std::string run_dir = "run";
    std::string rundir;
    std::string trace;
    std::string mode = "rep";
    std::string host = "127.0.0.1";
    std::string name = "generated";
    std::vector<std::string> slices;
    std::uint64_t seed = 1;
    int years = 25;
    int port = 8080;
    int munis = 12;
    int sources = 4;
    int provinces = 2;
    bool json = false;
};

int cmd_validate(const Args& a, std::ostream& out, std::ostream& err)
{
    const auto instance = io::load_instance(a.instance);
    const auto plan = io::load_plan(a.plan);
    const auto v = engine::validate_plan(plan, instance);
    if (!v.empty()) {
        print_violations(err, a.plan, v);
        return kExitInvalid;
    }
    out << "ok: " << plan.interventions.size() << " interventions\n";
    return kExitOk;
}

int cmd_simulate(const Args& a, std::ostream& out, std::ostream& err)
{
    const auto instance = io::load_instance(a.instance);
    const auto plan = io::load_plan(a.plan);
    if (a.years < 1)
        throw ConfigError("--years must be at least 1");
    const auto trace = a.trace.empty()
                           ? scenario::generate_trace(domain::trace_request(instance, a.seed, a.years))
                           : load_trace(a.trace);
    const auto v = engine::validate_plan(plan, instance);
    if (!v.empty()) {
        print_violations(err, a.plan, v);
        return kExitInvalid;
    }
    engine::RunOptions ro;
    ro.mode = engine::parse_mode(a.mode);
    ro.years = a.years;
    const auto result = engine::run_stage(instance, domain::initial_state(instance, trace), plan, trace, ro);
    const auto history =
        scenario::reveal_history(trace, result.observations, result.first_year, result.first_year + result.years);
    output::write_run_dir(a.run_dir, result, instance, history);
    const auto r = kpi::evaluate(result.tables, kpi::Slice{});
    out << "wrote " << a.run_dir << ": " << result.years << " years, mode " << engine::mode_name(result.mode)
        << ", reliability " << fixed(r.reliability) << "\n";
    return kExitOk;
}

int cmd_trace(const Args& a, std::ostream& out)
{
    const auto instance = io::load_instance(a.instance);
    if (a.years < 1)
        throw ConfigError("--years must be at least 1");
    const auto trace = scenario::generate_trace(domain::trace_request(instance, a.seed, a.years));
    std::ostringstream ss;
    scenario::write_trace(ss, trace);
    if (a.out == "-")
        out << ss.str();
    else
        io::write_file(a.out, ss.str());
    return kExitOk;
}

int cmd_kpi(const Args& a, std::ostream& out)
{
    const auto tables = output::read_kpi_tables(a.rundir);
    std::vector<std::string> slices = a.slices.empty() ? std::vector<std::string>{"national"} : a.slices;
    io::Json all = io::Json::array();
    for (const auto& text : slices) {
        const auto r = kpi::evaluate(tables, kpi::Slice::parse(text));
        if (a.json) {
            all.push_back(output::report_json(r));
            continue;
        }
        out << "slice " << r.slice << "\n"
            << "tac_eur " << fixed(r.tac) << "\n"
            << "ghg_tco2eq " << fixed(r.ghg) << "\n"
            << "reliability " << fixed(r.reliability) << "\n"
            << "affordability_pct " << fixed(r.affordability) << "\n";
    }
    if (a.json)
        out << io::canonical(all);
    return kExitOk;
}

int cmd_serve(const Args& a, std::ostream& out)
{
    service::ServiceOptions so;
    so.seed = a.seed;
    so.mode = engine::parse_mode(a.mode);
    so.stage_years = a.years;
    service::Service svc(io::load_instance(a.instance), so);
    httplib::Server server;
    svc.bind(server);
    if (!server.bind_to_port(a.host, a.port))
        throw InputError("cannot listen on " + a.host + ":" + std::to_string(a.port));
    out << "listening on http://" << a.host << ":" << a.port << "\n" << std::flush;
    server.listen_after_bind();
    return kExitOk;
}

int cmd_gen(const Args& a, std::ostream& out)
{
    generator::GeneratorOptions g;
    g.name = a.name;
    g.municipalities = a.munis;
    g.sources = a.sources;
    g.provinces = a.provinces;
    g.seed = a.seed;
    const auto text = io::canonical(io::instance_to_json(generator::generate_instance(g)));
    if (a.out == "-")
        out << text;
    else
        io::write_file(a.out, text);
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Staged water network masterplan simulator", "bwf"};
    app.require_subcommand(1);
    app.fallthrough(false);
    Args a;

    auto* validate = app.add_subcommand("validate", "Check an instance and a masterplan");
    validate->add_option("instance", a.instance, "Instance document")->required();
    validate->add_option("plan", a.plan, "Masterplan document")->required();

    auto* simulate = app.add_subcommand("simulate", "Run one stage and write a run directory");
    simulate->add_option("instance", a.instance, "Instance document")->required();
    simulate->add_option("plan", a.plan, "Masterplan document")->required();
    simulate->add_option("--seed", a.seed, "Scenario seed");
    simulate->add_option("--mode", a.mode, "full or rep")->check(CLI::IsMember({"full", "rep", "representative"}));
    simulate->add_option("--years", a.years, "Stage length in years");
    simulate->add_option("--trace", a.trace, "Use a trace file instead of generating one");
    simulate->add_option("--out", a.run_dir, "Output directory");

    auto* trace = app.add_subcommand("trace", "Write the scenario trace of an instance");
    trace->add_option("instance", a.instance, "Instance document")->required();
    trace->add_option("--seed", a.seed, "Scenario seed");
    trace->add_option("--years", a.years, "Years covered");
    trace->add_option("--out", a.out, "Output file, - for stdout")->required();

    auto* kpi = app.add_subcommand("kpi", "Evaluate KPIs of a run directory");
    kpi->add_option("rundir", a.rundir, "Run directory")->required();
    kpi->add_option("--slice", a.slices, "national or key=value list (utility, municipality, class, years)");
    kpi->add_flag("--json", a.json, "Print JSON");

    auto* serve = app.add_subcommand("serve", "Serve the planning API");
    serve->add_option("--port", a.port, "TCP port");
    serve->add_option("--host", a.host, "Bind address");
    serve->add_option("--instance", a.instance, "Instance document")->required();
    serve->add_option("--seed", a.seed, "Scenario seed");
    serve->add_option("--mode", a.mode, "Default simulation mode")->check(CLI::IsMember({"full", "rep", "representative"}));
    serve->add_option("--years", a.years, "Default stage length");

    auto* gen = app.add_subcommand("gen-instance", "Generate a synthetic instance");
    gen->add_option("--munis", a.munis, "Municipalities")->check(CLI::Range(2, 500));
    gen->add_option("--seed", a.seed, "Generator seed");
    gen->add_option("--sources", a.sources, "Existing sources")->check(CLI::Range(1, 100));
    gen->add_option("--provinces", a.provinces, "Provinces, one utility each")->check(CLI::Range(1, 50));
    gen->add_option("--name", a.name, "Instance name");
    gen->add_option("--out", a.out, "Output file, - for stdout");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        const auto& subs = app.get_subcommands();
        out << (subs.empty() ? app.help() : subs.front()->help());
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const auto& subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return kExitUsage;
    }

    try {
        if (validate->parsed())
            return cmd_validate(a, out, err);
        if (simulate->parsed())
            return cmd_simulate(a, out, err);
        if (trace->parsed())
            return cmd_trace(a, out);
        if (kpi->parsed())
            return cmd_kpi(a, out);
        if (serve->parsed())
            return cmd_serve(a, out);
        if (a.out.empty())
            a.out = "-";
        return cmd_gen(a, out);
    } catch (const ValidationError& e) {
        err << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace bwf::cli
