#include "bwf/output.hpp"

#include "bwf/error.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace bwf::output {

namespace {

Json opt(const std::optional<double>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

// Builds a TSV document row by row.
class Table {
public:
    explicit Table(std::initializer_list<std::string_view> header)
    {
        bool first = true;
        for (auto h : header) {
            if (!first)
                text_ += '\t';
            text_ += h;
            first = false;
        }
        text_ += '\n';
    }

    Table& operator<<(const std::string& s)
    {
        sep();
        text_ += s;
        return *this;
    }
    Table& operator<<(const char* s) { return *this << std::string(s); }
    Table& operator<<(std::string_view s) { return *this << std::string(s); }
    Table& operator<<(double v) { return *this << num(v); }
    Table& operator<<(int v) { return *this << std::to_string(v); }
    Table& operator<<(bool v) { return *this << std::string(v ? "1" : "0"); }

    void end()
    {
        text_ += '\n';
        fresh_ = true;
    }

    const std::string& str() const { return text_; }

private:
    void sep()
    {
        if (!fresh_)
            text_ += '\t';
        fresh_ = false;
    }

    std::string text_;
    bool fresh_ = true;
};

std::vector<std::vector<std::string>> read_tsv(const std::string& path, std::size_t columns)
{
    std::ifstream f(path);
    if (!f)
        throw InputError("cannot read '" + path + "'");
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::getline(f, line);  // header
    int n = 1;
    while (std::getline(f, line)) {
        ++n;
        if (line.empty())
            continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, '\t'))
            cells.push_back(cell);
        if (line.back() == '\t')
            cells.emplace_back();
        if (cells.size() != columns)
            throw InputError(path + ":" + std::to_string(n) + ": expected " + std::to_string(columns) + " columns");
        rows.push_back(std::move(cells));
    }
    return rows;
}

double to_num(const std::string& s, const std::string& where)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size())
            throw InputError("");
        return v;
    } catch (const std::exception&) {
        throw InputError(where + ": bad number '" + s + "'");
    }
}

}  // namespace

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Json report_json(const kpi::Report& r)
{
    return {{"slice", r.slice},
            {"tac", r.tac},
            {"ghg", r.ghg},
            {"reliability", opt(r.reliability)},
            {"affordability", opt(r.affordability)}};
}

Json history_json(const scenario::History& h)
{
    Json values = Json::object();
    for (const auto& [q, scopes] : h.values)
        for (const auto& [scope, years] : scopes) {
            Json ys = Json::object();
            for (const auto& [y, v] : years)
                ys[std::to_string(y)] = v;
            values[q][scope] = ys;
        }
    return {{"first_year", h.first_year}, {"up_to_year", h.up_to_year}, {"values", values}};
}

Json kpi_json(const kpi::Tables& tables, int first_year, int years, const std::vector<domain::Utility>& utilities)
{
    Json j;
    j["national"] = report_json(kpi::evaluate(tables, kpi::Slice{}));
    j["utilities"] = Json::array();
    for (const auto& u : utilities) {
        kpi::Slice s;
        s.utility = u.id;
        j["utilities"].push_back(report_json(kpi::evaluate(tables, s)));
    }
    j["years"] = Json::array();
    for (int y = first_year; y < first_year + years; ++y) {
        kpi::Slice s;
        s.first_year = y;
        s.last_year = y;
        j["years"].push_back(report_json(kpi::evaluate(tables, s)));
    }
    return j;
}

Json series_json(const engine::RunOutput& out)
{
    Json s = Json::object();
    auto column = [&](const char* name, auto get) {
        Json a = Json::array();
        for (const auto& y : out.summaries)
            a.push_back(get(y));
        s[name] = a;
    };
    column("year", [](const engine::YearSummary& y) { return Json(y.year); });
    column("demand", [](const engine::YearSummary& y) { return Json(y.demand); });
    column("delivered", [](const engine::YearSummary& y) { return Json(y.delivered); });
    column("nrw_demand", [](const engine::YearSummary& y) { return Json(y.nrw_demand); });
    column("source_outflow", [](const engine::YearSummary& y) { return Json(y.source_outflow); });
    column("pump_kwh", [](const engine::YearSummary& y) { return Json(y.pump_kwh); });
    column("pv_kwh", [](const engine::YearSummary& y) { return Json(y.pv_kwh); });
    column("energy_cost", [](const engine::YearSummary& y) { return Json(y.energy_cost); });
    column("failed_steps", [](const engine::YearSummary& y) { return Json(y.failed_steps); });
    std::map<int, std::array<double, 4>> money;  // capex, opex, bonds, remaining
    for (const auto& l : out.ledgers) {
        auto& m = money[l.year];
        m[0] += l.capex;
        m[1] += l.opex + l.fines;
        m[2] += l.bond_issued;
        m[3] += l.remaining;
    }
    const char* names[] = {"capex", "opex", "bond_issued", "remaining"};
    for (int k = 0; k < 4; ++k) {
        Json a = Json::array();
        for (const auto& y : out.summaries)
            a.push_back(money.count(y.year) ? money[y.year][static_cast<std::size_t>(k)] : 0.0);
        s[names[k]] = a;
    }
    return s;
}

Json run_json(const engine::RunOutput& out, const domain::Instance& instance, const scenario::History& history)
{
    return {{"format_version", 1},
            {"instance", out.instance_name},
            {"seed", out.seed},
            {"mode", engine::mode_name(out.mode)},
            {"first_year", out.first_year},
            {"years", out.years},
            {"kpi", kpi_json(out.tables, out.first_year, out.years, instance.utilities)},
            {"series", series_json(out)},
            {"history", history_json(history)}};
}

void write_run_dir(const std::string& dir, const engine::RunOutput& out, const domain::Instance& instance,
                   const scenario::History& history)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw InputError("cannot create '" + dir + "': " + ec.message());
    const fs::path root(dir);
    auto put = [&](const char* name, const std::string& text) { io::write_file((root / name).string(), text); };

    Json run = run_json(out, instance, history);
    run.erase("history");
    put("run.json", io::canonical(run));
    put("history.json", io::canonical(history_json(history)));

    Table years({"year", "demand", "delivered", "nrw_demand", "nrw_delivered", "source_outflow", "pump_kwh",
                 "treatment_kwh", "pv_kwh", "grid_kwh", "energy_cost", "failed_steps", "solves"});
    for (const auto& y : out.summaries) {
        years << y.year << y.demand << y.delivered << y.nrw_demand << y.nrw_delivered << y.source_outflow << y.pump_kwh
              << y.treatment_kwh << y.pv_kwh << y.grid_kwh << y.energy_cost << y.failed_steps << y.solves;
        years.end();
    }
    put("years.tsv", years.str());

    Table ledger({"utility", "year", "carry_in", "allocated", "revenue", "capex", "opex", "fines", "interest",
                  "principal_repaid", "bond_issued", "remaining"});
    for (const auto& l : out.ledgers) {
        ledger << l.utility << l.year << l.carry_in << l.allocated << l.revenue << l.capex << l.opex << l.fines
               << l.interest << l.principal_repaid << l.bond_issued << l.remaining;
        ledger.end();
    }
    put("ledger.tsv", ledger.str());

    Table bonds({"utility", "issue_year", "principal", "coupon", "issue_price", "maturity_year"});
    for (const auto& b : out.bonds) {
        bonds << b.utility << b.issue_year << b.principal << b.coupon << b.issue_price << b.maturity_year();
        bonds.end();
    }
    put("bonds.tsv", bonds.str());

    Table assets({"id", "utility", "kind", "capital", "lifetime", "commission_year", "embedded_emissions",
                  "emission_basis"});
    for (const auto& a : out.final_state.assets) {
        assets << a.id << a.utility << a.kind << a.capital << a.lifetime << a.commission_year << a.embedded_emissions
               << a.emission_basis;
        assets.end();
    }
    put("assets.tsv", assets.str());

    Table munis({"municipality", "utility", "year", "population", "avg_age", "nrw_class", "nrw_demand", "demand",
                 "delivered"});
    for (const auto& m : out.municipalities) {
        munis << m.municipality << m.utility << m.year << m.population << m.avg_age << m.nrw_class << m.nrw_demand
              << m.demand << m.delivered;
        munis.end();
    }
    put("municipalities.tsv", munis.str());

    Table days({"source", "year", "day", "outflow", "nominal", "available", "surface"});
    for (const auto& d : out.source_days) {
        days << d.source << d.year << d.day << d.outflow << d.nominal << d.available << d.surface;
        days.end();
    }
    put("source_days.tsv", days.str());

    Table hours({"year", "day", "hour", "demand", "delivered", "pump_kw", "iterations", "converged"});
    for (const auto& h : out.hours) {
        hours << h.year << h.day << h.hour << h.demand << h.delivered << h.pump_kw << h.iterations << h.converged;
        hours.end();
    }
    put("hours.tsv", hours.str());

    Table costs({"utility", "year", "annualized_capex", "opex", "interest", "embedded_ghg", "operational_ghg"});
    for (const auto& c : out.tables.costs) {
        costs << c.utility << c.year << c.annualized_capex << c.opex << c.interest << c.embedded_ghg
              << c.operational_ghg;
        costs.end();
    }
    put("kpi_costs.tsv", costs.str());

    Table cells({"utility", "municipality", "class", "year", "demand", "delivered"});
    for (const auto& c : out.tables.cells) {
        cells << c.utility << c.municipality << c.household_class << c.year << c.demand << c.delivered;
        cells.end();
    }
    put("kpi_cells.tsv", cells.str());

    Table afford({"utility", "municipality", "class", "year", "volumetric", "fixed", "lifeline", "monthly_income",
                  "weight"});
    for (const auto& a : out.tables.afford) {
        afford << a.utility << a.municipality << a.household_class << a.year << a.volumetric << a.fixed << a.lifeline
               << a.monthly_income << a.weight;
        afford.end();
    }
    put("kpi_afford.tsv", afford.str());
}

kpi::Tables read_kpi_tables(const std::string& dir)
{
    namespace fs = std::filesystem;
    const fs::path root(dir);
    if (!fs::is_directory(root))
        throw InputError("'" + dir + "' is not a run directory");
    kpi::Tables t;
    auto year = [](const std::string& s, const std::string& where) { return static_cast<int>(to_num(s, where)); };

    const std::string cp = (root / "kpi_costs.tsv").string();
    for (const auto& r : read_tsv(cp, 7))
        t.costs.push_back({r[0], year(r[1], cp), to_num(r[2], cp), to_num(r[3], cp), to_num(r[4], cp),
                           to_num(r[5], cp), to_num(r[6], cp)});
    const std::string lp = (root / "kpi_cells.tsv").string();
    for (const auto& r : read_tsv(lp, 6))
        t.cells.push_back({r[0], r[1], r[2], year(r[3], lp), to_num(r[4], lp), to_num(r[5], lp)});
    const std::string ap = (root / "kpi_afford.tsv").string();
    for (const auto& r : read_tsv(ap, 9))
        t.afford.push_back({r[0], r[1], r[2], year(r[3], ap), to_num(r[4], ap), to_num(r[5], ap), to_num(r[6], ap),
                            to_num(r[7], ap), to_num(r[8], ap)});
    return t;
}

}  // namespace bwf::output
