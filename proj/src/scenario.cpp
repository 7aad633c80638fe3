#include "bwf/scenario.hpp"

#include "bwf/date.hpp"
#include "bwf/error.hpp"
#include "bwf/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace bwf::scenario {

namespace {

constexpr std::string_view kNational = "national";
constexpr int kSummerFirst = 151;  // Jun 1
constexpr int kSummerLast = 272;   // Sep 30

double reflect(double x, double lo, double hi)
{
    if (!(hi > lo))
        return lo;
    const double w = hi - lo;
    double y = std::fmod(x - lo, 2.0 * w);
    if (y < 0.0)
        y += 2.0 * w;
    if (y > w)
        y = 2.0 * w - y;
    return lo + y;
}

std::vector<double> generate_path(const DriverSpec& spec, double base, std::uint64_t stream_seed, int years)
{
    RandomStream rng(stream_seed);
    std::vector<double> out(static_cast<std::size_t>(years));
    double e = 0.0;
    for (int t = 0; t < years; ++t) {
        const double m = base * spec.mean(t);
        const double lo = m * (1.0 - spec.lower);
        const double hi = m * (1.0 + spec.upper);
        double x = m;
        switch (spec.kind) {
        case DriverKind::BoundedWalk:
            if (t)
                e = reflect(e + spec.volatility * rng.normal(), -spec.lower, spec.upper);
            x = m * (1.0 + e);
            break;
        case DriverKind::MeanReverting:
            if (t)
                e = reflect((1.0 - spec.reversion) * e + spec.volatility * rng.normal(), -spec.lower, spec.upper);
            x = m * (1.0 + e);
            break;
        case DriverKind::Ar1Lognormal:
            if (t)
                e = spec.phi * e + spec.volatility * rng.normal();
            x = m * std::exp(e);
            break;
        case DriverKind::Sampled:
            x = lo + rng.uniform() * (hi - lo);
            break;
        }
        // bounds are inclusive and exact, whatever rounding the law produced
        out[static_cast<std::size_t>(t)] = std::clamp(x, std::min(lo, hi), std::max(lo, hi));
    }
    return out;
}

std::vector<std::uint8_t> generate_availability(const DroughtSpec& spec, std::uint64_t stream_seed, int years)
{
    RandomStream rng(stream_seed);
    std::vector<std::uint8_t> out(static_cast<std::size_t>(years) * kDaysPerYear);
    bool up = true;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int doy = static_cast<int>(i % kDaysPerYear);
        const double u = rng.uniform();
        if (up) {
            const double onset = doy >= kSummerFirst && doy <= kSummerLast ? spec.onset_summer : spec.onset_other;
            up = !(u < onset);
        } else {
            up = u < spec.recovery;
        }
        out[i] = up ? 1 : 0;
    }
    return out;
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

DriverKind parse_driver_kind(std::string_view text)
{
    if (text == "bounded_walk")
        return DriverKind::BoundedWalk;
    if (text == "mean_reverting")
        return DriverKind::MeanReverting;
    if (text == "ar1_lognormal")
        return DriverKind::Ar1Lognormal;
    if (text == "sampled")
        return DriverKind::Sampled;
    throw ConfigError("unknown driver kind '" + std::string(text) + "'");
}

std::string_view driver_kind_name(DriverKind k)
{
    switch (k) {
    case DriverKind::BoundedWalk:
        return "bounded_walk";
    case DriverKind::MeanReverting:
        return "mean_reverting";
    case DriverKind::Ar1Lognormal:
        return "ar1_lognormal";
    case DriverKind::Sampled:
        return "sampled";
    }
    return "bounded_walk";
}

Scope parse_scope(std::string_view text)
{
    if (text == "national")
        return Scope::National;
    if (text == "utility")
        return Scope::Utility;
    if (text == "municipality")
        return Scope::Municipality;
    throw ConfigError("unknown driver scope '" + std::string(text) + "'");
}

std::string_view scope_name(Scope s)
{
    switch (s) {
    case Scope::National:
        return "national";
    case Scope::Utility:
        return "utility";
    case Scope::Municipality:
        return "municipality";
    }
    return "national";
}

void DriverSpec::validate() const
{
    if (name.empty())
        throw ConfigError("driver spec without a name");
    const std::string where = "driver '" + name + "': ";
    if (lower < 0.0 || upper < 0.0)
        throw ConfigError(where + "relative bounds must be non-negative");
    if (volatility < 0.0)
        throw ConfigError(where + "volatility must be non-negative");
    if (reversion < 0.0 || reversion > 1.0)
        throw ConfigError(where + "reversion must lie in [0, 1]");
    if (!(std::fabs(phi) < 1.0))
        throw ConfigError(where + "phi must satisfy |phi| < 1");
    if (!std::isfinite(start) || !std::isfinite(growth))
        throw ConfigError(where + "start and growth must be finite");
}

double DriverSpec::mean(int t) const
{
    if (!mean_path.empty())
        return start * mean_path[std::min(static_cast<std::size_t>(t), mean_path.size() - 1)];
    return start * std::pow(1.0 + growth, t);
}

void DroughtSpec::validate() const
{
    for (double p : {onset_summer, onset_other, recovery})
        if (!(p >= 0.0 && p <= 1.0))
            throw ConfigError("drought transition probabilities must lie in [0, 1]");
}

std::vector<std::string> required_drivers()
{
    return {"inflation",         "electricity_price", "grid_emission_factor", "pv_unit_cost", "max_temperature",
            "investor_demand",   "national_budget",   "household_demand",     "business_demand", "population",
            "income_index",      "tariff_fixed",      "tariff_volumetric"};
}

double ScenarioTrace::value(const std::string& driver, const std::string& scope, int year) const
{
    auto d = series.find(driver);
    if (d == series.end())
        throw InputError("trace has no driver '" + driver + "'");
    auto s = d->second.find(scope);
    if (s == d->second.end())
        s = d->second.find(std::string(kNational));
    if (s == d->second.end())
        throw InputError("trace driver '" + driver + "' has no series for '" + scope + "'");
    const int t = year - start_year;
    if (t < 0 || t >= static_cast<int>(s->second.size()))
        throw InputError("trace driver '" + driver + "' does not cover year " + std::to_string(year));
    return s->second[static_cast<std::size_t>(t)];
}

bool ScenarioTrace::available(const std::string& source, int year, int day_of_year) const
{
    auto it = availability.find(source);
    if (it == availability.end())
        return true;
    const long idx = static_cast<long>(year - start_year) * kDaysPerYear + day_of_year;
    if (idx < 0 || idx >= static_cast<long>(it->second.size()))
        throw InputError("availability series of '" + source + "' does not cover year " + std::to_string(year));
    return it->second[static_cast<std::size_t>(idx)] != 0;
}

double ScenarioTrace::realized(std::string_view parameter, std::string_view entity, std::int64_t index) const
{
    return keyed_uniform(seed, parameter, entity, index);
}

void validate_request(const TraceRequest& request)
{
    if (request.years < 1)
        throw ConfigError("trace horizon must be at least one year");
    std::vector<std::string> missing;
    for (const auto& name : required_drivers()) {
        bool found = std::any_of(request.drivers.begin(), request.drivers.end(),
                                 [&](const DriverSpec& d) { return d.name == name; });
        if (!found)
            missing.push_back(name);
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing)
            list += (list.empty() ? "" : ", ") + m;
        throw ConfigError("scenario is missing required drivers: " + list);
    }
    std::set<std::string> seen;
    for (const auto& d : request.drivers) {
        d.validate();
        if (!seen.insert(d.name).second)
            throw ConfigError("driver '" + d.name + "' is specified twice");
    }
    request.drought.validate();
}

ScenarioTrace generate_trace(const TraceRequest& request)
{
    validate_request(request);
    ScenarioTrace trace;
    trace.seed = request.seed;
    trace.start_year = request.start_year;
    trace.years = request.years;
    for (const auto& spec : request.drivers) {
        std::vector<std::pair<std::string, double>> entities;
        if (auto it = request.bases.find(spec.name); it != request.bases.end())
            entities = it->second;
        else if (spec.scope == Scope::National)
            entities = {{std::string(kNational), 1.0}};
        else if (auto sc = request.scopes.find(spec.scope); sc != request.scopes.end())
            entities = sc->second;
        auto& per_scope = trace.series[spec.name];
        for (const auto& [id, base] : entities)
            per_scope[id] = generate_path(spec, base, derive_seed(request.seed, spec.name, id), request.years);
    }
    for (const auto& id : request.surface_sources)
        trace.availability[id] =
            generate_availability(request.drought, derive_seed(request.seed, "surface_availability", id), request.years);
    return trace;
}

void write_trace(std::ostream& out, const ScenarioTrace& trace)
{
    out << "# bwf-trace format_version=1 seed=" << trace.seed << " start_year=" << trace.start_year
        << " years=" << trace.years << '\n';
    for (const auto& [driver, scopes] : trace.series)
        for (const auto& [scope, values] : scopes)
            for (std::size_t t = 0; t < values.size(); ++t)
                out << "series\t" << driver << '\t' << scope << '\t' << trace.start_year + static_cast<int>(t) << '\t'
                    << fmt(values[t]) << '\n';
    for (const auto& [source, days] : trace.availability) {
        for (int y = 0; y < trace.years; ++y) {
            out << "availability\t" << source << '\t' << trace.start_year + y << '\t';
            for (int d = 0; d < kDaysPerYear; ++d)
                out << (days[static_cast<std::size_t>(y * kDaysPerYear + d)] ? '1' : '0');
            out << '\n';
        }
    }
}

ScenarioTrace read_trace(std::istream& in)
{
    ScenarioTrace trace;
    std::string line;
    if (!std::getline(in, line))
        throw InputError("trace file is empty");
    {
        std::istringstream hs(line);
        std::string hash, tag, kv;
        hs >> hash >> tag;
        if (hash != "#" || tag != "bwf-trace")
            throw InputError("trace line 1: missing 'bwf-trace' header");
        bool have_version = false;
        while (hs >> kv) {
            auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw InputError("trace line 1: bad header field '" + kv + "'");
            std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
            try {
                if (k == "format_version") {
                    if (v != "1")
                        throw InputError("trace line 1: unsupported format_version " + v);
                    have_version = true;
                } else if (k == "seed") {
                    trace.seed = std::stoull(v);
                } else if (k == "start_year") {
                    trace.start_year = std::stoi(v);
                } else if (k == "years") {
                    trace.years = std::stoi(v);
                } else {
                    throw InputError("trace line 1: unknown header field '" + k + "'");
                }
            } catch (const std::logic_error&) {
                throw InputError("trace line 1: bad value for '" + k + "'");
            }
        }
        if (!have_version)
            throw InputError("trace line 1: format_version missing");
    }
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, '\t');)
            f.push_back(cell);
        const std::string where = "trace line " + std::to_string(lineno) + ": ";
        try {
            if (f.size() == 5 && f[0] == "series") {
                const int t = std::stoi(f[3]) - trace.start_year;
                if (t < 0 || t >= trace.years)
                    throw InputError(where + "year outside the header horizon");
                auto& v = trace.series[f[1]][f[2]];
                v.resize(static_cast<std::size_t>(trace.years), std::nan(""));
                v[static_cast<std::size_t>(t)] = std::stod(f[4]);
            } else if (f.size() == 4 && f[0] == "availability") {
                const int t = std::stoi(f[2]) - trace.start_year;
                if (t < 0 || t >= trace.years || f[3].size() != static_cast<std::size_t>(kDaysPerYear))
                    throw InputError(where + "availability row out of range or not 365 days");
                auto& v = trace.availability[f[1]];
                v.resize(static_cast<std::size_t>(trace.years) * kDaysPerYear, 1);
                for (int d = 0; d < kDaysPerYear; ++d) {
                    char c = f[3][static_cast<std::size_t>(d)];
                    if (c != '0' && c != '1')
                        throw InputError(where + "availability must be 0/1");
                    v[static_cast<std::size_t>(t * kDaysPerYear + d)] = c == '1';
                }
            } else {
                throw InputError(where + "unrecognised row");
            }
        } catch (const std::logic_error&) {
            throw InputError(where + "bad number");
        }
    }
    for (const auto& [driver, scopes] : trace.series)
        for (const auto& [scope, values] : scopes)
            for (double v : values)
                if (std::isnan(v))
                    throw InputError("trace series " + driver + "/" + scope + " has gaps");
    return trace;
}

bool observable(std::string_view quantity)
{
    static const std::set<std::string, std::less<>> allowed{
        "electricity_price", "pv_unit_cost", "inflation", "tariff_fixed", "tariff_volumetric",
        "consumption",       "undelivered",  "fines"};
    return allowed.count(quantity) != 0;
}

History reveal_history(const ScenarioTrace& trace, const Observations& run, int first_year, int up_to_year)
{
    History h;
    h.first_year = first_year;
    h.up_to_year = up_to_year;
    for (const auto& [driver, scopes] : trace.series) {
        if (!observable(driver))
            continue;
        for (const auto& [scope, values] : scopes)
            for (int y = std::max(first_year, trace.start_year); y < up_to_year; ++y)
                if (y - trace.start_year < static_cast<int>(values.size()))
                    h.values[driver][scope][y] = values[static_cast<std::size_t>(y - trace.start_year)];
    }
    for (const auto& [quantity, scopes] : run.values) {
        if (!observable(quantity))
            continue;
        for (const auto& [scope, by_year] : scopes)
            for (const auto& [y, v] : by_year)
                if (y >= first_year && y < up_to_year)
                    h.values[quantity][scope][y] = v;
    }
    return h;
}

}  // namespace bwf::scenario
