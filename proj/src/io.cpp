#include "bwf/io.hpp"

#include "bwf/error.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace bwf::io {

using domain::Instance;
using engine::Intervention;
using engine::InterventionType;
using engine::Masterplan;

namespace {

struct PointerError {
    std::string pointer;
    std::string message;
};

[[noreturn]] void fail(const std::string& pointer, const std::string& message)
{
    throw PointerError{pointer, message};
}

std::string escape_token(std::string_view key)
{
    std::string out;
    for (char c : key) {
        if (c == '~')
            out += "~0";
        else if (c == '/')
            out += "~1";
        else
            out += c;
    }
    return out;
}

double as_number(const Json& j, const std::string& ptr)
{
    if (!j.is_number())
        fail(ptr, "expected a number");
    return j.get<double>();
}

int as_int(const Json& j, const std::string& ptr)
{
    if (!j.is_number_integer())
        fail(ptr, "expected an integer");
    return j.get<int>();
}

std::string as_string(const Json& j, const std::string& ptr)
{
    if (!j.is_string())
        fail(ptr, "expected a string");
    return j.get<std::string>();
}

Date as_date(const Json& j, const std::string& ptr)
{
    const std::string s = as_string(j, ptr);
    try {
        Date d = Date::parse(s);
        if (!d.valid())
            fail(ptr, "invalid date '" + s + "'");
        return d;
    } catch (const Error& e) {
        fail(ptr, e.what());
    }
}

template <class F>
auto guarded(const std::string& ptr, F&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const Error& e) {
        fail(ptr, e.what());
    }
}

const Json& as_array(const Json& j, const std::string& ptr)
{
    if (!j.is_array())
        fail(ptr, "expected an array");
    return j;
}

std::vector<double> as_numbers(const Json& j, const std::string& ptr)
{
    std::vector<double> out;
    for (std::size_t i = 0; i < as_array(j, ptr).size(); ++i)
        out.push_back(as_number(j[i], ptr + "/" + std::to_string(i)));
    return out;
}

template <std::size_t N>
std::array<double, N> as_fixed(const Json& j, const std::string& ptr)
{
    auto v = as_numbers(j, ptr);
    if (v.size() != N)
        fail(ptr, "expected " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

// Object reader that remembers which keys were consumed.
class Obj {
public:
    Obj(const Json& j, std::string ptr) : j_(j), ptr_(std::move(ptr))
    {
        if (!j_.is_object())
            fail(ptr_, "expected an object");
    }

    std::string at(std::string_view key) const { return ptr_ + "/" + escape_token(key); }
    const std::string& ptr() const { return ptr_; }

    const Json* find(const std::string& key)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() || it->is_null() ? nullptr : &*it;
    }

    const Json& need(const std::string& key)
    {
        const Json* v = find(key);
        if (!v)
            fail(at(key), "missing required field '" + key + "'");
        return *v;
    }

    double num(const std::string& key) { return as_number(need(key), at(key)); }
    double num(const std::string& key, double def)
    {
        const Json* v = find(key);
        return v ? as_number(*v, at(key)) : def;
    }
    std::optional<double> opt_num(const std::string& key)
    {
        const Json* v = find(key);
        return v ? std::optional<double>(as_number(*v, at(key))) : std::nullopt;
    }
    int integer(const std::string& key) { return as_int(need(key), at(key)); }
    int integer(const std::string& key, int def)
    {
        const Json* v = find(key);
        return v ? as_int(*v, at(key)) : def;
    }
    std::string str(const std::string& key) { return as_string(need(key), at(key)); }
    std::string str(const std::string& key, const std::string& def)
    {
        const Json* v = find(key);
        return v ? as_string(*v, at(key)) : def;
    }
    Date date(const std::string& key) { return as_date(need(key), at(key)); }
    std::optional<Date> opt_date(const std::string& key)
    {
        const Json* v = find(key);
        return v ? std::optional<Date>(as_date(*v, at(key))) : std::nullopt;
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                fail(at(it.key()), "unknown field '" + it.key() + "'");
    }

private:
    const Json& j_;
    std::string ptr_;
    std::set<std::string> seen_;
};

template <class F>
void each(Obj& parent, const std::string& key, F&& fn, bool required = false)
{
    const Json* arr = required ? &parent.need(key) : parent.find(key);
    if (!arr)
        return;
    const std::string base = parent.at(key);
    as_array(*arr, base);
    for (std::size_t i = 0; i < arr->size(); ++i)
        fn((*arr)[i], base + "/" + std::to_string(i));
}

constexpr std::array<std::string_view, 3> kSizeNames{"small", "medium", "large"};

// ---- instance -------------------------------------------------------------

domain::Municipality read_municipality(const Json& j, const std::string& ptr)
{
    Obj o(j, ptr);
    domain::Municipality m;
    m.id = o.str("id");
    m.name = o.str("name", m.id);
    m.latitude = o.num("lat");
    m.longitude = o.num("lon");
    m.elevation = o.num("elevation");
    m.province = o.str("province");
    m.begin_date = o.date("begin_date");
    m.end_date = o.opt_date("end_date");
    if (const Json* e = o.find("end_disposition")) {
        Obj d(*e, o.at("end_disposition"));
        const std::string kind = d.str("kind");
        if (kind != "absorbed" && kind != "clustered")
            fail(d.at("kind"), "expected 'absorbed' or 'clustered'");
        m.end = domain::EndDisposition{kind == "absorbed" ? domain::Disposition::Absorbed : domain::Disposition::Clustered,
                                       d.str("target")};
        d.finish();
    }
    m.population = o.num("population");
    m.surface_land = o.num("surface_land", 0.0);
    m.surface_water_inland = o.num("surface_water_inland", 0.0);
    m.surface_water_open = o.num("surface_water_open", 0.0);
    m.houses = o.num("houses");
    m.businesses = o.num("businesses");
    m.dist_net_length = o.num("dist_net_length");
    m.dist_net_avg_age = o.num("dist_net_avg_age");
    m.income_index = o.num("income_index", 1.0);
    o.finish();
    return m;
}

assets::SourceType read_source_type(Obj& o, const std::string& key)
{
    const std::string t = o.str(key);
    return guarded(o.at(key), [&] { return assets::parse_source_type(t); });
}

domain::WaterSource read_source(const Json& j, const std::string& ptr)
{
    Obj o(j, ptr);
    domain::WaterSource s;
    s.id = o.str("id");
    s.type = read_source_type(o, "type");
    s.latitude = o.num("lat");
    s.longitude = o.num("lon");
    s.elevation = o.num("elevation");
    s.province = o.str("province");
    s.connected_municipality = o.str("connected_municipality");
    s.activation_date = o.date("activation_date");
    s.closure_date = o.opt_date("closure_date");
    s.nominal_capacity = o.num("nominal_capacity");
    s.target_factor = o.num("target_factor", 0.8);
    s.permit = o.opt_num("permit");
    s.max_capacity = o.opt_num("max_capacity");
    Obj st(o.need("station"), o.at("station"));
    s.station.id = st.str("id");
    s.station.pump_option = st.str("pump_option");
    s.station.pump_count = st.integer("pump_count");
    if (const Json* years = st.find("pump_install_years")) {
        for (std::size_t i = 0; i < as_array(*years, st.at("pump_install_years")).size(); ++i)
            s.station.pump_install_years.push_back(as_int((*years)[i], st.at("pump_install_years") + "/" + std::to_string(i)));
    }
    each(st, "pv", [&](const Json& pj, const std::string& pp) {
        Obj p(pj, pp);
        s.station.pv.push_back({p.date("install_date"), p.num("capacity_kw")});
        p.finish();
    });
    st.finish();
    o.finish();
    return s;
}

domain::Site read_site(const Json& j, const std::string& ptr)
{
    Obj o(j, ptr);
    domain::Site s;
    s.id = o.str("id");
    s.type = read_source_type(o, "type");
    s.latitude = o.num("lat");
    s.longitude = o.num("lon");
    s.elevation = o.num("elevation");
    s.province = o.str("province");
    s.connected_municipality = o.str("connected_municipality");
    s.permit = o.opt_num("permit");
    s.max_capacity = o.opt_num("max_capacity");
    s.construction_min_years = o.integer("construction_min_years", 1);
    s.construction_max_years = o.integer("construction_max_years", 3);
    o.finish();
    return s;
}

domain::Connection read_connection(const Json& j, const std::string& ptr)
{
    Obj o(j, ptr);
    domain::Connection c;
    c.id = o.str("id");
    c.node_a = o.str("node_a");
    c.node_b = o.str("node_b");
    c.distance = o.num("distance");
    if (const Json* p = o.find("pipe")) {
        Obj po(*p, o.at("pipe"));
        c.pipe = domain::InstalledPipe{po.str("option"), po.date("install_date")};
        po.finish();
    }
    o.finish();
    return c;
}

TabulatedCurve read_curve(const Json& j, const std::string& ptr, const std::string& name)
{
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < as_array(j, ptr).size(); ++i) {
        const std::string pp = ptr + "/" + std::to_string(i);
        auto xy = as_numbers(j[i], pp);
        if (xy.size() != 2)
            fail(pp, "expected a [flow, value] pair");
        pts.emplace_back(xy[0], xy[1]);
    }
    return guarded(ptr, [&] { return TabulatedCurve(std::move(pts), name); });
}

void read_catalogs(const Json& j, const std::string& ptr, domain::Catalogs& c)
{
    Obj o(j, ptr);
    each(o, "pumps", [&](const Json& pj, const std::string& pp) {
        Obj p(pj, pp);
        assets::PumpOption opt;
        opt.id = p.str("id");
        auto curves = std::make_shared<hydraulics::PumpCharacteristic>();
        curves->option_id = opt.id;
        curves->head = read_curve(p.need("head"), p.at("head"), opt.id + " head");
        curves->efficiency = read_curve(p.need("efficiency"), p.at("efficiency"), opt.id + " efficiency");
        opt.curves = curves;
        opt.lifetime_min = p.integer("lifetime_min", 10);
        opt.lifetime_max = p.integer("lifetime_max", 20);
        opt.unit_cost = p.num("unit_cost");
        opt.embedded_emissions = p.num("embedded_emissions", 0.0);
        p.finish();
        if (!c.pumps.emplace(opt.id, opt).second)
            fail(pp + "/id", "duplicate pump option '" + opt.id + "'");
    }, true);
    each(o, "pipes", [&](const Json& pj, const std::string& pp) {
        Obj p(pj, pp);
        assets::PipeOption opt;
        opt.id = p.str("id");
        opt.diameter = p.num("diameter");
        opt.material = p.str("material", "");
        opt.friction_new = p.num("friction_new");
        opt.decay_min = p.num("decay_min", 0.0);
        opt.decay_max = p.num("decay_max", 0.0);
        opt.cost_per_m = p.num("cost_per_m");
        opt.emissions_per_m = p.num("emissions_per_m", 0.0);
        opt.lifetime_years = p.num("lifetime_years", 50.0);
        p.finish();
        if (!c.pipes.emplace(opt.id, opt).second)
            fail(pp + "/id", "duplicate pipe option '" + opt.id + "'");
    }, true);
    std::set<std::pair<int, int>> seen;
    each(o, "source_costs", [&](const Json& ej, const std::string& ep) {
        Obj e(ej, ep);
        const auto type = static_cast<int>(read_source_type(e, "type"));
        const std::string size = e.str("size");
        auto it = std::find(kSizeNames.begin(), kSizeNames.end(), size);
        if (it == kSizeNames.end())
            fail(e.at("size"), "expected small, medium or large");
        const auto s = static_cast<int>(it - kSizeNames.begin());
        if (!seen.insert({type, s}).second)
            fail(ep, "duplicate source cost entry");
        auto& x = c.source_costs.entries[static_cast<std::size_t>(type)][static_cast<std::size_t>(s)];
        x.fixed_per_year = e.num("fixed_per_year");
        x.energy_intensity = e.num("energy_intensity");
        x.non_energy = e.num("non_energy");
        x.over_target_multiplier = e.num("over_target_multiplier", 1.0);
        x.construction_unit_cost = e.num("construction_unit_cost");
        x.lifetime_years = e.num("lifetime_years", 40.0);
        x.embedded_emissions = e.num("embedded_emissions", 0.0);
        e.finish();
    }, true);
    if (seen.size() != assets::kSourceTypeCount * assets::kSourceSizeCount)
        fail(o.at("source_costs"), "every source type needs small, medium and large entries");
    o.finish();
}

template <std::size_t R, std::size_t C>
std::array<std::array<double, C>, R> read_matrix(const Json& j, const std::string& ptr)
{
    std::array<std::array<double, C>, R> out{};
    if (as_array(j, ptr).size() != R)
        fail(ptr, "expected " + std::to_string(R) + " rows");
    for (std::size_t r = 0; r < R; ++r)
        out[r] = as_fixed<C>(j[r], ptr + "/" + std::to_string(r));
    return out;
}

scenario::DriverSpec read_driver(const Json& j, const std::string& ptr)
{
    Obj o(j, ptr);
    scenario::DriverSpec d;
    d.name = o.str("name");
    const std::string scope = o.str("scope", "national");
    d.scope = guarded(o.at("scope"), [&] { return scenario::parse_scope(scope); });
    const std::string kind = o.str("kind");
    d.kind = guarded(o.at("kind"), [&] { return scenario::parse_driver_kind(kind); });
    d.start = o.num("start", 1.0);
    d.growth = o.num("growth", 0.0);
    if (const Json* p = o.find("mean_path"))
        d.mean_path = as_numbers(*p, o.at("mean_path"));
    d.lower = o.num("lower", 0.0);
    d.upper = o.num("upper", 0.0);
    d.volatility = o.num("volatility", 0.0);
    d.reversion = o.num("reversion", 0.5);
    d.phi = o.num("phi", 0.7);
    o.finish();
    return d;
}

}  // namespace

Instance instance_from_json(const Json& doc)
{
    try {
        Obj o(doc, "");
        Instance in;
        in.format_version = o.integer("format_version");
        if (in.format_version != 1)
            fail(o.at("format_version"), "unsupported format version " + std::to_string(in.format_version));
        in.name = o.str("name");
        in.start_year = o.integer("start_year");
        each(o, "utilities", [&](const Json& j, const std::string& p) {
            Obj u(j, p);
            in.utilities.push_back({u.str("id"), u.str("province")});
            u.finish();
        }, true);
        each(o, "municipalities", [&](const Json& j, const std::string& p) { in.municipalities.push_back(read_municipality(j, p)); }, true);
        each(o, "sources", [&](const Json& j, const std::string& p) { in.sources.push_back(read_source(j, p)); }, true);
        each(o, "sites", [&](const Json& j, const std::string& p) { in.sites.push_back(read_site(j, p)); });
        each(o, "connections", [&](const Json& j, const std::string& p) { in.connections.push_back(read_connection(j, p)); }, true);
        read_catalogs(o.need("catalogs"), o.at("catalogs"), in.catalogs);

        if (const Json* e = o.find("economy")) {
            Obj x(*e, o.at("economy"));
            auto& p = in.economy;
            p.risk_free = x.num("risk_free", p.risk_free);
            p.credit_spread = x.num("credit_spread", p.credit_spread);
            p.demand_sensitivity = x.num("demand_sensitivity", p.demand_sensitivity);
            p.bond_maturity_years = x.integer("bond_maturity_years", p.bond_maturity_years);
            p.base_monthly_income = x.num("base_monthly_income", p.base_monthly_income);
            p.lifeline_per_person = x.num("lifeline_per_person", p.lifeline_per_person);
            const std::string rule = x.str("budget_rule", std::string(economy::budget_rule_name(p.budget_rule)));
            p.budget_rule = guarded(x.at("budget_rule"), [&] { return economy::parse_budget_rule(rule); });
            x.finish();
        }
        if (const Json* e = o.find("nrw")) {
            Obj x(*e, o.at("nrw"));
            auto& t = in.nrw.table;
            if (const Json* v = x.find("age_breakpoints"))
                t.age_breakpoints = as_fixed<4>(*v, x.at("age_breakpoints"));
            if (const Json* v = x.find("rate_lower"))
                t.rate_lower = as_fixed<5>(*v, x.at("rate_lower"));
            if (const Json* v = x.find("rate_upper"))
                t.rate_upper = as_fixed<5>(*v, x.at("rate_upper"));
            t.oldest_age = x.num("oldest_age", t.oldest_age);
            in.nrw.costs.unit_cost = read_matrix<nrw::kClassCount, nrw::kSizeClassCount>(x.need("unit_cost"), x.at("unit_cost"));
            in.nrw.costs.effectiveness =
                read_matrix<nrw::kClassCount, nrw::kSizeClassCount>(x.need("effectiveness"), x.at("effectiveness"));
            const std::string policy = x.str("default_policy", std::string(nrw::policy_name(in.nrw.default_policy)));
            in.nrw.default_policy = guarded(x.at("default_policy"), [&] { return nrw::parse_policy(policy); });
            x.finish();
        }
        if (const Json* e = o.find("demand")) {
            Obj x(*e, o.at("demand"));
            auto& d = in.demand;
            if (const Json* s = x.find("seasonal")) {
                Obj y(*s, x.at("seasonal"));
                auto& p = d.seasonal;
                if (const Json* v = y.find("cos_coeff"))
                    p.cos_coeff = as_numbers(*v, y.at("cos_coeff"));
                if (const Json* v = y.find("sin_coeff"))
                    p.sin_coeff = as_numbers(*v, y.at("sin_coeff"));
                p.peak_day = y.integer("peak_day", p.peak_day);
                p.climate_coeff = y.num("climate_coeff", p.climate_coeff);
                p.reference_temperature = y.num("reference_temperature", p.reference_temperature);
                p.noise_sigma = y.num("noise_sigma", p.noise_sigma);
                p.noise_phi = y.num("noise_phi", p.noise_phi);
                y.finish();
            }
            d.perturbation_sigma = x.num("perturbation_sigma", d.perturbation_sigma);
            d.national_target_per_capita = x.opt_num("national_target_per_capita");
            x.finish();
        }
        each(o, "household_classes", [&](const Json& j, const std::string& p) {
            Obj h(j, p);
            in.household_classes.push_back({h.str("id"), h.num("share"), h.num("income_factor", 1.0), h.num("household_size", 2.2)});
            h.finish();
        }, true);
        if (const Json* e = o.find("energy")) {
            Obj x(*e, o.at("energy"));
            if (const Json* v = x.find("price_shape"))
                in.energy.price_shape.factor = as_fixed<24>(*v, x.at("price_shape"));
            in.energy.pv_peak_factor = x.num("pv_peak_factor", in.energy.pv_peak_factor);
            in.energy.pv_embedded_per_kw = x.num("pv_embedded_per_kw", in.energy.pv_embedded_per_kw);
            x.finish();
        }
        each(o, "drivers", [&](const Json& j, const std::string& p) { in.drivers.push_back(read_driver(j, p)); }, true);
        if (const Json* e = o.find("drought")) {
            Obj x(*e, o.at("drought"));
            in.drought.onset_summer = x.num("onset_summer", in.drought.onset_summer);
            in.drought.onset_other = x.num("onset_other", in.drought.onset_other);
            in.drought.recovery = x.num("recovery", in.drought.recovery);
            x.finish();
        }
        if (const Json* e = o.find("solver")) {
            Obj x(*e, o.at("solver"));
            auto& s = in.solver;
            s.required_pressure = x.num("required_pressure", s.required_pressure);
            s.minimum_pressure = x.num("minimum_pressure", s.minimum_pressure);
            s.pressure_exponent = x.num("pressure_exponent", s.pressure_exponent);
            s.head_tolerance = x.num("head_tolerance", s.head_tolerance);
            s.mass_tolerance = x.num("mass_tolerance", s.mass_tolerance);
            s.max_iterations = x.integer("max_iterations", s.max_iterations);
            s.min_gradient = x.num("min_gradient", s.min_gradient);
            s.max_step = x.num("max_step", s.max_step);
            x.finish();
        }
        each(o, "permit_fines", [&](const Json& j, const std::string& p) {
            Obj b(j, p);
            in.permit_fines.bands.push_back({b.num("max_ratio", 0.0), b.num("rate")});
            b.finish();
        }, true);
        const std::string law = o.str("decay_law", "linear");
        in.decay_law = guarded(o.at("decay_law"), [&] { return assets::parse_decay_law(law); });
        in.failure_budget = o.integer("failure_budget", in.failure_budget);
        o.finish();
        return in;
    } catch (const PointerError& e) {
        throw ValidationError((e.pointer.empty() ? "/" : e.pointer) + ": " + e.message);
    }
}

Masterplan plan_from_json(const Json& doc)
{
    try {
        Obj o(doc, "");
        Masterplan plan;
        plan.format_version = o.integer("format_version");
        if (plan.format_version != 1)
            fail(o.at("format_version"), "unsupported format version " + std::to_string(plan.format_version));
        if (const Json* u = o.find("utilities"))
            for (std::size_t i = 0; i < as_array(*u, o.at("utilities")).size(); ++i)
                plan.utilities.push_back(as_string((*u)[i], o.at("utilities") + "/" + std::to_string(i)));
        plan.horizon_years = o.integer("horizon_years", plan.horizon_years);
        each(o, "interventions", [&](const Json& j, const std::string& p) {
            Obj x(j, p);
            Intervention iv;
            const std::string type = x.str("type");
            iv.type = guarded(x.at("type"), [&] { return engine::parse_intervention_type(type); });
            iv.date = x.date("date");
            iv.target = iv.type == InterventionType::BudgetRule ? x.str("target", "") : x.str("target");
            switch (iv.type) {
            case InterventionType::OpenSource:
                if (x.find("source_type"))
                    iv.source_type = read_source_type(x, "source_type");
                iv.nominal_capacity = x.num("nominal_capacity");
                iv.target_factor = x.num("target_factor", iv.target_factor);
                iv.option = x.str("pump_option");
                iv.count = x.integer("pump_count");
                break;
            case InterventionType::CloseSource:
                break;
            case InterventionType::InstallPipe:
            case InterventionType::ReplacePipe:
                iv.option = x.str("pipe_option");
                break;
            case InterventionType::SetPumps:
                iv.option = x.str("pump_option");
                iv.count = x.integer("pump_count");
                break;
            case InterventionType::InstallPv:
                iv.capacity_kw = x.num("capacity_kw");
                break;
            case InterventionType::NrwBudget: {
                iv.share = x.num("share");
                const std::string policy = x.str("policy", "by_leak_class");
                iv.policy = guarded(x.at("policy"), [&] { return nrw::parse_policy(policy); });
                break;
            }
            case InterventionType::BudgetRule: {
                const std::string rule = x.str("rule");
                iv.rule = guarded(x.at("rule"), [&] { return economy::parse_budget_rule(rule); });
                if (const Json* w = x.find("weights"))
                    iv.weights = as_numbers(*w, x.at("weights"));
                break;
            }
            }
            x.finish();
            plan.interventions.push_back(std::move(iv));
        }, true);
        o.finish();
        return plan;
    } catch (const PointerError& e) {
        throw ValidationError((e.pointer.empty() ? "/" : e.pointer) + ": " + e.message);
    }
}

// ---- line scanner ---------------------------------------------------------

namespace {

class Scanner {
public:
    explicit Scanner(std::string_view s) : s_(s) {}

    int line() const { return line_; }

    void ws()
    {
        while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\n' || s_[i_] == '\r')) {
            if (s_[i_] == '\n')
                ++line_;
            ++i_;
        }
    }

    bool peek(char c)
    {
        ws();
        return i_ < s_.size() && s_[i_] == c;
    }

    std::string string()
    {
        ws();
        std::string out;
        if (i_ >= s_.size() || s_[i_] != '"')
            return out;
        ++i_;
        while (i_ < s_.size() && s_[i_] != '"') {
            if (s_[i_] == '\\' && i_ + 1 < s_.size()) {
                out += s_[i_ + 1];
                i_ += 2;
                continue;
            }
            out += s_[i_++];
        }
        ++i_;
        return out;
    }

    void skip()
    {
        ws();
        if (i_ >= s_.size())
            return;
        const char c = s_[i_];
        if (c == '"') {
            string();
        } else if (c == '{' || c == '[') {
            const char close = c == '{' ? '}' : ']';
            ++i_;
            if (peek(close)) {
                ++i_;
                return;
            }
            while (i_ < s_.size()) {
                if (c == '{') {
                    string();
                    ws();
                    ++i_;  // ':'
                }
                skip();
                ws();
                if (i_ < s_.size() && s_[i_] == ',') {
                    ++i_;
                    continue;
                }
                ++i_;  // close
                return;
            }
        } else {
            while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != '}' && s_[i_] != ']' && s_[i_] != ' ' &&
                   s_[i_] != '\n' && s_[i_] != '\r' && s_[i_] != '\t')
                ++i_;
        }
    }

    // Positions at the member value named by token; returns false when absent.
    bool member(const std::string& token)
    {
        if (!peek('{'))
            return false;
        ++i_;
        if (peek('}'))
            return false;
        while (i_ < s_.size()) {
            const std::string key = string();
            ws();
            ++i_;  // ':'
            if (key == token) {
                ws();
                return true;
            }
            skip();
            ws();
            if (i_ < s_.size() && s_[i_] == ',') {
                ++i_;
                continue;
            }
            return false;
        }
        return false;
    }

    bool element(std::size_t index)
    {
        if (!peek('['))
            return false;
        ++i_;
        if (peek(']'))
            return false;
        for (std::size_t k = 0; k < index; ++k) {
            skip();
            ws();
            if (i_ >= s_.size() || s_[i_] != ',')
                return false;
            ++i_;
        }
        ws();
        return true;
    }

    bool at_array() { return peek('['); }

private:
    std::string_view s_;
    std::size_t i_ = 0;
    int line_ = 1;
};

std::vector<std::string> split_pointer(const std::string& pointer)
{
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < pointer.size()) {
        if (pointer[i] != '/')
            break;
        std::size_t j = pointer.find('/', i + 1);
        std::string tok = pointer.substr(i + 1, j == std::string::npos ? std::string::npos : j - i - 1);
        std::string un;
        for (std::size_t k = 0; k < tok.size(); ++k) {
            if (tok[k] == '~' && k + 1 < tok.size()) {
                un += tok[k + 1] == '1' ? '/' : '~';
                ++k;
            } else {
                un += tok[k];
            }
        }
        out.push_back(un);
        if (j == std::string::npos)
            break;
        i = j;
    }
    return out;
}

int line_of_byte(std::string_view text, std::size_t byte)
{
    int line = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i)
        if (text[i] == '\n')
            ++line;
    return line;
}

// "municipalities/M01/station" -> "/municipalities/3/station"
std::string entity_pointer(const Json& doc, const std::string& path)
{
    auto slash = path.find('/');
    const std::string head = path.substr(0, slash);
    if (slash == std::string::npos || !doc.contains(head) || !doc[head].is_array())
        return "/" + head;
    auto rest = path.substr(slash + 1);
    auto next = rest.find('/');
    const std::string id = rest.substr(0, next);
    const auto& arr = doc[head];
    for (std::size_t i = 0; i < arr.size(); ++i)
        if (arr[i].is_object() && arr[i].value("id", std::string()) == id)
            return "/" + head + "/" + std::to_string(i) + (next == std::string::npos ? "" : rest.substr(next));
    return "/" + head;
}

Json parse_text(std::string_view text, const std::string& origin)
{
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        throw ValidationError(origin + ":" + std::to_string(line_of_byte(text, e.byte)) + ": malformed document: " +
                              e.what());
    }
}

std::string with_line(std::string_view text, const std::string& origin, const std::string& message)
{
    // messages start with "<pointer>: "
    const auto colon = message.find(": ");
    const std::string pointer = message.substr(0, colon);
    auto line = locate(text, pointer == "/" ? "" : pointer);
    if (!line) {
        // unknown or missing keys: fall back to the enclosing object
        auto cut = pointer.rfind('/');
        if (cut != std::string::npos)
            line = locate(text, pointer.substr(0, cut));
    }
    return origin + ":" + std::to_string(line.value_or(1)) + ": " + message;
}

}  // namespace

std::optional<int> locate(std::string_view text, const std::string& pointer)
{
    Scanner sc(text);
    for (const auto& tok : split_pointer(pointer)) {
        if (sc.at_array()) {
            if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
                return std::nullopt;
            if (!sc.element(std::stoul(tok)))
                return std::nullopt;
        } else if (!sc.member(tok)) {
            return std::nullopt;
        }
    }
    sc.ws();
    return sc.line();
}

Instance parse_instance(std::string_view text, const std::string& origin)
{
    const Json doc = parse_text(text, origin);
    Instance in;
    try {
        in = instance_from_json(doc);
    } catch (const ValidationError& e) {
        throw ValidationError(with_line(text, origin, e.what()));
    }
    const auto problems = in.check();
    if (!problems.empty()) {
        std::string msg;
        for (const auto& p : problems) {
            const auto colon = p.find(": ");
            const std::string ptr = entity_pointer(doc, p.substr(0, colon));
            msg += (msg.empty() ? "" : "\n") + with_line(text, origin, ptr + ": " + p.substr(colon + 2));
        }
        throw ValidationError(msg);
    }
    return in;
}

Masterplan parse_plan(std::string_view text, const std::string& origin)
{
    const Json doc = parse_text(text, origin);
    try {
        return plan_from_json(doc);
    } catch (const ValidationError& e) {
        throw ValidationError(with_line(text, origin, e.what()));
    }
}

std::string read_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw InputError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view content)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw InputError("cannot write '" + path + "'");
    f << content;
    if (!f)
        throw InputError("write failed for '" + path + "'");
}

Instance load_instance(const std::string& path)
{
    return parse_instance(read_file(path), path);
}

Masterplan load_plan(const std::string& path)
{
    return parse_plan(read_file(path), path);
}

// ---- export ---------------------------------------------------------------

namespace {

Json curve_json(const TabulatedCurve& c)
{
    Json a = Json::array();
    for (const auto& [x, y] : c.points())
        a.push_back({x, y});
    return a;
}

}  // namespace

Json instance_to_json(const Instance& in)
{
    Json d;
    d["format_version"] = in.format_version;
    d["name"] = in.name;
    d["start_year"] = in.start_year;
    d["utilities"] = Json::array();
    for (const auto& u : in.utilities)
        d["utilities"].push_back({{"id", u.id}, {"province", u.province}});
    d["municipalities"] = Json::array();
    for (const auto& m : in.municipalities) {
        Json j{{"id", m.id},
               {"name", m.name},
               {"lat", m.latitude},
               {"lon", m.longitude},
               {"elevation", m.elevation},
               {"province", m.province},
               {"begin_date", m.begin_date.str()},
               {"population", m.population},
               {"surface_land", m.surface_land},
               {"surface_water_inland", m.surface_water_inland},
               {"surface_water_open", m.surface_water_open},
               {"houses", m.houses},
               {"businesses", m.businesses},
               {"dist_net_length", m.dist_net_length},
               {"dist_net_avg_age", m.dist_net_avg_age},
               {"income_index", m.income_index}};
        if (m.end_date)
            j["end_date"] = m.end_date->str();
        if (m.end)
            j["end_disposition"] = {{"kind", m.end->kind == domain::Disposition::Absorbed ? "absorbed" : "clustered"},
                                    {"target", m.end->target}};
        d["municipalities"].push_back(j);
    }
    d["sources"] = Json::array();
    for (const auto& s : in.sources) {
        Json st{{"id", s.station.id}, {"pump_option", s.station.pump_option}, {"pump_count", s.station.pump_count}};
        if (!s.station.pump_install_years.empty())
            st["pump_install_years"] = s.station.pump_install_years;
        st["pv"] = Json::array();
        for (const auto& pv : s.station.pv)
            st["pv"].push_back({{"install_date", pv.install_date.str()}, {"capacity_kw", pv.capacity_kw}});
        Json j{{"id", s.id},
               {"type", assets::source_type_name(s.type)},
               {"lat", s.latitude},
               {"lon", s.longitude},
               {"elevation", s.elevation},
               {"province", s.province},
               {"connected_municipality", s.connected_municipality},
               {"activation_date", s.activation_date.str()},
               {"nominal_capacity", s.nominal_capacity},
               {"target_factor", s.target_factor},
               {"station", st}};
        if (s.closure_date)
            j["closure_date"] = s.closure_date->str();
        if (s.permit)
            j["permit"] = *s.permit;
        if (s.max_capacity)
            j["max_capacity"] = *s.max_capacity;
        d["sources"].push_back(j);
    }
    d["sites"] = Json::array();
    for (const auto& s : in.sites) {
        Json j{{"id", s.id},
               {"type", assets::source_type_name(s.type)},
               {"lat", s.latitude},
               {"lon", s.longitude},
               {"elevation", s.elevation},
               {"province", s.province},
               {"connected_municipality", s.connected_municipality},
               {"construction_min_years", s.construction_min_years},
               {"construction_max_years", s.construction_max_years}};
        if (s.permit)
            j["permit"] = *s.permit;
        if (s.max_capacity)
            j["max_capacity"] = *s.max_capacity;
        d["sites"].push_back(j);
    }
    d["connections"] = Json::array();
    for (const auto& c : in.connections) {
        Json j{{"id", c.id}, {"node_a", c.node_a}, {"node_b", c.node_b}, {"distance", c.distance}};
        if (c.pipe)
            j["pipe"] = {{"option", c.pipe->option}, {"install_date", c.pipe->install_date.str()}};
        d["connections"].push_back(j);
    }
    Json cat;
    cat["pumps"] = Json::array();
    for (const auto& [id, p] : in.catalogs.pumps)
        cat["pumps"].push_back({{"id", id},
                                {"head", curve_json(p.curves->head)},
                                {"efficiency", curve_json(p.curves->efficiency)},
                                {"lifetime_min", p.lifetime_min},
                                {"lifetime_max", p.lifetime_max},
                                {"unit_cost", p.unit_cost},
                                {"embedded_emissions", p.embedded_emissions}});
    cat["pipes"] = Json::array();
    for (const auto& [id, p] : in.catalogs.pipes)
        cat["pipes"].push_back({{"id", id},
                                {"diameter", p.diameter},
                                {"material", p.material},
                                {"friction_new", p.friction_new},
                                {"decay_min", p.decay_min},
                                {"decay_max", p.decay_max},
                                {"cost_per_m", p.cost_per_m},
                                {"emissions_per_m", p.emissions_per_m},
                                {"lifetime_years", p.lifetime_years}});
    cat["source_costs"] = Json::array();
    for (int t = 0; t < assets::kSourceTypeCount; ++t)
        for (int s = 0; s < assets::kSourceSizeCount; ++s) {
            const auto& e = in.catalogs.source_costs.entries[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)];
            cat["source_costs"].push_back({{"type", assets::source_type_name(static_cast<assets::SourceType>(t))},
                                           {"size", kSizeNames[static_cast<std::size_t>(s)]},
                                           {"fixed_per_year", e.fixed_per_year},
                                           {"energy_intensity", e.energy_intensity},
                                           {"non_energy", e.non_energy},
                                           {"over_target_multiplier", e.over_target_multiplier},
                                           {"construction_unit_cost", e.construction_unit_cost},
                                           {"lifetime_years", e.lifetime_years},
                                           {"embedded_emissions", e.embedded_emissions}});
        }
    d["catalogs"] = cat;
    const auto& ec = in.economy;
    d["economy"] = {{"risk_free", ec.risk_free},
                    {"credit_spread", ec.credit_spread},
                    {"demand_sensitivity", ec.demand_sensitivity},
                    {"bond_maturity_years", ec.bond_maturity_years},
                    {"base_monthly_income", ec.base_monthly_income},
                    {"lifeline_per_person", ec.lifeline_per_person},
                    {"budget_rule", economy::budget_rule_name(ec.budget_rule)}};
    auto matrix = [](const auto& m) {
        Json a = Json::array();
        for (const auto& row : m)
            a.push_back(Json(std::vector<double>(row.begin(), row.end())));
        return a;
    };
    const auto& t = in.nrw.table;
    d["nrw"] = {{"age_breakpoints", std::vector<double>(t.age_breakpoints.begin(), t.age_breakpoints.end())},
                {"rate_lower", std::vector<double>(t.rate_lower.begin(), t.rate_lower.end())},
                {"rate_upper", std::vector<double>(t.rate_upper.begin(), t.rate_upper.end())},
                {"oldest_age", t.oldest_age},
                {"unit_cost", matrix(in.nrw.costs.unit_cost)},
                {"effectiveness", matrix(in.nrw.costs.effectiveness)},
                {"default_policy", nrw::policy_name(in.nrw.default_policy)}};
    const auto& se = in.demand.seasonal;
    d["demand"] = {{"seasonal",
                    {{"cos_coeff", se.cos_coeff},
                     {"sin_coeff", se.sin_coeff},
                     {"peak_day", se.peak_day},
                     {"climate_coeff", se.climate_coeff},
                     {"reference_temperature", se.reference_temperature},
                     {"noise_sigma", se.noise_sigma},
                     {"noise_phi", se.noise_phi}}},
                   {"perturbation_sigma", in.demand.perturbation_sigma}};
    if (in.demand.national_target_per_capita)
        d["demand"]["national_target_per_capita"] = *in.demand.national_target_per_capita;
    d["household_classes"] = Json::array();
    for (const auto& h : in.household_classes)
        d["household_classes"].push_back(
            {{"id", h.id}, {"share", h.share}, {"income_factor", h.income_factor}, {"household_size", h.household_size}});
    d["energy"] = {{"price_shape", std::vector<double>(in.energy.price_shape.factor.begin(), in.energy.price_shape.factor.end())},
                   {"pv_peak_factor", in.energy.pv_peak_factor},
                   {"pv_embedded_per_kw", in.energy.pv_embedded_per_kw}};
    d["drivers"] = Json::array();
    for (const auto& s : in.drivers) {
        Json j{{"name", s.name},
               {"scope", scenario::scope_name(s.scope)},
               {"kind", scenario::driver_kind_name(s.kind)},
               {"start", s.start},
               {"growth", s.growth},
               {"lower", s.lower},
               {"upper", s.upper},
               {"volatility", s.volatility},
               {"reversion", s.reversion},
               {"phi", s.phi}};
        if (!s.mean_path.empty())
            j["mean_path"] = s.mean_path;
        d["drivers"].push_back(j);
    }
    d["drought"] = {{"onset_summer", in.drought.onset_summer},
                    {"onset_other", in.drought.onset_other},
                    {"recovery", in.drought.recovery}};
    const auto& so = in.solver;
    d["solver"] = {{"required_pressure", so.required_pressure}, {"minimum_pressure", so.minimum_pressure},
                   {"pressure_exponent", so.pressure_exponent}, {"head_tolerance", so.head_tolerance},
                   {"mass_tolerance", so.mass_tolerance},       {"max_iterations", so.max_iterations},
                   {"min_gradient", so.min_gradient},           {"max_step", so.max_step}};
    d["permit_fines"] = Json::array();
    for (const auto& b : in.permit_fines.bands)
        d["permit_fines"].push_back({{"max_ratio", b.max_ratio}, {"rate", b.rate}});
    d["decay_law"] = assets::decay_law_name(in.decay_law);
    d["failure_budget"] = in.failure_budget;
    return d;
}

Json plan_to_json(const Masterplan& plan)
{
    Json d;
    d["format_version"] = plan.format_version;
    d["utilities"] = plan.utilities;
    d["horizon_years"] = plan.horizon_years;
    d["interventions"] = Json::array();
    for (const auto& iv : plan.interventions) {
        Json j{{"type", engine::intervention_type_name(iv.type)}, {"date", iv.date.str()}, {"target", iv.target}};
        switch (iv.type) {
        case InterventionType::OpenSource:
            if (iv.source_type)
                j["source_type"] = assets::source_type_name(*iv.source_type);
            j["nominal_capacity"] = iv.nominal_capacity;
            j["target_factor"] = iv.target_factor;
            j["pump_option"] = iv.option;
            j["pump_count"] = iv.count;
            break;
        case InterventionType::CloseSource:
            break;
        case InterventionType::InstallPipe:
        case InterventionType::ReplacePipe:
            j["pipe_option"] = iv.option;
            break;
        case InterventionType::SetPumps:
            j["pump_option"] = iv.option;
            j["pump_count"] = iv.count;
            break;
        case InterventionType::InstallPv:
            j["capacity_kw"] = iv.capacity_kw;
            break;
        case InterventionType::NrwBudget:
            j["share"] = iv.share;
            j["policy"] = nrw::policy_name(iv.policy);
            break;
        case InterventionType::BudgetRule:
            j["rule"] = economy::budget_rule_name(iv.rule);
            if (!iv.weights.empty())
                j["weights"] = iv.weights;
            break;
        }
        d["interventions"].push_back(j);
    }
    return d;
}

Json violations_to_json(const std::vector<engine::Violation>& violations)
{
    Json a = Json::array();
    for (const auto& v : violations)
        a.push_back({{"code", v.code}, {"index", v.index}, {"message", v.message}});
    return a;
}

std::string canonical(const Json& doc)
{
    return doc.dump(2) + "\n";
}

}  // namespace bwf::io
