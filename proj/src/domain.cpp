#include "bwf/domain.hpp"

#include "bwf/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace bwf::domain {

namespace {

template <class T>
const T* find_by_id(const std::vector<T>& v, const std::string& id)
{
    auto it = std::find_if(v.begin(), v.end(), [&](const T& x) { return x.id == id; });
    return it == v.end() ? nullptr : &*it;
}

template <class T>
T* find_by_data_id(std::vector<T>& v, const std::string& id)
{
    auto it = std::find_if(v.begin(), v.end(), [&](const T& x) { return x.data.id == id; });
    return it == v.end() ? nullptr : &*it;
}

void merge_additive(Municipality& dst, const Municipality& src)
{
    const double total_len = dst.dist_net_length + src.dist_net_length;
    if (total_len > 0.0)
        dst.dist_net_avg_age =
            (dst.dist_net_avg_age * dst.dist_net_length + src.dist_net_avg_age * src.dist_net_length) / total_len;
    dst.population += src.population;
    dst.surface_land += src.surface_land;
    dst.surface_water_inland += src.surface_water_inland;
    dst.surface_water_open += src.surface_water_open;
    dst.houses += src.houses;
    dst.businesses += src.businesses;
    dst.dist_net_length = total_len;
}

}  // namespace

const Municipality* Instance::find_municipality(const std::string& id) const
{
    return find_by_id(municipalities, id);
}

const WaterSource* Instance::find_source(const std::string& id) const
{
    return find_by_id(sources, id);
}

const Site* Instance::find_site(const std::string& id) const
{
    return find_by_id(sites, id);
}

const Connection* Instance::find_connection(const std::string& id) const
{
    return find_by_id(connections, id);
}

const Utility* Instance::utility_of_province(const std::string& province) const
{
    auto it = std::find_if(utilities.begin(), utilities.end(), [&](const Utility& u) { return u.province == province; });
    return it == utilities.end() ? nullptr : &*it;
}

std::vector<std::string> Instance::check() const
{
    std::vector<std::string> out;
    auto err = [&](const std::string& where, const std::string& what) { out.push_back(where + ": " + what); };
    auto guard = [&](const std::string& where, auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            err(where, e.what());
        }
    };

    if (format_version != 1)
        err("format_version", "unsupported version " + std::to_string(format_version));
    std::set<std::string> ids, provinces;
    for (const auto& u : utilities) {
        if (u.id.empty() || !ids.insert(u.id).second)
            err("utilities/" + u.id, "missing or duplicate id");
        if (!provinces.insert(u.province).second)
            err("utilities/" + u.id, "province '" + u.province + "' served twice");
    }
    if (utilities.empty())
        err("utilities", "at least one utility is required");

    const Date start = Date::jan1(start_year);
    std::set<std::string> muni_ids;
    for (const auto& m : municipalities) {
        const std::string w = "municipalities/" + m.id;
        if (m.id.empty() || !muni_ids.insert(m.id).second)
            err(w, "missing or duplicate id");
        if (!utility_of_province(m.province))
            err(w, "province '" + m.province + "' has no utility");
        if (!m.begin_date.valid() || !m.begin_date.is_jan1())
            err(w, "begin_date must be a January 1st");
        if (m.end_date && (!m.end_date->is_jan1() || !(*m.end_date > m.begin_date)))
            err(w, "end_date must be a January 1st after begin_date");
        if (m.end_date && *m.end_date <= start)
            err(w, "end_date must fall after the start year");
        if (m.end_date.has_value() != m.end.has_value())
            err(w, "end_date and end_disposition go together");
        if (!(m.population >= 0.0))
            err(w, "population must be non-negative");
        if (!(m.dist_net_avg_age >= 0.0))
            err(w, "dist_net_avg_age must be non-negative");
        if (m.houses < 0.0 || m.businesses < 0.0 || m.dist_net_length < 0.0 || m.surface_land < 0.0 ||
            m.surface_water_inland < 0.0 || m.surface_water_open < 0.0)
            err(w, "additive attributes must be non-negative");
        if (!(m.income_index > 0.0))
            err(w, "income_index must be positive");
    }
    for (const auto& m : municipalities) {
        const std::string w = "municipalities/" + m.id;
        if (m.end && !muni_ids.count(m.end->target))
            err(w, "end_disposition target '" + m.end->target + "' does not exist");
        if (m.begin_date > start) {
            bool is_cluster_target = std::any_of(municipalities.begin(), municipalities.end(), [&](const Municipality& o) {
                return o.end && o.end->kind == Disposition::Clustered && o.end->target == m.id &&
                       o.end_date == m.begin_date;
            });
            if (!is_cluster_target)
                err(w, "municipalities starting after the start year must be the target of a clustering");
        }
    }

    auto check_catalog_pump = [&](const std::string& w, const std::string& option) {
        if (!catalogs.pumps.count(option))
            err(w, "unknown pump option '" + option + "'");
    };
    std::set<std::string> source_ids;
    for (const auto& s : sources) {
        const std::string w = "sources/" + s.id;
        if (s.id.empty() || !source_ids.insert(s.id).second)
            err(w, "missing or duplicate id");
        if (!muni_ids.count(s.connected_municipality))
            err(w, "connected municipality '" + s.connected_municipality + "' does not exist");
        if (!utility_of_province(s.province))
            err(w, "province '" + s.province + "' has no utility");
        if (!(s.nominal_capacity > 0.0))
            err(w, "nominal_capacity must be positive");
        if (!(s.target_factor > 0.0 && s.target_factor <= 1.0))
            err(w, "target_factor must lie in (0, 1]");
        if (s.type == assets::SourceType::Groundwater) {
            if (!s.permit || !(*s.permit > 0.0))
                err(w, "groundwater needs a positive permit");
            else if (!assets::groundwater_size_ok(s.nominal_capacity, *s.permit))
                err(w, "nominal capacity exceeds the permit by more than 30%");
        } else {
            if (!s.max_capacity)
                err(w, "surface and desalination sources need max_capacity");
            else if (!assets::capped_size_ok(s.nominal_capacity, *s.max_capacity))
                err(w, "nominal capacity exceeds max_capacity");
        }
        if (s.closure_date && !(*s.closure_date > s.activation_date))
            err(w, "closure_date must follow activation_date");
        check_catalog_pump(w + "/station", s.station.pump_option);
        if (s.station.pump_count < 1)
            err(w + "/station", "pump_count must be at least 1");
        if (!s.station.pump_install_years.empty() &&
            s.station.pump_install_years.size() != static_cast<std::size_t>(s.station.pump_count))
            err(w + "/station", "pump_install_years must list every unit");
        for (const auto& pv : s.station.pv)
            if (!(pv.capacity_kw > 0.0))
                err(w + "/station", "PV capacity must be positive");
    }
    for (const auto& s : sites) {
        const std::string w = "sites/" + s.id;
        if (s.id.empty() || !ids.insert("site:" + s.id).second || source_ids.count(s.id))
            err(w, "missing or duplicate id");
        if (!muni_ids.count(s.connected_municipality))
            err(w, "connected municipality '" + s.connected_municipality + "' does not exist");
        if (!utility_of_province(s.province))
            err(w, "province '" + s.province + "' has no utility");
        if (s.type == assets::SourceType::Groundwater ? !(s.permit && *s.permit > 0.0)
                                                      : !(s.max_capacity && *s.max_capacity > 0.0))
            err(w, "site needs a positive permit (groundwater) or max_capacity (other types)");
        if (s.construction_min_years < 0 || s.construction_max_years < s.construction_min_years)
            err(w, "construction time bounds are invalid");
    }
    std::set<std::string> conn_ids;
    for (const auto& c : connections) {
        const std::string w = "connections/" + c.id;
        if (c.id.empty() || !conn_ids.insert(c.id).second)
            err(w, "missing or duplicate id");
        for (const auto& n : {c.node_a, c.node_b})
            if (!muni_ids.count(n))
                err(w, "node '" + n + "' does not exist");
        if (c.node_a == c.node_b)
            err(w, "connection joins a node to itself");
        if (!(c.distance > 0.0))
            err(w, "distance must be positive");
        if (c.pipe && !catalogs.pipes.count(c.pipe->option))
            err(w, "unknown pipe option '" + c.pipe->option + "'");
    }
    for (const auto& [id, p] : catalogs.pumps)
        guard("catalogs/pumps/" + id, [&] { p.validate(); });
    for (const auto& [id, p] : catalogs.pipes)
        guard("catalogs/pipes/" + id, [&] { p.validate(); });
    guard("catalogs/source_costs", [&] { catalogs.source_costs.validate(); });
    guard("nrw/table", [&] { nrw.table.validate(); });
    for (const auto& row : nrw.costs.unit_cost)
        for (double v : row)
            if (v < 0.0)
                err("nrw/costs", "unit costs must be non-negative");
    for (const auto& row : nrw.costs.effectiveness)
        for (double v : row)
            if (v < 0.0)
                err("nrw/costs", "effectiveness must be non-negative");
    guard("demand/seasonal", [&] { demand.seasonal.validate(); });
    if (demand.perturbation_sigma < 0.0)
        err("demand", "perturbation_sigma must be non-negative");
    double share = 0.0;
    std::set<std::string> class_ids;
    for (const auto& h : household_classes) {
        share += h.share;
        if (!class_ids.insert(h.id).second)
            err("household_classes/" + h.id, "duplicate id");
        if (!(h.share > 0.0) || !(h.income_factor > 0.0) || !(h.household_size > 0.0))
            err("household_classes/" + h.id, "share, income_factor and household_size must be positive");
    }
    if (household_classes.empty() || std::fabs(share - 1.0) > 1e-9)
        err("household_classes", "shares must sum to 1");
    guard("energy/price_shape", [&] { energy.price_shape.validate(); });
    guard("drivers", [&] {
        scenario::TraceRequest r;
        r.drivers = drivers;
        r.drought = drought;
        scenario::validate_request(r);
    });
    guard("permit_fines", [&] { permit_fines.validate(); });
    if (economy.bond_maturity_years < 1)
        err("economy", "bond_maturity_years must be at least 1");
    if (!(economy.base_monthly_income > 0.0))
        err("economy", "base_monthly_income must be positive");
    if (solver.max_iterations < 1 || !(solver.required_pressure > solver.minimum_pressure))
        err("solver", "iteration cap or pressure thresholds are invalid");
    if (failure_budget < 0)
        err("failure_budget", "must be non-negative");
    return out;
}

void Instance::validate() const
{
    auto msgs = check();
    if (msgs.empty())
        return;
    std::string all;
    for (const auto& m : msgs)
        all += (all.empty() ? "" : "\n") + m;
    throw ValidationError(all);
}

scenario::TraceRequest trace_request(const Instance& instance, std::uint64_t seed, int years)
{
    scenario::TraceRequest r;
    r.drivers = instance.drivers;
    r.drought = instance.drought;
    r.seed = seed;
    r.start_year = instance.start_year;
    r.years = years;
    auto& munis = r.scopes[scenario::Scope::Municipality];
    auto& pop = r.bases["population"];
    auto& income = r.bases["income_index"];
    for (const auto& m : instance.municipalities) {
        munis.emplace_back(m.id, 1.0);
        pop.emplace_back(m.id, m.population);
        income.emplace_back(m.id, m.income_index);
    }
    for (const auto& u : instance.utilities)
        r.scopes[scenario::Scope::Utility].emplace_back(u.id, 1.0);
    for (const auto& s : instance.sources)
        if (s.type == assets::SourceType::Surface)
            r.surface_sources.push_back(s.id);
    for (const auto& s : instance.sites)
        if (s.type == assets::SourceType::Surface)
            r.surface_sources.push_back(s.id);
    return r;
}

double pipe_decay_rate(const assets::PipeOption& option, const scenario::ScenarioTrace& trace,
                       const std::string& connection, int generation)
{
    return assets::realized_decay_rate(option, trace.realized("decay_rate", connection, generation));
}

int pump_lifetime(const assets::PumpOption& option, const scenario::ScenarioTrace& trace, const std::string& station,
                  std::size_t unit, int generation)
{
    return assets::realized_lifetime(option,
                                     trace.realized("pump_lifetime", station, static_cast<std::int64_t>(unit) * 1000 + generation));
}

MunicipalityState* WorldState::municipality(const std::string& id)
{
    return find_by_data_id(municipalities, id);
}

const MunicipalityState* WorldState::municipality(const std::string& id) const
{
    return const_cast<WorldState*>(this)->municipality(id);
}

SourceState* WorldState::source(const std::string& id)
{
    return find_by_data_id(sources, id);
}

const SourceState* WorldState::source(const std::string& id) const
{
    return const_cast<WorldState*>(this)->source(id);
}

ConnectionState* WorldState::connection(const std::string& id)
{
    auto it = std::find_if(connections.begin(), connections.end(), [&](const ConnectionState& c) { return c.id == id; });
    return it == connections.end() ? nullptr : &*it;
}

const ConnectionState* WorldState::connection(const std::string& id) const
{
    return const_cast<WorldState*>(this)->connection(id);
}

UtilityState* WorldState::utility_of_province(const std::string& province)
{
    auto it = std::find_if(utilities.begin(), utilities.end(), [&](const UtilityState& u) { return u.province == province; });
    return it == utilities.end() ? nullptr : &*it;
}

double WorldState::open_population() const
{
    double s = 0.0;
    for (const auto& m : municipalities)
        if (m.open)
            s += m.data.population;
    return s;
}

WorldState initial_state(const Instance& instance, const scenario::ScenarioTrace& trace)
{
    WorldState st;
    const Date start = Date::jan1(instance.start_year);
    st.clock = start;
    st.budget_rule = instance.economy.budget_rule;
    for (const auto& u : instance.utilities)
        st.utilities.push_back({u.id, u.province, 0.0, 0.0, instance.nrw.default_policy});
    for (const auto& m : instance.municipalities) {
        MunicipalityState ms;
        ms.data = m;
        ms.open = m.begin_date <= start && !(m.end_date && *m.end_date <= start);
        if (m.begin_date <= start)
            ms.members.push_back({m.id, m.population, m.houses, m.businesses});
        st.municipalities.push_back(std::move(ms));
    }
    for (const auto& s : instance.sources) {
        SourceState ss;
        ss.data = s;
        const auto& opt = instance.catalogs.pumps.at(s.station.pump_option);
        for (int k = 0; k < s.station.pump_count; ++k) {
            const auto unit = static_cast<std::size_t>(k);
            const int year = s.station.pump_install_years.empty() ? instance.start_year : s.station.pump_install_years[unit];
            ss.pumps.push_back({year, pump_lifetime(opt, trace, s.station.id, unit, 0), 0});
        }
        for (const auto& pv : s.station.pv)
            ss.pv.push_back({pv.install_date, pv.capacity_kw});
        st.sources.push_back(std::move(ss));
    }
    for (const auto& c : instance.connections) {
        ConnectionState cs{c.id, c.node_a, c.node_b, c.distance, false, std::nullopt, std::nullopt};
        if (c.pipe) {
            const auto& opt = instance.catalogs.pipes.at(c.pipe->option);
            PipeState p;
            p.option = c.pipe->option;
            p.install_year = c.pipe->install_date.year;
            p.friction_new = opt.friction_new;
            p.decay_rate = pipe_decay_rate(opt, trace, c.id, 0);
            p.diameter = opt.diameter;
            p.friction = assets::decay_pipe_friction(p.friction_new, std::max(0, instance.start_year - p.install_year),
                                                     p.decay_rate, instance.decay_law);
            cs.pipe = p;
            cs.pipe_active_from = c.pipe->install_date;
        }
        st.connections.push_back(std::move(cs));
    }
    return st;
}

void apply_lifecycle_event(WorldState& state, const LifecycleEvent& event, const Date& date)
{
    if (!date.is_jan1())
        throw DateError("lifecycle events happen on January 1st, not " + date.str());
    if (event.sources.empty())
        throw LifecycleError("lifecycle event without source municipalities");
    MunicipalityState* dst = state.municipality(event.target);
    if (!dst)
        throw LifecycleError("unknown municipality '" + event.target + "'");
    std::vector<MunicipalityState*> srcs;
    for (const auto& id : event.sources) {
        MunicipalityState* m = state.municipality(id);
        if (!m)
            throw LifecycleError("unknown municipality '" + id + "'");
        if (!m->open)
            throw LifecycleError("municipality '" + id + "' is already closed");
        if (m->last_event == date)
            throw LifecycleError("municipality '" + id + "' already changed on " + date.str());
        if (m == dst)
            throw LifecycleError("municipality '" + id + "' cannot merge into itself");
        srcs.push_back(m);
    }
    if (dst->last_event == date)
        throw LifecycleError("municipality '" + dst->data.id + "' already changed on " + date.str());

    std::set<std::string> merged;
    if (event.kind == LifecycleEvent::Kind::Absorb) {
        if (srcs.size() != 1)
            throw LifecycleError("absorption takes exactly one source municipality");
        if (!dst->open)
            throw LifecycleError("absorbing municipality '" + dst->data.id + "' is closed");
        merged.insert(dst->data.id);
    } else {
        if (dst->open || dst->ended)
            throw LifecycleError("clustered municipality '" + dst->data.id + "' already exists");
        // the new node keeps its own location from the instance, additive attributes start empty
        Municipality& d = dst->data;
        d.population = d.surface_land = d.surface_water_inland = d.surface_water_open = 0.0;
        d.houses = d.businesses = d.dist_net_length = d.dist_net_avg_age = 0.0;
        dst->members.clear();
        dst->open = true;
    }
    for (MunicipalityState* s : srcs) {
        merge_additive(dst->data, s->data);
        dst->members.insert(dst->members.end(), s->members.begin(), s->members.end());
        merged.insert(s->data.id);
        s->open = false;
        s->ended = EndDisposition{event.kind == LifecycleEvent::Kind::Absorb ? Disposition::Absorbed : Disposition::Clustered,
                                  dst->data.id};
        s->last_event = date;
    }
    dst->last_event = date;

    for (auto& c : state.connections) {
        const bool a_in = merged.count(c.node_a) > 0;
        const bool b_in = merged.count(c.node_b) > 0;
        if (a_in && b_in) {
            c.hidden = true;
            continue;
        }
        if (a_in)
            c.node_a = dst->data.id;
        if (b_in)
            c.node_b = dst->data.id;
    }
    for (auto& s : state.sources)
        if (merged.count(s.data.connected_municipality))
            s.data.connected_municipality = dst->data.id;
}

std::vector<LifecycleEvent> lifecycle_events_on(const Instance& instance, const Date& date)
{
    std::vector<LifecycleEvent> out;
    std::map<std::string, std::vector<std::string>> clusters;
    for (const auto& m : instance.municipalities) {
        if (!m.end_date || *m.end_date != date || !m.end)
            continue;
        if (m.end->kind == Disposition::Absorbed)
            out.push_back({LifecycleEvent::Kind::Absorb, {m.id}, m.end->target});
        else
            clusters[m.end->target].push_back(m.id);
    }
    for (auto& [target, members] : clusters)
        out.push_back({LifecycleEvent::Kind::Cluster, members, target});
    return out;
}

NetworkView visible_network(const WorldState& state, const Date& date)
{
    NetworkView v;
    std::set<std::string> open;
    for (const auto& m : state.municipalities) {
        if (!m.open)
            continue;
        open.insert(m.data.id);
        v.nodes.push_back({m.data.id, "municipality", m.data.latitude, m.data.longitude, m.data.elevation, m.data.province});
    }
    for (const auto& s : state.sources) {
        if (s.closed || !s.active_on(date) || !open.count(s.data.connected_municipality))
            continue;
        v.nodes.push_back({s.data.id, "source", s.data.latitude, s.data.longitude, s.data.elevation, s.data.province});
        v.edges.push_back({s.data.station.id, "station", s.data.id, s.data.connected_municipality, 0.0, 0.0, 0.0,
                           s.data.station.pump_option});
    }
    for (const auto& c : state.connections) {
        if (c.hidden || !c.pipe || (c.pipe_active_from && *c.pipe_active_from > date))
            continue;
        if (!open.count(c.node_a) || !open.count(c.node_b))
            continue;
        v.edges.push_back({c.id, "pipe", c.node_a, c.node_b, c.distance, c.pipe->diameter, c.pipe->friction, c.pipe->option});
    }
    std::sort(v.nodes.begin(), v.nodes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::sort(v.edges.begin(), v.edges.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return v;
}

}  // namespace bwf::domain
