#include "bwf/engine.hpp"

#include "bwf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace bwf::engine {

using domain::Instance;
using domain::WorldState;

namespace {

constexpr std::array<std::string_view, 8> kTypeNames{"open_source", "close_source", "install_pipe", "replace_pipe",
                                                     "set_pumps",   "install_pv",   "nrw_budget",   "budget_rule"};

std::vector<std::size_t> chronological(const Masterplan& plan)
{
    std::vector<std::size_t> order(plan.interventions.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return plan.interventions[a].date < plan.interventions[b].date;
    });
    return order;
}

}  // namespace

InterventionType parse_intervention_type(std::string_view text)
{
    for (std::size_t i = 0; i < kTypeNames.size(); ++i)
        if (kTypeNames[i] == text)
            return static_cast<InterventionType>(i);
    throw InputError("unknown intervention type '" + std::string(text) + "'");
}

std::string_view intervention_type_name(InterventionType t)
{
    return kTypeNames[static_cast<std::size_t>(t)];
}

SimMode parse_mode(std::string_view text)
{
    if (text == "full")
        return SimMode::Full;
    if (text == "rep" || text == "representative")
        return SimMode::Representative;
    throw ConfigError("unknown simulation mode '" + std::string(text) + "' (full, rep)");
}

std::string_view mode_name(SimMode m)
{
    return m == SimMode::Full ? "full" : "rep";
}

std::vector<SimulatedDay> simulated_days(SimMode mode)
{
    std::vector<SimulatedDay> out;
    if (mode == SimMode::Full) {
        for (int d = 0; d < kDaysPerYear; ++d)
            out.push_back({d, 1.0});
        return out;
    }
    for (int m = 1; m <= 12; ++m)
        for (int k = 0; k < 7; ++k)
            out.push_back({month_start_day(m) + k, kDaysInMonth[static_cast<std::size_t>(m - 1)] / 7.0});
    return out;
}

std::vector<Violation> validate_plan(const Masterplan& plan, const Instance& instance, const WorldState* carried,
                                     int stage_start_year)
{
    std::vector<Violation> out;
    auto add = [&](std::string code, std::size_t index, std::string message) {
        out.push_back({std::move(code), index, std::move(message)});
    };
    const int first = stage_start_year > 0 ? stage_start_year : instance.start_year;
    if (plan.format_version != 1)
        add("format_version", 0, "unsupported plan format version " + std::to_string(plan.format_version));
    if (plan.horizon_years <= 0)
        add("invalid_horizon", 0, "horizon_years must be positive");
    for (const auto& u : plan.utilities)
        if (std::none_of(instance.utilities.begin(), instance.utilities.end(), [&](auto& x) { return x.id == u; }))
            add("unknown_utility", 0, "plan names unknown utility '" + u + "'");

    // Replay the plan in date order against what exists so far.
    struct SourceInfo {
        bool closed = false;
    };
    std::map<std::string, SourceInfo> sources;
    std::set<std::string> used_sites;
    std::set<std::string> piped;
    std::map<std::string, std::string> stations;  // station id -> source id
    if (carried) {
        for (const auto& s : carried->sources) {
            sources[s.data.id] = {s.closed};
            stations[s.data.station.id] = s.data.id;
        }
        used_sites.insert(carried->used_sites.begin(), carried->used_sites.end());
        for (const auto& c : carried->connections)
            if (c.pipe)
                piped.insert(c.id);
    } else {
        for (const auto& s : instance.sources) {
            sources[s.id] = {false};
            stations[s.station.id] = s.id;
        }
        for (const auto& c : instance.connections)
            if (c.pipe)
                piped.insert(c.id);
    }

    for (std::size_t i : chronological(plan)) {
        const Intervention& iv = plan.interventions[i];
        const std::string what = std::string(intervention_type_name(iv.type)) + " '" + iv.target + "'";
        if (!iv.date.valid()) {
            add("invalid_date", i, what + ": invalid date");
            continue;
        }
        const bool yearly = iv.type == InterventionType::NrwBudget || iv.type == InterventionType::BudgetRule;
        if (yearly ? !iv.date.is_jan1() : !iv.date.is_quarter_start())
            add("date_alignment", i,
                what + ": date " + iv.date.str() + (yearly ? " must be a January 1st" : " must be a quarter start"));
        if (iv.date.year < first || iv.date.year >= first + plan.horizon_years)
            add("date_out_of_horizon", i,
                what + ": date " + iv.date.str() + " outside " + std::to_string(first) + "-" +
                    std::to_string(first + plan.horizon_years - 1));

        auto pump_checks = [&] {
            if (!instance.catalogs.pumps.count(iv.option))
                add("unknown_pump_option", i, what + ": unknown pump option '" + iv.option + "'");
            if (iv.count < 1)
                add("invalid_pump_count", i, what + ": pump count must be at least 1");
        };
        auto existing_source = [&]() -> SourceInfo* {
            auto st = stations.find(iv.target);
            auto it = sources.find(st == stations.end() ? iv.target : st->second);
            if (it == sources.end()) {
                add("unknown_source", i, what + ": no such source");
                return nullptr;
            }
            if (it->second.closed) {
                add("source_closed", i, what + ": source is closed");
                return nullptr;
            }
            return &it->second;
        };
        auto pipe_checks = [&]() -> bool {
            bool ok = true;
            if (!instance.find_connection(iv.target)) {
                add("unknown_connection", i, what + ": no such connection");
                ok = false;
            }
            if (!instance.catalogs.pipes.count(iv.option)) {
                add("unknown_pipe_option", i, what + ": unknown pipe option '" + iv.option + "'");
                ok = false;
            }
            return ok;
        };

        switch (iv.type) {
        case InterventionType::OpenSource: {
            const domain::Site* site = instance.find_site(iv.target);
            if (!site) {
                add("unknown_site", i, what + ": no such site");
                break;
            }
            auto prev = sources.find(iv.target);
            if (prev != sources.end() && prev->second.closed)
                add("reopen_source", i, what + ": a closed source cannot be reopened");
            else if (used_sites.count(iv.target) || prev != sources.end())
                add("site_in_use", i, what + ": site already hosts a source");
            if (iv.source_type && *iv.source_type != site->type)
                add("source_type_mismatch", i, what + ": site is " + std::string(assets::source_type_name(site->type)));
            if (!(iv.nominal_capacity > 0.0)) {
                add("invalid_capacity", i, what + ": nominal capacity must be positive");
            } else if (site->type == assets::SourceType::Groundwater) {
                if (site->permit && !assets::groundwater_size_ok(iv.nominal_capacity, *site->permit))
                    add("permit_30pct", i,
                        what + ": nominal capacity exceeds the extraction permit by more than 30%");
            } else if (site->max_capacity && !assets::capped_size_ok(iv.nominal_capacity, *site->max_capacity)) {
                add("max_capacity", i, what + ": nominal capacity exceeds the site maximum");
            }
            if (!(iv.target_factor > 0.0 && iv.target_factor <= 1.0))
                add("invalid_target_factor", i, what + ": target factor must be in (0, 1]");
            pump_checks();
            used_sites.insert(iv.target);
            sources[iv.target] = {false};
            stations[iv.target + "-ps"] = iv.target;
            break;
        }
        case InterventionType::CloseSource:
            if (auto* s = existing_source())
                s->closed = true;
            break;
        case InterventionType::SetPumps:
            existing_source();
            pump_checks();
            break;
        case InterventionType::InstallPv:
            existing_source();
            if (!(iv.capacity_kw > 0.0))
                add("invalid_capacity", i, what + ": PV capacity must be positive");
            break;
        case InterventionType::InstallPipe:
            if (pipe_checks()) {
                if (!piped.insert(iv.target).second)
                    add("duplicate_pipe", i, what + ": connection already has a pipe");
            }
            break;
        case InterventionType::ReplacePipe:
            if (pipe_checks() && !piped.count(iv.target))
                add("no_pipe", i, what + ": no installed pipe to replace");
            break;
        case InterventionType::NrwBudget:
            if (std::none_of(instance.utilities.begin(), instance.utilities.end(),
                             [&](auto& u) { return u.id == iv.target; }))
                add("unknown_utility", i, what + ": no such utility");
            if (!(iv.share >= 0.0 && iv.share <= 1.0))
                add("invalid_share", i, what + ": share must be in [0, 1]");
            break;
        case InterventionType::BudgetRule:
            if (iv.rule == economy::BudgetRule::Custom) {
                double sum = 0.0;
                bool neg = false;
                for (double w : iv.weights) {
                    sum += w;
                    neg = neg || !(w >= 0.0);
                }
                if (iv.weights.size() != instance.utilities.size() || neg || std::fabs(sum - 1.0) > 1e-9)
                    add("invalid_weights", i, "budget_rule: custom weights need one non-negative weight per utility summing to 1");
            }
            break;
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) { return a.index < b.index; });
    return out;
}

namespace {

struct UtilYear {
    double allocated = 0.0;
    double revenue = 0.0;
    double capex = 0.0;
    double opex = 0.0;
    double fines = 0.0;
    double grid_kwh = 0.0;
    double treatment_kwh = 0.0;
};

class Simulator {
public:
    Simulator(const Instance& instance, WorldState state, const Masterplan& plan, const scenario::ScenarioTrace& trace,
              const RunOptions& options)
        : in_(instance), st_(std::move(state)), plan_(plan), trace_(trace), opt_(options),
          library_(demand::ProfileLibrary::synthetic())
    {
        for (int y = trace.start_year; y < trace.start_year + trace.years; ++y)
            inflation_[y] = trace.value("inflation", "national", y);
        classes_ = in_.household_classes;
        if (classes_.empty())
            classes_.push_back({"all", 1.0, 1.0, 2.2});
        order_ = chronological(plan);
    }

    RunOutput run()
    {
        out_.instance_name = in_.name;
        out_.seed = trace_.seed;
        out_.mode = opt_.mode;
        out_.first_year = st_.clock.year;
        out_.years = opt_.years;
        if (opt_.years <= 0)
            throw ConfigError("years must be positive");
        if (!trace_.covers(out_.first_year, out_.first_year + opt_.years - 1))
            throw InputError("scenario trace does not cover " + std::to_string(out_.first_year) + "-" +
                             std::to_string(out_.first_year + opt_.years - 1));
        auto violations = validate_plan(plan_, in_, &st_, out_.first_year);
        if (!violations.empty()) {
            std::string msg = "masterplan rejected:";
            for (const auto& v : violations)
                msg += "\n  [" + v.code + "] #" + std::to_string(v.index) + " " + v.message;
            throw ValidationError(msg);
        }
        // interventions dated before this stage were applied by an earlier one
        while (next_ < order_.size() && plan_.interventions[order_[next_]].date.year < out_.first_year)
            ++next_;

        for (int k = 0; k < opt_.years; ++k) {
            year(out_.first_year + k);
            if (opt_.progress)
                opt_.progress(out_.first_year + k, k + 1, opt_.years);
        }
        st_.clock = Date::jan1(out_.first_year + opt_.years);
        out_.bonds = st_.bonds;
        out_.final_state = std::move(st_);
        return std::move(out_);
    }

private:
    double driver(const std::string& name, const std::string& scope, int y) const { return trace_.value(name, scope, y); }

    double price_level(int y) const { return driver("electricity_price", "national", y); }

    double escalated(double base_cost, int y) const { return economy::escalate(base_cost, inflation_, in_.start_year, y); }

    std::size_t utility_index(const std::string& province) const
    {
        for (std::size_t u = 0; u < st_.utilities.size(); ++u)
            if (st_.utilities[u].province == province)
                return u;
        throw InputError("province '" + province + "' has no utility");
    }

    const std::string& muni_province(const std::string& id) const
    {
        const auto* m = st_.municipality(id);
        if (!m)
            throw InputError("unknown municipality '" + id + "'");
        return m->data.province;
    }

    // Follows absorptions and clusterings to the municipality that is open now.
    std::string current_municipality(std::string id) const
    {
        for (int guard = 0; guard < 64; ++guard) {
            const auto* m = st_.municipality(id);
            if (!m || m->open || !m->ended)
                return id;
            id = m->ended->target;
        }
        return id;
    }

    domain::SourceState* source_or_station(const std::string& id)
    {
        if (auto* s = st_.source(id))
            return s;
        for (auto& s : st_.sources)
            if (s.data.station.id == id)
                return &s;
        return nullptr;
    }

    void book(std::size_t u, const std::string& id, const std::string& kind, double capital, double lifetime,
              int commission_year, double emissions, const std::string& basis)
    {
        st_.assets.push_back({id, st_.utilities[u].id, kind, capital, lifetime, commission_year, emissions, basis});
        util_[u].capex += capital;
    }

    double muni_income(const domain::MunicipalityState& m, int y) const
    {
        double w = 0.0, s = 0.0;
        for (const auto& mem : m.members) {
            const double p = driver("population", mem.id, y);
            w += p;
            s += p * driver("income_index", mem.id, y);
        }
        return w > 0.0 ? s / w : m.data.income_index;
    }

    void apply(const Intervention& iv, int y)
    {
        switch (iv.type) {
        case InterventionType::OpenSource: {
            const domain::Site& site = *in_.find_site(iv.target);
            domain::SourceState s;
            s.from_plan = true;
            domain::WaterSource& w = s.data;
            w.id = site.id;
            w.type = site.type;
            w.latitude = site.latitude;
            w.longitude = site.longitude;
            w.elevation = site.elevation;
            w.province = site.province;
            w.connected_municipality = current_municipality(site.connected_municipality);
            w.activation_date = assets::schedule_construction(iv.date, site.construction_min_years,
                                                              site.construction_max_years,
                                                              trace_.realized("construction_time", site.id));
            w.nominal_capacity = iv.nominal_capacity;
            w.target_factor = iv.target_factor;
            w.permit = site.permit;
            w.max_capacity = site.max_capacity;
            w.station.id = site.id + "-ps";
            w.station.pump_option = iv.option;
            w.station.pump_count = iv.count;
            const auto& pump = in_.catalogs.pumps.at(iv.option);
            const std::size_t u = utility_index(site.province);
            const auto& entry = in_.catalogs.source_costs.lookup(site.type, iv.nominal_capacity);
            book(u, site.id, "source", escalated(entry.construction_unit_cost * iv.nominal_capacity, y),
                 entry.lifetime_years, w.activation_date.year, entry.embedded_emissions * iv.nominal_capacity,
                 "per_capacity");
            for (int k = 0; k < iv.count; ++k) {
                const auto unit = static_cast<std::size_t>(k);
                const int life = domain::pump_lifetime(pump, trace_, w.station.id, unit, 0);
                s.pumps.push_back({w.activation_date.year, life, 0});
                book(u, w.station.id + "/" + std::to_string(k) + "/0", "pump", escalated(pump.unit_cost, y), life,
                     w.activation_date.year, pump.embedded_emissions, "per_unit");
            }
            st_.used_sites.push_back(site.id);
            st_.sources.push_back(std::move(s));
            break;
        }
        case InterventionType::CloseSource: {
            auto* s = source_or_station(iv.target);
            s->closed = true;
            s->closed_on = iv.date;
            break;
        }
        case InterventionType::SetPumps: {
            auto* s = source_or_station(iv.target);
            const auto& pump = in_.catalogs.pumps.at(iv.option);
            int gen = 0;
            for (const auto& p : s->pumps)
                gen = std::max(gen, p.generation + 1);
            const int install = std::max(y, s->data.activation_date.year);
            s->data.station.pump_option = iv.option;
            s->data.station.pump_count = iv.count;
            s->pumps.clear();
            const std::size_t u = utility_index(s->data.province);
            for (int k = 0; k < iv.count; ++k) {
                const auto unit = static_cast<std::size_t>(k);
                const int life = domain::pump_lifetime(pump, trace_, s->data.station.id, unit, gen);
                s->pumps.push_back({install, life, gen});
                book(u, s->data.station.id + "/" + std::to_string(k) + "/" + std::to_string(gen), "pump",
                     escalated(pump.unit_cost, y), life, install, pump.embedded_emissions, "per_unit");
            }
            break;
        }
        case InterventionType::InstallPv: {
            auto* s = source_or_station(iv.target);
            s->pv.push_back({iv.date, iv.capacity_kw});
            const std::size_t u = utility_index(s->data.province);
            book(u, s->data.station.id + "/pv/" + iv.date.str(), "pv",
                 driver("pv_unit_cost", "national", y) * iv.capacity_kw, assets::kPvLifetimeYears, y,
                 in_.energy.pv_embedded_per_kw * iv.capacity_kw, "per_kw");
            break;
        }
        case InterventionType::InstallPipe:
        case InterventionType::ReplacePipe: {
            auto* c = st_.connection(iv.target);
            const auto& opt = in_.catalogs.pipes.at(iv.option);
            if (c->hidden) {
                // endpoint closed before the works: cancelled, half the cost refunded
                const std::size_t u = utility_index(muni_province(c->node_a));
                book(u, c->id + "/cancelled/" + iv.date.str(), "pipe", 0.5 * escalated(opt.cost_per_m * c->distance, y),
                     1.0, y, 0.0, "per_meter");
                break;
            }
            const int gen = c->pipe ? c->pipe->generation + 1 : 0;
            domain::PipeState p;
            p.option = iv.option;
            p.install_year = y;
            p.generation = gen;
            p.friction_new = opt.friction_new;
            p.decay_rate = domain::pipe_decay_rate(opt, trace_, c->id, gen);
            p.friction = opt.friction_new;
            p.diameter = opt.diameter;
            c->pipe = p;
            c->pipe_active_from = iv.date;
            const double cost = escalated(opt.cost_per_m * c->distance, y);
            const double emissions = opt.emissions_per_m * c->distance;
            const std::size_t ua = utility_index(muni_province(c->node_a));
            const std::size_t ub = utility_index(muni_province(c->node_b));
            const std::string id = c->id + "/" + std::to_string(gen);
            if (ua == ub) {
                book(ua, id, "pipe", cost, opt.lifetime_years, y, emissions, "per_meter");
            } else {
                // shared equally by the two utilities
                book(ua, id + "/a", "pipe", cost / 2, opt.lifetime_years, y, emissions / 2, "per_meter");
                book(ub, id + "/b", "pipe", cost / 2, opt.lifetime_years, y, emissions / 2, "per_meter");
            }
            break;
        }
        case InterventionType::NrwBudget:
            for (auto& u : st_.utilities)
                if (u.id == iv.target) {
                    u.nrw_share = iv.share;
                    u.nrw_policy = iv.policy;
                }
            break;
        case InterventionType::BudgetRule:
            st_.budget_rule = iv.rule;
            st_.budget_weights = iv.weights;
            break;
        }
    }

    void apply_due(const Date& d, int y)
    {
        while (next_ < order_.size() && plan_.interventions[order_[next_]].date <= d) {
            const Intervention& iv = plan_.interventions[order_[next_]];
            if (iv.date.year >= out_.first_year + opt_.years)
                break;
            apply(iv, y);
            ++next_;
        }
    }

    void year_start(int y)
    {
        const Date jan1 = Date::jan1(y);
        if (y > in_.start_year)
            for (const auto& ev : domain::lifecycle_events_on(in_, jan1))
                domain::apply_lifecycle_event(st_, ev, jan1);
        st_.clock = jan1;

        for (auto& m : st_.municipalities) {
            if (!m.open)
                continue;
            double pop = 0.0, houses = 0.0, businesses = 0.0;
            for (const auto& mem : m.members) {
                const double p = driver("population", mem.id, y);
                const double scale = mem.base_population > 0.0 ? p / mem.base_population : 1.0;
                pop += p;
                houses += mem.base_houses * scale;
                businesses += mem.base_businesses * scale;
            }
            m.data.population = pop;
            m.data.houses = houses;
            m.data.businesses = businesses;
            if (y > in_.start_year)
                m.data.dist_net_avg_age += 1.0;
        }

        util_.assign(st_.utilities.size(), UtilYear{});
        apply_due(jan1, y);

        std::vector<economy::UtilityStats> stats(st_.utilities.size());
        std::vector<double> income_w(st_.utilities.size(), 0.0);
        for (const auto& m : st_.municipalities) {
            if (!m.open)
                continue;
            const std::size_t u = utility_index(m.data.province);
            stats[u].population += m.data.population;
            income_w[u] += m.data.population * muni_income(m, y);
        }
        for (std::size_t u = 0; u < stats.size(); ++u)
            stats[u].income_index = stats[u].population > 0.0 ? income_w[u] / stats[u].population : 1.0;
        const auto alloc = economy::allocate_budget(driver("national_budget", "national", y), st_.budget_rule, stats,
                                                    st_.budget_weights);
        for (std::size_t u = 0; u < alloc.size(); ++u)
            util_[u].allocated = alloc[u];

        for (auto& c : st_.connections)
            if (c.pipe)
                c.pipe->friction = assets::decay_pipe_friction(c.pipe->friction_new,
                                                               std::max(0, y - c.pipe->install_year),
                                                               c.pipe->decay_rate, in_.decay_law);
        for (auto& s : st_.sources) {
            if (s.closed || s.data.activation_date.year > y)
                continue;
            const auto& pump = in_.catalogs.pumps.at(s.data.station.pump_option);
            const std::string& station = s.data.station.id;
            const auto repl = assets::age_pump_fleet(s.pumps, pump, y, escalated(pump.unit_cost, y),
                                                     [&](std::size_t unit, int gen) {
                                                         return trace_.realized("pump_lifetime", station,
                                                                                static_cast<std::int64_t>(unit) * 1000 + gen);
                                                     });
            const std::size_t u = utility_index(s.data.province);
            for (const auto& r : repl) {
                const auto& unit = s.pumps[r.unit];
                book(u, station + "/" + std::to_string(r.unit) + "/" + std::to_string(unit.generation), "pump", r.cost,
                     unit.lifetime, y, pump.embedded_emissions, "per_unit");
            }
        }

        // NRW resampled on the current age class, demand series per municipality
        std::vector<demand::MunicipalityDemandInput> inputs;
        muni_idx_.clear();
        for (std::size_t i = 0; i < st_.municipalities.size(); ++i) {
            auto& m = st_.municipalities[i];
            if (!m.open)
                continue;
            const auto cls = in_.nrw.table.classify(m.data.dist_net_avg_age);
            m.nrw_demand = nrw::sample_nrw_demand(in_.nrw.table, cls, nrw::km_pipes(m.data.population),
                                                  trace_.realized("nrw_rate", m.data.id, y));
            inputs.push_back({m.data.id, m.data.houses, m.data.businesses});
            muni_idx_.push_back(i);
        }
        series_.clear();
        if (inputs.empty())
            return;
        std::optional<double> target;
        if (in_.demand.national_target_per_capita) {
            double pop = 0.0;
            for (std::size_t i : muni_idx_)
                pop += st_.municipalities[i].data.population;
            target = *in_.demand.national_target_per_capita * pop;
        }
        const auto plan = demand::phase1_annual_volumes(inputs, driver("household_demand", "national", y),
                                                        driver("business_demand", "national", y), target,
                                                        in_.demand.perturbation_sigma, trace_.seed, y);
        const double tmax = driver("max_temperature", "national", y);
        for (std::size_t k = 0; k < muni_idx_.size(); ++k) {
            const auto& m = st_.municipalities[muni_idx_[k]];
            const auto choice = demand::phase2_assign_profiles(m.data.id, m.data.population, library_, trace_.seed, y);
            series_[m.data.id] = demand::phase3_hourly_series(plan.volumes[k], library_, choice,
                                                              demand::default_mix_weight(m.data.houses, m.data.businesses),
                                                              tmax, in_.demand.seasonal, trace_.seed, y);
        }
    }

    void year(int y)
    {
        year_start(y);
        YearSummary sum;
        sum.year = y;
        std::map<std::string, double> muni_demand, muni_delivered, source_volume;
        const double level = price_level(y);

        for (const auto& sd : simulated_days(opt_.mode)) {
            if (opt_.cancel && opt_.cancel->load())
                throw SimulationAbort("run cancelled");
            const Date date = Date::from_day_of_year(y, sd.day);
            apply_due(date, y);
            const auto view = domain::visible_network(st_, date);

            hydraulics::HydraulicNetwork net;
            std::map<std::string, int> node;
            std::vector<const domain::MunicipalityState*> jm;
            for (const auto& n : view.nodes)
                if (n.kind == "municipality") {
                    node[n.id] = static_cast<int>(net.junctions.size());
                    net.junctions.push_back({n.id, n.elevation, 0.0});
                    jm.push_back(st_.municipality(n.id));
                }
            std::vector<domain::SourceState*> srcs;
            std::vector<bool> avail;
            for (const auto& n : view.nodes)
                if (n.kind == "source") {
                    node[n.id] = net.fixed_index(net.fixed_heads.size());
                    net.fixed_heads.push_back({n.id, n.elevation});
                }
            std::vector<std::size_t> pump_src;
            for (const auto& e : view.edges) {
                if (e.kind == "pipe") {
                    net.pipes.push_back({e.id, node.at(e.a), node.at(e.b), e.length, e.diameter, e.friction});
                    continue;
                }
                auto* s = st_.source(e.a);
                const bool ok = s->data.type != assets::SourceType::Surface || trace_.available(s->data.id, y, sd.day);
                srcs.push_back(s);
                avail.push_back(ok);
                if (!ok)
                    continue;
                pump_src.push_back(srcs.size() - 1);
                net.pumps.push_back({e.id, node.at(e.a), node.at(e.b), in_.catalogs.pumps.at(e.option).curves,
                                     s->data.station.pump_count, std::nullopt});
            }
            std::vector<double> remaining(srcs.size()), day_out(srcs.size(), 0.0);
            for (std::size_t k = 0; k < srcs.size(); ++k)
                remaining[k] = srcs[k]->data.nominal_capacity;

            for (int h = 0; h < 24; ++h)
                hour(y, sd, h, net, jm, srcs, pump_src, remaining, day_out, muni_demand, muni_delivered, sum, level);

            for (std::size_t k = 0; k < srcs.size(); ++k) {
                const auto& s = *srcs[k];
                out_.source_days.push_back({s.data.id, y, sd.day, day_out[k], s.data.nominal_capacity, avail[k],
                                            s.data.type == assets::SourceType::Surface});
                const auto& entry = in_.catalogs.source_costs.lookup(s.data.type, s.data.nominal_capacity);
                const auto cost = assets::production_cost(day_out[k], s.data.nominal_capacity, s.data.target_factor,
                                                          entry, level);
                const std::size_t u = utility_index(s.data.province);
                util_[u].opex += cost.total() * sd.weight;
                util_[u].treatment_kwh += day_out[k] * entry.energy_intensity * sd.weight;
                sum.treatment_kwh += day_out[k] * entry.energy_intensity * sd.weight;
                source_volume[s.data.id] += day_out[k] * sd.weight;
                sum.source_outflow += day_out[k] * sd.weight;
            }
        }
        year_end(y, sum, muni_demand, muni_delivered, source_volume);
    }

    void hour(int y, const SimulatedDay& sd, int h, hydraulics::HydraulicNetwork& net,
              const std::vector<const domain::MunicipalityState*>& jm, const std::vector<domain::SourceState*>& srcs,
              const std::vector<std::size_t>& pump_src, std::vector<double>& remaining, std::vector<double>& day_out,
              std::map<std::string, double>& muni_demand, std::map<std::string, double>& muni_delivered,
              YearSummary& sum, double level)
    {
        const std::size_t hidx = static_cast<std::size_t>(sd.day * 24 + h);
        std::vector<double> billable(net.junctions.size());
        for (std::size_t j = 0; j < net.junctions.size(); ++j) {
            auto it = series_.find(jm[j]->data.id);
            billable[j] = it == series_.end() ? 0.0 : it->second.samples[hidx];
            net.junctions[j].demand = billable[j] + jm[j]->nrw_demand / 24.0;
        }
        for (std::size_t k = 0; k < net.pumps.size(); ++k)
            net.pumps[k].flow_limit = std::max(0.0, remaining[pump_src[k]]);

        hydraulics::HydraulicSolution sol;
        bool failed = false;
        for (std::size_t attempt = 0;; ++attempt) {
            try {
                sol = hydraulics::solve_step(net, in_.solver);
                break;
            } catch (const PumpRangeError& e) {
                failed = true;
                if (attempt > 2 * net.pumps.size() + 2)
                    throw SimulationAbort(std::string("no feasible pump setting: ") + e.what());
                for (auto& p : net.pumps) {
                    if (p.id != e.station())
                        continue;
                    if (e.above_range()) {
                        const double cap = p.pump->head.max_x() * p.units * (1.0 - 1e-12);
                        p.flow_limit = std::min(p.flow_limit.value_or(cap), cap);
                    } else {
                        p.flow_limit = 0.0;
                    }
                }
            }
        }
        failed = failed || !sol.converged;
        ++sum.solves;
        if (failed) {
            ++sum.failed_steps;
            if (++failed_total_ > in_.failure_budget)
                throw SimulationAbort("failed hourly solves exceed the budget of " + std::to_string(in_.failure_budget) +
                                      " at " + Date::from_day_of_year(y, sd.day).str() + " hour " + std::to_string(h));
        }

        HourRecord rec{y, sd.day, h, 0.0, 0.0, 0.0, sol.iterations, sol.converged};
        for (std::size_t j = 0; j < net.junctions.size(); ++j) {
            const double d = net.junctions[j].demand;
            const double f = d > 0.0 ? std::min(1.0, sol.junctions[j].delivered / d) : 1.0;
            const std::string& id = jm[j]->data.id;
            muni_demand[id] += billable[j] * sd.weight;
            muni_delivered[id] += billable[j] * f * sd.weight;
            sum.demand += billable[j] * sd.weight;
            sum.delivered += billable[j] * f * sd.weight;
            sum.nrw_demand += jm[j]->nrw_demand / 24.0 * sd.weight;
            sum.nrw_delivered += jm[j]->nrw_demand / 24.0 * f * sd.weight;
            rec.demand += d;
            rec.delivered += d * f;
        }
        const double price = economy::hourly_electricity_price(level, in_.energy.price_shape, h);
        const Date date = Date::from_day_of_year(y, sd.day);
        for (std::size_t k = 0; k < net.pumps.size(); ++k) {
            const std::size_t s = pump_src[k];
            const double cap = srcs[s]->data.nominal_capacity;
            const double q = std::min(sol.pumps[k].flow, remaining[s]);
            day_out[s] = std::min(cap, day_out[s] + q);
            remaining[s] = std::max(0.0, cap - day_out[s]);
            const double kw = sol.pumps[k].electric_kw;
            double pv_kw = 0.0;
            for (const auto& pv : srcs[s]->pv)
                if (pv.active_on(date))
                    pv_kw += pv.capacity_kw * assets::pv_yield(sd.day, h, in_.energy.pv_peak_factor);
            const double from_pv = std::min(kw, pv_kw);
            const double grid = kw - from_pv;
            const std::size_t u = utility_index(srcs[s]->data.province);
            util_[u].opex += grid * price * sd.weight;
            util_[u].grid_kwh += grid * sd.weight;
            sum.pump_kwh += kw * sd.weight;
            sum.pv_kwh += from_pv * sd.weight;
            sum.grid_kwh += grid * sd.weight;
            sum.energy_cost += grid * price * sd.weight;
            rec.pump_kw += kw;
        }
        if (opt_.record_hours)
            out_.hours.push_back(rec);
    }

    void year_end(int y, YearSummary& sum, const std::map<std::string, double>& muni_demand,
                  const std::map<std::string, double>& muni_delivered, const std::map<std::string, double>& source_volume)
    {
        auto& obs = out_.observations.values;
        for (const auto& s : st_.sources) {
            if (s.data.type != assets::SourceType::Groundwater || !s.data.permit)
                continue;
            auto it = source_volume.find(s.data.id);
            if (it == source_volume.end())
                continue;
            util_[utility_index(s.data.province)].fines += assets::permit_fine(it->second, *s.data.permit, in_.permit_fines);
        }

        // revenue, NRW intervention, per-municipality records
        std::vector<std::vector<nrw::NrwMunicipality>> nrw_in(st_.utilities.size());
        std::vector<std::vector<std::size_t>> nrw_idx(st_.utilities.size());
        for (std::size_t i : muni_idx_) {
            auto& m = st_.municipalities[i];
            const std::size_t u = utility_index(m.data.province);
            const std::string& uid = st_.utilities[u].id;
            const double dem = muni_demand.count(m.data.id) ? muni_demand.at(m.data.id) : 0.0;
            const double del = muni_delivered.count(m.data.id) ? muni_delivered.at(m.data.id) : 0.0;
            const double fixed = driver("tariff_fixed", uid, y);
            const double vol = driver("tariff_volumetric", uid, y);
            util_[u].revenue += economy::tariff_revenue(m.data.houses, fixed, del, vol);
            out_.municipalities.push_back({m.data.id, uid, y, m.data.population, m.data.dist_net_avg_age,
                                           std::string(nrw::class_name(in_.nrw.table.classify(m.data.dist_net_avg_age))),
                                           m.nrw_demand, dem, del});
            const double income = muni_income(m, y);
            for (const auto& hc : classes_) {
                out_.tables.cells.push_back({uid, m.data.id, hc.id, y, dem * hc.share, del * hc.share});
                out_.tables.afford.push_back({uid, m.data.id, hc.id, y, vol, fixed,
                                              kpi::lifeline_volume(hc.household_size, in_.economy.lifeline_per_person),
                                              in_.economy.base_monthly_income * income * hc.income_factor,
                                              m.data.houses * hc.share});
            }
            obs["consumption"][m.data.id][y] = del;
            obs["undelivered"][m.data.id][y] = std::max(0.0, dem - del);
            nrw_in[u].push_back({m.data.id, m.data.population, nrw::km_pipes(m.data.population), m.data.dist_net_avg_age});
            nrw_idx[u].push_back(i);
        }

        economy::MarketConditions market{in_.economy.risk_free, in_.economy.credit_spread,
                                         in_.economy.demand_sensitivity, driver("investor_demand", "national", y)};
        const double ef = driver("grid_emission_factor", "national", y);
        for (std::size_t u = 0; u < st_.utilities.size(); ++u) {
            auto& us = st_.utilities[u];
            UtilYear& a = util_[u];
            const double nrw_budget = us.nrw_share * a.allocated;
            if (nrw_budget > 0.0 && !nrw_in[u].empty()) {
                const auto res = nrw::apply_intervention(in_.nrw.table, nrw_in[u], nrw_budget, us.nrw_policy, in_.nrw.costs);
                for (std::size_t k = 0; k < nrw_idx[u].size(); ++k)
                    st_.municipalities[nrw_idx[u][k]].data.dist_net_avg_age = res.new_age[k];
                a.opex += res.spent;
            }

            std::vector<economy::Bond> own;
            for (const auto& b : st_.bonds)
                if (b.utility == us.id)
                    own.push_back(b);
            economy::LedgerYear l;
            l.utility = us.id;
            l.year = y;
            l.carry_in = us.carry;
            l.allocated = a.allocated;
            l.revenue = a.revenue;
            l.capex = a.capex;
            l.opex = a.opex;
            l.fines = a.fines;
            l.interest = kpi::bond_interest(own, y);
            for (const auto& b : own)
                if (b.maturity_year() == y)
                    l.principal_repaid += b.principal;
            if (auto bond = l.close(market, in_.economy.bond_maturity_years))
                st_.bonds.push_back(*bond);
            us.carry = l.remaining;
            out_.ledgers.push_back(l);

            std::vector<kpi::Asset> mine;
            for (const auto& as : st_.assets)
                if (as.utility == us.id)
                    mine.push_back(as);
            out_.tables.costs.push_back({us.id, y, kpi::annualized_capex(mine, y), a.opex + a.fines, l.interest,
                                         kpi::embedded_ghg(mine, y),
                                         kpi::operational_ghg(a.grid_kwh + a.treatment_kwh, ef)});
            obs["fines"][us.id][y] = a.fines;
        }
        out_.summaries.push_back(sum);
    }

    const Instance& in_;
    WorldState st_;
    const Masterplan& plan_;
    const scenario::ScenarioTrace& trace_;
    const RunOptions& opt_;
    demand::ProfileLibrary library_;
    std::map<int, double> inflation_;
    std::vector<domain::HouseholdClass> classes_;
    std::vector<std::size_t> order_;
    std::size_t next_ = 0;
    std::vector<UtilYear> util_;
    std::vector<std::size_t> muni_idx_;
    std::map<std::string, demand::DemandSeries> series_;
    int failed_total_ = 0;
    RunOutput out_;
};

}  // namespace

RunOutput run_stage(const Instance& instance, WorldState state, const Masterplan& plan,
                    const scenario::ScenarioTrace& trace, const RunOptions& options)
{
    return Simulator(instance, std::move(state), plan, trace, options).run();
}

StageBoundary step_stage_boundary(const Instance& instance, const RunOutput& previous, const Masterplan& next_plan,
                                  const scenario::ScenarioTrace& trace)
{
    StageBoundary b;
    b.state = previous.final_state;
    const int next_year = previous.first_year + previous.years;
    b.history = scenario::reveal_history(trace, previous.observations, previous.first_year, next_year);
    b.violations = validate_plan(next_plan, instance, &b.state, next_year);
    return b;
}

}  // namespace bwf::engine
