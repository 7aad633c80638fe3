#pragma once

#include "bwf/assets.hpp"
#include "bwf/date.hpp"
#include "bwf/demand.hpp"
#include "bwf/economy.hpp"
#include "bwf/hydraulics.hpp"
#include "bwf/kpi.hpp"
#include "bwf/nrw.hpp"
#include "bwf/scenario.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bwf::domain {

struct Utility {
    std::string id;
    std::string province;
};

enum class Disposition { Absorbed, Clustered };

struct EndDisposition {
    Disposition kind = Disposition::Absorbed;
    std::string target;  // municipality id
};

struct Municipality {
    std::string id;
    std::string name;
    double latitude = 0.0;
    double longitude = 0.0;
    double elevation = 0.0;
    std::string province;
    Date begin_date;
    std::optional<Date> end_date;
    std::optional<EndDisposition> end;
    double population = 0.0;
    double surface_land = 0.0;
    double surface_water_inland = 0.0;
    double surface_water_open = 0.0;
    double houses = 0.0;
    double businesses = 0.0;
    double dist_net_length = 0.0;  // km
    double dist_net_avg_age = 0.0;  // years
    double income_index = 1.0;
};

struct PvEntry {
    Date install_date;
    double capacity_kw = 0.0;
};

struct PumpingStation {
    std::string id;
    std::string pump_option;
    int pump_count = 1;
    std::vector<int> pump_install_years;  // per unit; empty means the start year
    std::vector<PvEntry> pv;
};

struct WaterSource {
    std::string id;
    assets::SourceType type = assets::SourceType::Groundwater;
    double latitude = 0.0;
    double longitude = 0.0;
    double elevation = 0.0;
    std::string province;
    std::string connected_municipality;
    Date activation_date;
    std::optional<Date> closure_date;
    double nominal_capacity = 0.0;  // m3/day
    double target_factor = 0.8;
    std::optional<double> permit;        // m3/year, groundwater
    std::optional<double> max_capacity;  // m3/day, surface and desalination
    PumpingStation station;
};

// Location offered for a new source.
struct Site {
    std::string id;
    assets::SourceType type = assets::SourceType::Groundwater;
    double latitude = 0.0;
    double longitude = 0.0;
    double elevation = 0.0;
    std::string province;
    std::string connected_municipality;
    std::optional<double> permit;
    std::optional<double> max_capacity;
    int construction_min_years = 1;
    int construction_max_years = 3;
};

struct InstalledPipe {
    std::string option;
    Date install_date;
};

struct Connection {
    std::string id;
    std::string node_a;
    std::string node_b;
    double distance = 0.0;  // m
    std::optional<InstalledPipe> pipe;
};

struct HouseholdClass {
    std::string id;
    double share = 1.0;          // of households
    double income_factor = 1.0;  // times the municipality income
    double household_size = 2.2;
};

struct EconomyParams {
    double risk_free = 0.03;
    double credit_spread = 0.01;
    double demand_sensitivity = 0.02;
    int bond_maturity_years = 20;
    double base_monthly_income = 2500.0;  // EUR per household at income index 1
    double lifeline_per_person = 1.5;     // m3/month
    economy::BudgetRule budget_rule = economy::BudgetRule::PerCapita;
};

struct NrwParams {
    nrw::NrwClassTable table;
    nrw::InterventionCosts costs;
    nrw::Policy default_policy = nrw::Policy::ByLeakClass;
};

struct DemandParams {
    demand::SeasonalParams seasonal;
    double perturbation_sigma = 0.05;
    std::optional<double> national_target_per_capita;  // m3/person/year
};

struct EnergyParams {
    economy::DailyShape price_shape = economy::DailyShape::flat();
    double pv_peak_factor = 0.75;
    double pv_embedded_per_kw = 0.0;  // tCO2eq/kW
};

struct Catalogs {
    std::map<std::string, assets::PumpOption> pumps;
    std::map<std::string, assets::PipeOption> pipes;
    assets::SourceCostModel source_costs;
};

struct Instance {
    int format_version = 1;
    std::string name;
    int start_year = 2025;
    std::vector<Utility> utilities;
    std::vector<Municipality> municipalities;
    std::vector<WaterSource> sources;
    std::vector<Site> sites;
    std::vector<Connection> connections;
    Catalogs catalogs;
    EconomyParams economy;
    NrwParams nrw;
    DemandParams demand;
    std::vector<HouseholdClass> household_classes;
    EnergyParams energy;
    std::vector<scenario::DriverSpec> drivers;
    scenario::DroughtSpec drought;
    hydraulics::SolverOptions solver;
    assets::FineSchedule permit_fines;
    assets::DecayLaw decay_law = assets::DecayLaw::Linear;
    int failure_budget = 100;  // failed hourly solves tolerated per run

    const Municipality* find_municipality(const std::string& id) const;
    const WaterSource* find_source(const std::string& id) const;
    const Site* find_site(const std::string& id) const;
    const Connection* find_connection(const std::string& id) const;
    const Utility* utility_of_province(const std::string& province) const;

    // Checks every entity invariant and cross reference; returns messages
    // prefixed with the entity path, empty when valid.
    std::vector<std::string> check() const;
    void validate() const;  // throws ValidationError with all messages
};

// Trace request for an instance: every municipality of the instance carries
// its own population and income series, every utility its tariffs, every
// surface source and surface site an availability series.
scenario::TraceRequest trace_request(const Instance& instance, std::uint64_t seed, int years);

// Runtime state.
struct PipeState {
    std::string option;
    int install_year = 0;
    int generation = 0;
    double friction_new = 0.0;
    double decay_rate = 0.0;
    double friction = 0.0;
    double diameter = 0.0;
};

struct ConnectionState {
    std::string id;
    std::string node_a;
    std::string node_b;
    double distance = 0.0;
    bool hidden = false;
    std::optional<PipeState> pipe;
    std::optional<Date> pipe_active_from;
};

struct Member {
    std::string id;  // original municipality carrying the trace series
    double base_population = 0.0;
    double base_houses = 0.0;
    double base_businesses = 0.0;
};

struct MunicipalityState {
    Municipality data;
    bool open = false;
    std::vector<Member> members;
    double nrw_demand = 0.0;  // m3/day for the current year
    std::optional<EndDisposition> ended;
    std::optional<Date> last_event;  // same-date chained events are rejected
};

struct SourceState {
    WaterSource data;
    bool closed = false;
    std::optional<Date> closed_on;
    std::vector<assets::PumpUnit> pumps;
    std::vector<assets::PvInstallation> pv;
    bool from_plan = false;

    bool active_on(const Date& d) const
    {
        return d >= data.activation_date && !(closed_on && d >= *closed_on) &&
               !(data.closure_date && d >= *data.closure_date);
    }
};

struct UtilityState {
    std::string id;
    std::string province;
    double carry = 0.0;  // remaining budget carried into next year
    double nrw_share = 0.0;
    nrw::Policy nrw_policy = nrw::Policy::ByLeakClass;
};

struct WorldState {
    Date clock;
    std::vector<UtilityState> utilities;
    std::vector<MunicipalityState> municipalities;
    std::vector<SourceState> sources;
    std::vector<ConnectionState> connections;
    std::vector<economy::Bond> bonds;
    std::vector<kpi::Asset> assets;  // capital interventions for the annualized terms
    economy::BudgetRule budget_rule = economy::BudgetRule::PerCapita;
    std::vector<double> budget_weights;
    std::vector<std::string> used_sites;

    MunicipalityState* municipality(const std::string& id);
    const MunicipalityState* municipality(const std::string& id) const;
    SourceState* source(const std::string& id);
    const SourceState* source(const std::string& id) const;
    ConnectionState* connection(const std::string& id);
    const ConnectionState* connection(const std::string& id) const;
    UtilityState* utility_of_province(const std::string& province);
    double open_population() const;
};

// Initial state at Jan 1 of the start year; realized pipe decay rates and
// pump lifetimes come from the trace.
WorldState initial_state(const Instance& instance, const scenario::ScenarioTrace& trace);

// Realized parameters shared by the initial state and the engine.
double pipe_decay_rate(const assets::PipeOption& option, const scenario::ScenarioTrace& trace,
                       const std::string& connection, int generation);
int pump_lifetime(const assets::PumpOption& option, const scenario::ScenarioTrace& trace, const std::string& station,
                  std::size_t unit, int generation);

struct LifecycleEvent {
    enum class Kind { Absorb, Cluster } kind = Kind::Absorb;
    std::vector<std::string> sources;  // one for absorb
    std::string target;
};

// Absorb: the destination gains the additive attributes, age merges
// length-weighted, links between the two become hidden and the source's other
// links and water sources move to the destination. Cluster: all members close
// and the new municipality opens with the union of their external links.
void apply_lifecycle_event(WorldState& state, const LifecycleEvent& event, const Date& date);

// Events scheduled in the instance for a Jan 1; clustered members sharing a
// target form one event.
std::vector<LifecycleEvent> lifecycle_events_on(const Instance& instance, const Date& date);

struct NetworkNode {
    std::string id;
    std::string kind;  // municipality or source
    double latitude = 0.0;
    double longitude = 0.0;
    double elevation = 0.0;
    std::string province;
};

struct NetworkEdge {
    std::string id;
    std::string kind;  // pipe or station
    std::string a;
    std::string b;
    double length = 0.0;
    double diameter = 0.0;
    double friction = 0.0;
    std::string option;
};

struct NetworkView {
    std::vector<NetworkNode> nodes;  // sorted by id
    std::vector<NetworkEdge> edges;  // sorted by id
};

NetworkView visible_network(const WorldState& state, const Date& date);

}  // namespace bwf::domain
