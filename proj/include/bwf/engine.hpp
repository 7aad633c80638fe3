#pragma once

#include "bwf/domain.hpp"
#include "bwf/kpi.hpp"
#include "bwf/scenario.hpp"

#include <atomic>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bwf::engine {

enum class InterventionType { OpenSource, CloseSource, InstallPipe, ReplacePipe, SetPumps, InstallPv, NrwBudget, BudgetRule };
InterventionType parse_intervention_type(std::string_view text);  // throws InputError
std::string_view intervention_type_name(InterventionType t);

struct Intervention {
    InterventionType type = InterventionType::OpenSource;
    Date date;
    std::string target;  // site, source, connection, station or utility id
    // open_source
    std::optional<assets::SourceType> source_type;
    double nominal_capacity = 0.0;
    double target_factor = 0.8;
    // install_pipe, replace_pipe, open_source and set_pumps
    std::string option;
    int count = 0;
    // install_pv
    double capacity_kw = 0.0;
    // nrw_budget
    double share = 0.0;
    nrw::Policy policy = nrw::Policy::ByLeakClass;
    // budget_rule
    economy::BudgetRule rule = economy::BudgetRule::PerCapita;
    std::vector<double> weights;
};

struct Masterplan {
    int format_version = 1;
    std::vector<std::string> utilities;  // empty means every utility
    int horizon_years = 25;
    std::vector<Intervention> interventions;
};

struct Violation {
    std::string code;
    std::size_t index = 0;  // intervention position
    std::string message;
};

// Every static rule, all violations reported. With a carried state the plan
// is also checked against what already happened (closed sources, used sites,
// installed pipes) and its dates must fall in the new stage.
std::vector<Violation> validate_plan(const Masterplan& plan, const domain::Instance& instance,
                                     const domain::WorldState* carried = nullptr, int stage_start_year = 0);

enum class SimMode { Full, Representative };
SimMode parse_mode(std::string_view text);  // "full" or "rep"/"representative"
std::string_view mode_name(SimMode m);

struct SimulatedDay {
    int day = 0;          // 0-based day of year
    double weight = 1.0;  // calendar days represented
};

// Full: every day once. Representative: the first 7 days of each month,
// weighted days-in-month / 7.
std::vector<SimulatedDay> simulated_days(SimMode mode);

struct RunOptions {
    SimMode mode = SimMode::Representative;
    int years = 25;
    bool record_hours = true;
    std::function<void(int year, int done, int total)> progress;
    const std::atomic<bool>* cancel = nullptr;
};

struct YearSummary {
    int year = 0;
    double demand = 0.0;       // billable m3
    double delivered = 0.0;    // billable m3
    double nrw_demand = 0.0;   // m3
    double nrw_delivered = 0.0;
    double source_outflow = 0.0;
    double pump_kwh = 0.0;
    double treatment_kwh = 0.0;
    double pv_kwh = 0.0;
    double grid_kwh = 0.0;
    double energy_cost = 0.0;
    int failed_steps = 0;
    int solves = 0;
};

struct HourRecord {
    int year = 0;
    int day = 0;
    int hour = 0;
    double demand = 0.0;  // m3/h incl. NRW
    double delivered = 0.0;
    double pump_kw = 0.0;
    int iterations = 0;
    bool converged = true;
};

struct SourceDay {
    std::string source;
    int year = 0;
    int day = 0;
    double outflow = 0.0;  // m3
    double nominal = 0.0;
    bool available = true;
    bool surface = false;
};

struct MuniYear {
    std::string municipality;
    std::string utility;
    int year = 0;
    double population = 0.0;
    double avg_age = 0.0;
    std::string nrw_class;
    double nrw_demand = 0.0;  // m3/day
    double demand = 0.0;      // billable m3/year
    double delivered = 0.0;
};

struct RunOutput {
    std::string instance_name;
    std::uint64_t seed = 0;
    SimMode mode = SimMode::Representative;
    int first_year = 0;
    int years = 0;
    std::vector<YearSummary> summaries;
    std::vector<economy::LedgerYear> ledgers;
    std::vector<economy::Bond> bonds;  // every bond outstanding or issued, carried included
    std::vector<HourRecord> hours;
    std::vector<SourceDay> source_days;
    std::vector<MuniYear> municipalities;
    kpi::Tables tables;
    scenario::Observations observations;
    domain::WorldState final_state;
};

// Simulates [state.clock.year, state.clock.year + years). Throws
// SimulationAbort once failed hourly solves exceed the instance budget.
RunOutput run_stage(const domain::Instance& instance, domain::WorldState state, const Masterplan& plan,
                    const scenario::ScenarioTrace& trace, const RunOptions& options);

struct StageBoundary {
    domain::WorldState state;
    scenario::History history;
    std::vector<Violation> violations;  // non-empty means the new plan was rejected
};

StageBoundary step_stage_boundary(const domain::Instance& instance, const RunOutput& previous,
                                  const Masterplan& next_plan, const scenario::ScenarioTrace& trace);

}  // namespace bwf::engine
