#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace bwf::scenario {

enum class DriverKind { BoundedWalk, MeanReverting, Ar1Lognormal, Sampled };
DriverKind parse_driver_kind(std::string_view text);  // throws ConfigError
std::string_view driver_kind_name(DriverKind k);

enum class Scope { National, Utility, Municipality };
Scope parse_scope(std::string_view text);
std::string_view scope_name(Scope s);

// Yearly driver. The mean path is base * start * (1 + growth)^t unless an
// explicit relative path is given; bounds are relative to the mean path:
// [m (1 - lower), m (1 + upper)]. For scoped drivers base is the entity's
// own starting value, for national drivers it is 1.
struct DriverSpec {
    std::string name;
    Scope scope = Scope::National;
    DriverKind kind = DriverKind::BoundedWalk;
    double start = 1.0;
    double growth = 0.0;
    std::vector<double> mean_path;  // optional expert path, relative, one value per year
    double lower = 0.0;
    double upper = 0.0;
    double volatility = 0.0;  // per-year step / innovation size, relative
    double reversion = 0.5;   // mean-reverting pull per year
    double phi = 0.7;         // AR(1) coefficient of the log deviation

    void validate() const;  // throws ConfigError
    double mean(int t) const;
};

// Two-state daily Markov chain for surface-water availability; low-flow
// spells start more often in summer.
struct DroughtSpec {
    double onset_summer = 0.01;  // P(available -> unavailable), June-September
    double onset_other = 0.001;
    double recovery = 0.2;       // P(unavailable -> available)

    void validate() const;
};

struct TraceRequest {
    std::vector<DriverSpec> drivers;
    std::map<Scope, std::vector<std::pair<std::string, double>>> scopes;  // entity id -> base value
    std::map<std::string, std::vector<std::pair<std::string, double>>> bases;  // per driver override
    DroughtSpec drought;
    std::vector<std::string> surface_sources;  // availability series ids
    std::uint64_t seed = 0;
    int start_year = 2025;
    int years = 25;
};

std::vector<std::string> required_drivers();

struct ScenarioTrace {
    std::uint64_t seed = 0;
    int start_year = 2025;
    int years = 0;
    // driver -> scope id -> one value per year
    std::map<std::string, std::map<std::string, std::vector<double>>> series;
    // surface source -> one 0/1 value per day (365 per year)
    std::map<std::string, std::vector<std::uint8_t>> availability;

    double value(const std::string& driver, const std::string& scope, int year) const;  // throws InputError
    bool available(const std::string& source, int year, int day_of_year) const;
    bool covers(int first_year, int last_year) const { return first_year >= start_year && last_year < start_year + years; }

    // Realized one-off uncertainty, keyed by parameter, entity and index; a
    // pure function of the seed.
    double realized(std::string_view parameter, std::string_view entity, std::int64_t index = 0) const;

    friend bool operator==(const ScenarioTrace&, const ScenarioTrace&) = default;
};

// Throws ConfigError listing every missing required driver.
void validate_request(const TraceRequest& request);
ScenarioTrace generate_trace(const TraceRequest& request);

// Columnar text, tab separated:
//   # bwf-trace format_version=1 seed=<u64> start_year=<y> years=<n>
//   series <driver> <scope> <year> <value %.17g>
//   availability <source> <year> <365 chars of 0/1>
void write_trace(std::ostream& out, const ScenarioTrace& trace);
ScenarioTrace read_trace(std::istream& in);  // throws InputError

// Observable quantities: prices, inflation, tariffs from the trace plus the
// run's own consumption, undelivered demand and fines. Everything else
// (population paths, hidden realizations) is withheld.
struct Observations {
    // quantity -> scope id -> year -> value
    std::map<std::string, std::map<std::string, std::map<int, double>>> values;
};

struct History {
    int first_year = 0;
    int up_to_year = 0;  // exclusive
    std::map<std::string, std::map<std::string, std::map<int, double>>> values;
};

bool observable(std::string_view quantity);
History reveal_history(const ScenarioTrace& trace, const Observations& run, int first_year, int up_to_year);

}  // namespace bwf::scenario
