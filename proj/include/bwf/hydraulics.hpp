#pragma once

#include "bwf/curve.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bwf::hydraulics {

inline constexpr double kWaterDensity = 1000.0;  // kg/m3
inline constexpr double kGravity = 9.81;         // m/s2

// Curves of one pump unit, both keyed by flow per unit in m3/h.
struct PumpCharacteristic {
    std::string option_id;
    TabulatedCurve head;        // m, strictly decreasing
    TabulatedCurve efficiency;  // (0, 1]

    void validate() const;
};

struct Junction {
    std::string id;
    double elevation = 0.0;  // m
    double demand = 0.0;     // m3/h
};

struct FixedHeadNode {
    std::string id;
    double head = 0.0;  // m
};

// Node indices: junctions occupy [0, junctions.size()), fixed-head nodes follow.
struct PipeLink {
    std::string id;
    int from = 0;
    int to = 0;
    double length = 0.0;    // m
    double diameter = 0.0;  // m
    double friction = 0.0;  // Darcy factor, held constant within a solve
};

// Identical units in parallel, flow only from -> to. A flow limit (m3/h for
// the whole group) models a throttling valve used to enforce daily caps.
struct PumpGroupLink {
    std::string id;
    int from = 0;
    int to = 0;
    std::shared_ptr<const PumpCharacteristic> pump;
    int units = 1;
    std::optional<double> flow_limit;
};

struct HydraulicNetwork {
    std::vector<Junction> junctions;
    std::vector<FixedHeadNode> fixed_heads;
    std::vector<PipeLink> pipes;
    std::vector<PumpGroupLink> pumps;

    int node_count() const { return static_cast<int>(junctions.size() + fixed_heads.size()); }
    int fixed_index(std::size_t k) const { return static_cast<int>(junctions.size() + k); }
    bool is_junction(int node) const { return node >= 0 && node < static_cast<int>(junctions.size()); }
    const std::string& node_id(int node) const;
    void validate() const;  // throws InputError
};

struct SolverOptions {
    double required_pressure = 30.0;  // m, full delivery at or above
    double minimum_pressure = 0.0;    // m, nothing delivered at or below
    double pressure_exponent = 0.5;
    double head_tolerance = 1e-8;     // m, max |dH| between iterations
    double mass_tolerance = 1e-7;     // m3/h, max junction imbalance at convergence
    int max_iterations = 200;
    double min_gradient = 1e-6;       // s/m2 floor on dh/dq for near-zero pipe flow
    double max_step = 1000.0;         // m, largest head change per iteration
    bool check_pump_range = true;
};

struct JunctionResult {
    double head = 0.0;
    double pressure = 0.0;
    double delivered = 0.0;    // m3/h
    double undelivered = 0.0;  // m3/h
    double mass_residual = 0.0;  // m3/h
    bool supplied = false;
};

struct PipeResult {
    double flow = 0.0;      // m3/h, positive from -> to
    double headloss = 0.0;  // m, f L/D v^2/(2g) signed with flow
};

struct PumpResult {
    double flow = 0.0;       // m3/h, whole group
    double head_gain = 0.0;  // m
    double hydraulic_kw = 0.0;
    double electric_kw = 0.0;
    bool running = false;
    bool flow_limited = false;
};

struct HydraulicSolution {
    std::vector<JunctionResult> junctions;
    std::vector<PipeResult> pipes;
    std::vector<PumpResult> pumps;
    bool converged = false;
    int iterations = 0;
    double max_mass_residual = 0.0;

    double total_demand() const;
    double total_delivered() const;
    double total_undelivered() const;
    double total_electric_kw() const;
};

// Delivered fraction of demand at a given pressure (Wagner form).
double delivered_fraction(double pressure, const SolverOptions& options);

// Pipe resistance r in h = r q|q| with q in m3/s.
double pipe_resistance(double length, double diameter, double friction);

// Electric input of one unit in kW, eta interpolated on the efficiency curve.
// Throws ExtrapolationError when the flow is outside the tabulated domain.
double pump_electric_power(const PumpCharacteristic& pump, double flow_per_unit, double head);

// Steady-state pressure-driven solve. Never returns a silently wrong result:
// non-convergence is flagged in the solution, an out-of-range pump operating
// point raises PumpRangeError naming the station.
HydraulicSolution solve_step(const HydraulicNetwork& network, const SolverOptions& options = {});

// Plain-text dump of a solved step (stable column layout, for diffing).
void write_snapshot(std::ostream& out, const HydraulicNetwork& network, const HydraulicSolution& solution);

// EPANET INP export for cross-validation. Flow units CMH, Darcy-Weisbach
// headloss; the constant friction factor is mapped to the equivalent
// fully-rough roughness height.
void write_inp(std::ostream& out, const HydraulicNetwork& network, const std::string& title);

}  // namespace bwf::hydraulics
