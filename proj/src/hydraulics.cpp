#include "bwf/hydraulics.hpp"

#include "bwf/error.hpp"
#include "bwf/simd/kernels.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <queue>

namespace bwf::hydraulics {

namespace {

constexpr double kSecondsPerHour = 3600.0;

// Group flow of a pump as a function of lift, with the curve extended
// linearly past its ends. Zero at or above shutoff head (check valve), capped
// by the throttle limit. Monotone, so it fits the convex nodal formulation.
struct PumpFlow {
    double flow = 0.0;        // m3/s
    double derivative = 0.0;  // m3/s per m of head difference (from - to)
    double unthrottled = 0.0; // m3/s
};

PumpFlow pump_flow(const PumpGroupLink& link, double lift)
{
    PumpFlow out;
    if (link.flow_limit && *link.flow_limit <= 0.0)
        return out;
    const TabulatedCurve& curve = link.pump->head;
    const auto& pts = curve.points();
    const double shutoff = curve.value_extended(0.0);
    if (lift >= shutoff)
        return out;
    // find the segment whose head range brackets the lift; heads decrease
    std::size_t seg = 0;
    while (seg + 2 < pts.size() && lift < pts[seg + 1].second)
        ++seg;
    const auto& [x0, h0] = pts[seg];
    const auto& [x1, h1] = pts[seg + 1];
    const double slope = (h1 - h0) / (x1 - x0);  // m per m3/h, negative
    const double per_unit = std::max(0.0, x0 + (lift - h0) / slope);
    out.unthrottled = per_unit * link.units / kSecondsPerHour;
    out.flow = out.unthrottled;
    out.derivative = link.units / (-slope) / kSecondsPerHour;
    if (link.flow_limit && out.flow * kSecondsPerHour > *link.flow_limit) {
        out.flow = *link.flow_limit / kSecondsPerHour;
        out.derivative = 0.0;
    }
    return out;
}

// Damped Newton on junction heads. Pipe flow, pump flow and pressure-driven
// outflow are all monotone in head, so the nodal balance is the gradient of
// a convex potential; the step is halved while the balance along the search
// direction still points uphill, which guarantees descent of that potential.
class NodalSolver {
public:
    NodalSolver(const HydraulicNetwork& network, const SolverOptions& options)
        : net_(network), opt_(options)
    {
    }

    HydraulicSolution run();

private:
    void compute_reachability();
    // Junction imbalance (outflow + demand - inflow, m3/s); fills the
    // Jacobian when given.
    void balance(const std::vector<double>& head, std::vector<double>& f, Eigen::MatrixXd* jacobian);
    HydraulicSolution collect(bool converged, int iterations) const;

    const HydraulicNetwork& net_;
    const SolverOptions& opt_;

    std::vector<double> head_;  // per node, m
    std::vector<double> resistance_;
    std::vector<int> row_;      // junction -> matrix row, -1 when unsupplied
    std::vector<int> active_pipes_;
    std::vector<double> dh_, q_, dq_;
    int rows_ = 0;
};

void NodalSolver::compute_reachability()
{
    const int n = net_.node_count();
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (const PipeLink& p : net_.pipes) {
        adj[static_cast<std::size_t>(p.from)].push_back(p.to);
        adj[static_cast<std::size_t>(p.to)].push_back(p.from);
    }
    for (const PumpGroupLink& p : net_.pumps)
        if (!p.flow_limit || *p.flow_limit > 0.0)
            adj[static_cast<std::size_t>(p.from)].push_back(p.to);

    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::queue<int> frontier;
    for (std::size_t k = 0; k < net_.fixed_heads.size(); ++k) {
        int node = net_.fixed_index(k);
        seen[static_cast<std::size_t>(node)] = 1;
        frontier.push(node);
    }
    while (!frontier.empty()) {
        int node = frontier.front();
        frontier.pop();
        for (int next : adj[static_cast<std::size_t>(node)]) {
            if (!seen[static_cast<std::size_t>(next)]) {
                seen[static_cast<std::size_t>(next)] = 1;
                frontier.push(next);
            }
        }
    }

    row_.assign(net_.junctions.size(), -1);
    rows_ = 0;
    for (std::size_t j = 0; j < net_.junctions.size(); ++j)
        if (seen[j])
            row_[j] = rows_++;
    active_pipes_.clear();
    for (std::size_t k = 0; k < net_.pipes.size(); ++k) {
        const PipeLink& p = net_.pipes[k];
        bool a = net_.is_junction(p.from) && row_[static_cast<std::size_t>(p.from)] >= 0;
        bool b = net_.is_junction(p.to) && row_[static_cast<std::size_t>(p.to)] >= 0;
        if (a || b)
            active_pipes_.push_back(static_cast<int>(k));
    }
}

void NodalSolver::balance(const std::vector<double>& head, std::vector<double>& f, Eigen::MatrixXd* jacobian)
{
    f.assign(static_cast<std::size_t>(rows_), 0.0);
    if (jacobian)
        jacobian->setZero(rows_, rows_);
    auto row_of = [&](int node) { return net_.is_junction(node) ? row_[static_cast<std::size_t>(node)] : -1; };
    auto add_link = [&](int from, int to, double q, double dq) {
        int ra = row_of(from);
        int rb = row_of(to);
        if (ra >= 0)
            f[static_cast<std::size_t>(ra)] += q;
        if (rb >= 0)
            f[static_cast<std::size_t>(rb)] -= q;
        if (!jacobian)
            return;
        if (ra >= 0)
            (*jacobian)(ra, ra) += dq;
        if (rb >= 0)
            (*jacobian)(rb, rb) += dq;
        if (ra >= 0 && rb >= 0) {
            (*jacobian)(ra, rb) -= dq;
            (*jacobian)(rb, ra) -= dq;
        }
    };

    const std::size_t np = active_pipes_.size();
    dh_.resize(np);
    q_.resize(np);
    dq_.resize(np);
    std::vector<double> r(np);
    for (std::size_t i = 0; i < np; ++i) {
        const PipeLink& p = net_.pipes[static_cast<std::size_t>(active_pipes_[i])];
        dh_[i] = head[static_cast<std::size_t>(p.from)] - head[static_cast<std::size_t>(p.to)];
        r[i] = resistance_[static_cast<std::size_t>(active_pipes_[i])];
    }
    simd::active().pipe_flows(np, r.data(), dh_.data(), opt_.min_gradient, q_.data(), dq_.data());
    for (std::size_t i = 0; i < np; ++i) {
        const PipeLink& p = net_.pipes[static_cast<std::size_t>(active_pipes_[i])];
        add_link(p.from, p.to, q_[i], dq_[i]);
    }

    for (const PumpGroupLink& p : net_.pumps) {
        if (row_of(p.from) < 0 && row_of(p.to) < 0)
            continue;
        double lift = head[static_cast<std::size_t>(p.to)] - head[static_cast<std::size_t>(p.from)];
        PumpFlow pf = pump_flow(p, lift);
        add_link(p.from, p.to, pf.flow, pf.derivative);
    }

    const double band = opt_.required_pressure - opt_.minimum_pressure;
    const double e = opt_.pressure_exponent;
    constexpr double kLowEnd = 1e-8;
    for (std::size_t j = 0; j < net_.junctions.size(); ++j) {
        int rj = row_[j];
        if (rj < 0)
            continue;
        const Junction& junction = net_.junctions[j];
        const double full = junction.demand / kSecondsPerHour;
        const double x = (head[j] - junction.elevation - opt_.minimum_pressure) / band;
        f[static_cast<std::size_t>(rj)] += full * delivered_fraction(head[j] - junction.elevation, opt_);
        if (jacobian && full > 0.0 && x > 0.0 && x < 1.0)
            (*jacobian)(rj, rj) += full * e * std::pow(std::max(x, kLowEnd), e - 1.0) / band;
    }
}

HydraulicSolution NodalSolver::run()
{
    net_.validate();
    const std::size_t nj = net_.junctions.size();
    head_.assign(static_cast<std::size_t>(net_.node_count()), 0.0);
    double max_head = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < net_.fixed_heads.size(); ++k) {
        head_[nj + k] = net_.fixed_heads[k].head;
        max_head = std::max(max_head, net_.fixed_heads[k].head);
    }
    for (std::size_t j = 0; j < nj; ++j)
        head_[j] = std::isfinite(max_head) ? max_head : net_.junctions[j].elevation;
    resistance_.resize(net_.pipes.size());
    for (std::size_t k = 0; k < net_.pipes.size(); ++k) {
        const PipeLink& p = net_.pipes[k];
        resistance_[k] = pipe_resistance(p.length, p.diameter, p.friction);
    }
    compute_reachability();
    if (rows_ == 0)
        return collect(true, 0);

    Eigen::MatrixXd jacobian;
    Eigen::VectorXd rhs(rows_);
    Eigen::LLT<Eigen::MatrixXd> llt;
    std::vector<double> f, trial_f;
    std::vector<double> trial(head_.size());
    constexpr int kMaxHalvings = 60;
    auto norm = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v)
            m = std::max(m, std::fabs(x));
        return m;
    };

    balance(head_, f, &jacobian);
    for (int it = 1; it <= opt_.max_iterations; ++it) {
        // Flat regions (closed check valve, throttled pump, fully served or
        // dry junction) can leave a junction without any head sensitivity.
        double diag = jacobian.diagonal().cwiseAbs().maxCoeff();
        double ridge = std::max(diag, 1e-12) * 1e-12;
        for (int i = 0; i < rows_; ++i)
            jacobian(i, i) += ridge;
        llt.compute(jacobian);
        if (llt.info() != Eigen::Success)
            return collect(false, it);
        for (int i = 0; i < rows_; ++i)
            rhs(i) = -f[static_cast<std::size_t>(i)];
        Eigen::VectorXd step = llt.solve(rhs);
        double longest = step.cwiseAbs().maxCoeff();
        if (longest > opt_.max_step)
            step *= opt_.max_step / longest;

        const double f_norm = norm(f);
        double alpha = 1.0;
        for (int h = 0;; ++h) {
            trial = head_;
            for (std::size_t j = 0; j < nj; ++j)
                if (row_[j] >= 0)
                    trial[j] += alpha * step(row_[j]);
            balance(trial, trial_f, nullptr);
            double slope = 0.0;
            for (int i = 0; i < rows_; ++i)
                slope += trial_f[static_cast<std::size_t>(i)] * step(i);
            if (slope <= 0.0 || norm(trial_f) <= 0.5 * f_norm || h == kMaxHalvings)
                break;
            alpha *= 0.5;
        }
        head_ = trial;
        balance(head_, f, &jacobian);
        if (alpha * step.cwiseAbs().maxCoeff() < opt_.head_tolerance &&
            norm(f) * kSecondsPerHour < opt_.mass_tolerance)
            return collect(true, it);
    }
    return collect(false, opt_.max_iterations);
}

HydraulicSolution NodalSolver::collect(bool converged, int iterations) const
{
    HydraulicSolution out;
    out.converged = converged;
    out.iterations = iterations;
    out.junctions.resize(net_.junctions.size());
    out.pipes.resize(net_.pipes.size());
    out.pumps.resize(net_.pumps.size());

    auto supplied = [&](int node) { return !net_.is_junction(node) || row_[static_cast<std::size_t>(node)] >= 0; };
    std::vector<double> balance(net_.junctions.size(), 0.0);
    for (std::size_t k = 0; k < net_.pipes.size(); ++k) {
        const PipeLink& link = net_.pipes[k];
        double q = 0.0;
        if (supplied(link.from) && supplied(link.to)) {
            double dh = head_[static_cast<std::size_t>(link.from)] - head_[static_cast<std::size_t>(link.to)];
            q = std::copysign(std::sqrt(std::fabs(dh) / resistance_[k]), dh);
        }
        out.pipes[k].flow = q * kSecondsPerHour;
        out.pipes[k].headloss = resistance_[k] * q * std::fabs(q);
        if (net_.is_junction(link.from))
            balance[static_cast<std::size_t>(link.from)] -= out.pipes[k].flow;
        if (net_.is_junction(link.to))
            balance[static_cast<std::size_t>(link.to)] += out.pipes[k].flow;
    }
    for (std::size_t k = 0; k < net_.pumps.size(); ++k) {
        const PumpGroupLink& pump = net_.pumps[k];
        PumpResult& r = out.pumps[k];
        PumpFlow pf;
        if (supplied(pump.from) && supplied(pump.to))
            pf = pump_flow(pump, head_[static_cast<std::size_t>(pump.to)] - head_[static_cast<std::size_t>(pump.from)]);
        r.flow = pf.flow * kSecondsPerHour;
        r.running = r.flow > 0.0;
        r.flow_limited = r.running && pf.flow < pf.unthrottled;
        if (r.running) {
            const double per_unit = r.flow / pump.units;
            const bool inside = pump.pump->head.in_domain(per_unit);
            if (!inside && converged && opt_.check_pump_range)
                throw PumpRangeError(pump.id, per_unit, per_unit > pump.pump->head.max_x());
            r.head_gain = pump.pump->head.value_extended(per_unit);
            r.hydraulic_kw = kWaterDensity * kGravity * pf.flow * r.head_gain / 1000.0;
            if (inside)
                r.electric_kw = pump.units * pump_electric_power(*pump.pump, per_unit, r.head_gain);
        }
        if (net_.is_junction(pump.from))
            balance[static_cast<std::size_t>(pump.from)] -= r.flow;
        if (net_.is_junction(pump.to))
            balance[static_cast<std::size_t>(pump.to)] += r.flow;
    }

    for (std::size_t j = 0; j < net_.junctions.size(); ++j) {
        const Junction& junction = net_.junctions[j];
        JunctionResult& r = out.junctions[j];
        r.supplied = row_[j] >= 0;
        if (r.supplied) {
            r.head = head_[j];
            r.pressure = head_[j] - junction.elevation;
            r.delivered = junction.demand * delivered_fraction(r.pressure, opt_);
            r.mass_residual = std::fabs(balance[j] - r.delivered);
        } else {
            r.head = junction.elevation;
            r.pressure = 0.0;
            r.delivered = 0.0;
            r.mass_residual = std::fabs(balance[j]);
        }
        r.undelivered = std::max(junction.demand - r.delivered, 0.0);
        out.max_mass_residual = std::max(out.max_mass_residual, r.mass_residual);
    }
    return out;
}

}  // namespace

void PumpCharacteristic::validate() const
{
    if (head.empty() || efficiency.empty())
        throw InputError("pump option '" + option_id + "' is missing a curve");
    if (!head.strictly_decreasing())
        throw InputError("pump option '" + option_id + "' head curve must be strictly decreasing");
    if (head.min_x() != efficiency.min_x() || head.max_x() != efficiency.max_x())
        throw InputError("pump option '" + option_id + "' head and efficiency curves must share a domain");
    if (head.min_x() < 0.0)
        throw InputError("pump option '" + option_id + "' curve flows must be non-negative");
    for (const auto& [q, eta] : efficiency.points())
        if (!(eta > 0.0 && eta <= 1.0))
            throw InputError("pump option '" + option_id + "' efficiency must lie in (0, 1]");
}

const std::string& HydraulicNetwork::node_id(int node) const
{
    if (is_junction(node))
        return junctions[static_cast<std::size_t>(node)].id;
    return fixed_heads[static_cast<std::size_t>(node) - junctions.size()].id;
}

void HydraulicNetwork::validate() const
{
    const int n = node_count();
    auto check_node = [&](int node, const std::string& link) {
        if (node < 0 || node >= n)
            throw InputError("link '" + link + "' references node index " + std::to_string(node) + " out of range");
    };
    for (const PipeLink& p : pipes) {
        check_node(p.from, p.id);
        check_node(p.to, p.id);
        if (p.from == p.to)
            throw InputError("pipe '" + p.id + "' connects a node to itself");
        if (!(p.diameter > 0.0) || !(p.length > 0.0) || !(p.friction > 0.0))
            throw InputError("pipe '" + p.id + "' needs positive length, diameter and friction factor");
    }
    for (const PumpGroupLink& p : pumps) {
        check_node(p.from, p.id);
        check_node(p.to, p.id);
        if (!p.pump)
            throw InputError("pump group '" + p.id + "' has no pump option");
        if (p.units < 1)
            throw InputError("pump group '" + p.id + "' needs at least one unit");
        p.pump->validate();
    }
    for (const Junction& j : junctions)
        if (j.demand < 0.0)
            throw InputError("junction '" + j.id + "' has negative demand");
}

double HydraulicSolution::total_demand() const
{
    double total = 0.0;
    for (const auto& j : junctions)
        total += j.delivered + j.undelivered;
    return total;
}

double HydraulicSolution::total_delivered() const
{
    double total = 0.0;
    for (const auto& j : junctions)
        total += j.delivered;
    return total;
}

double HydraulicSolution::total_undelivered() const
{
    double total = 0.0;
    for (const auto& j : junctions)
        total += j.undelivered;
    return total;
}

double HydraulicSolution::total_electric_kw() const
{
    double total = 0.0;
    for (const auto& p : pumps)
        total += p.electric_kw;
    return total;
}

double delivered_fraction(double pressure, const SolverOptions& options)
{
    if (pressure >= options.required_pressure)
        return 1.0;
    if (pressure <= options.minimum_pressure)
        return 0.0;
    double x = (pressure - options.minimum_pressure) / (options.required_pressure - options.minimum_pressure);
    return std::pow(x, options.pressure_exponent);
}

double pipe_resistance(double length, double diameter, double friction)
{
    // h = f (L/D) v^2 / (2g), v = 4q / (pi D^2)  =>  h = 8 f L q^2 / (g pi^2 D^5)
    const double pi2 = std::numbers::pi * std::numbers::pi;
    return 8.0 * friction * length / (kGravity * pi2 * std::pow(diameter, 5));
}

double pump_electric_power(const PumpCharacteristic& pump, double flow_per_unit, double head)
{
    double eta = pump.efficiency.value(flow_per_unit);
    return kWaterDensity * kGravity * (flow_per_unit / kSecondsPerHour) * head / eta / 1000.0;
}

HydraulicSolution solve_step(const HydraulicNetwork& network, const SolverOptions& options)
{
    NodalSolver solver(network, options);
    return solver.run();
}

}  // namespace bwf::hydraulics
