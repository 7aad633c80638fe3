#include "bwf/hydraulics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace bwf::hydraulics {

namespace {

std::string fmt(const char* pattern, double value)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, value);
    return buf;
}

}  // namespace

void write_snapshot(std::ostream& out, const HydraulicNetwork& network, const HydraulicSolution& solution)
{
    out << "# hydraulic snapshot v1\n";
    out << "# converged " << (solution.converged ? 1 : 0) << " iterations " << solution.iterations << "\n";
    out << "[junctions]\n# id\televation_m\tdemand_m3h\thead_m\tpressure_m\tdelivered_m3h\tundelivered_m3h\n";
    for (std::size_t j = 0; j < network.junctions.size(); ++j) {
        const Junction& n = network.junctions[j];
        const JunctionResult& r = solution.junctions[j];
        out << n.id << '\t' << fmt("%.6f", n.elevation) << '\t' << fmt("%.6f", n.demand) << '\t'
            << fmt("%.6f", r.head) << '\t' << fmt("%.6f", r.pressure) << '\t' << fmt("%.6f", r.delivered) << '\t'
            << fmt("%.6f", r.undelivered) << '\n';
    }
    out << "[fixed_heads]\n# id\thead_m\n";
    for (const FixedHeadNode& f : network.fixed_heads)
        out << f.id << '\t' << fmt("%.6f", f.head) << '\n';
    out << "[pipes]\n# id\tfrom\tto\tflow_m3h\theadloss_m\n";
    for (std::size_t k = 0; k < network.pipes.size(); ++k) {
        const PipeLink& p = network.pipes[k];
        out << p.id << '\t' << network.node_id(p.from) << '\t' << network.node_id(p.to) << '\t'
            << fmt("%.6f", solution.pipes[k].flow) << '\t' << fmt("%.6f", solution.pipes[k].headloss) << '\n';
    }
    out << "[pumps]\n# id\tfrom\tto\tunits\tflow_m3h\thead_gain_m\telectric_kw\tstatus\n";
    for (std::size_t k = 0; k < network.pumps.size(); ++k) {
        const PumpGroupLink& p = network.pumps[k];
        const PumpResult& r = solution.pumps[k];
        const char* status = !r.running ? "closed" : (r.flow_limited ? "limited" : "open");
        out << p.id << '\t' << network.node_id(p.from) << '\t' << network.node_id(p.to) << '\t' << p.units << '\t'
            << fmt("%.6f", r.flow) << '\t' << fmt("%.6f", r.head_gain) << '\t' << fmt("%.6f", r.electric_kw) << '\t'
            << status << '\n';
    }
}

void write_inp(std::ostream& out, const HydraulicNetwork& network, const std::string& title)
{
    out << "[TITLE]\n" << title << "\n\n";
    out << "[JUNCTIONS]\n;ID\tElev\tDemand\n";
    for (const Junction& j : network.junctions)
        out << j.id << '\t' << fmt("%.4f", j.elevation) << '\t' << fmt("%.6f", j.demand) << '\n';
    out << "\n[RESERVOIRS]\n;ID\tHead\n";
    for (const FixedHeadNode& f : network.fixed_heads)
        out << f.id << '\t' << fmt("%.4f", f.head) << '\n';
    out << "\n[PIPES]\n;ID\tNode1\tNode2\tLength\tDiameter\tRoughness\tMinorLoss\tStatus\n";
    for (const PipeLink& p : network.pipes) {
        // fully rough turbulence: 1/sqrt(f) = -2 log10(eps / (3.7 D))
        double roughness_mm = 3.7 * p.diameter * std::pow(10.0, -1.0 / (2.0 * std::sqrt(p.friction))) * 1000.0;
        out << p.id << '\t' << network.node_id(p.from) << '\t' << network.node_id(p.to) << '\t'
            << fmt("%.3f", p.length) << '\t' << fmt("%.3f", p.diameter * 1000.0) << '\t' << fmt("%.6f", roughness_mm)
            << "\t0\tOpen\n";
    }
    out << "\n[PUMPS]\n;ID\tNode1\tNode2\tParameters\n";
    for (const PumpGroupLink& p : network.pumps) {
        for (int u = 0; u < p.units; ++u)
            out << p.id << "_u" << u << '\t' << network.node_id(p.from) << '\t' << network.node_id(p.to)
                << "\tHEAD " << p.pump->option_id << "_H\n";
    }
    out << "\n[CURVES]\n;ID\tX\tY\n";
    std::vector<std::string> written;
    for (const PumpGroupLink& p : network.pumps) {
        const std::string& option = p.pump->option_id;
        if (std::find(written.begin(), written.end(), option) != written.end())
            continue;
        written.push_back(option);
        for (const auto& [q, h] : p.pump->head.points())
            out << option << "_H\t" << fmt("%.6f", q) << '\t' << fmt("%.6f", h) << '\n';
        for (const auto& [q, e] : p.pump->efficiency.points())
            out << option << "_E\t" << fmt("%.6f", q) << '\t' << fmt("%.6f", e * 100.0) << '\n';
    }
    out << "\n[ENERGY]\n";
    for (const PumpGroupLink& p : network.pumps)
        for (int u = 0; u < p.units; ++u)
            out << "Pump " << p.id << "_u" << u << " Efficiency " << p.pump->option_id << "_E\n";
    out << "\n[OPTIONS]\nUnits\tCMH\nHeadloss\tD-W\nDemand Model\tPDA\nMinimum Pressure\t0\n"
           "Required Pressure\t30\nPressure Exponent\t0.5\n\n[END]\n";
}

}  // namespace bwf::hydraulics
