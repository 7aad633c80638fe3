#pragma once

#include "bwf/engine.hpp"
#include "bwf/io.hpp"
#include "bwf/kpi.hpp"
#include "bwf/scenario.hpp"

#include <string>

namespace bwf::output {

using io::Json;

Json report_json(const kpi::Report& report);
Json history_json(const scenario::History& history);

// Headline KPIs: the national report, one per utility and one per year.
Json kpi_json(const kpi::Tables& tables, int first_year, int years, const std::vector<domain::Utility>& utilities);

// Yearly series for plotting: demand, delivery, energy and ledger totals.
Json series_json(const engine::RunOutput& out);

// Everything a finished stage reports, shared by the CLI and the service.
Json run_json(const engine::RunOutput& out, const domain::Instance& instance, const scenario::History& history);

// Run directory layout (all tab separated, numbers in %.17g):
//   run.json          metadata, KPIs and yearly series
//   history.json      revealed history for the stage
//   years.tsv ledger.tsv bonds.tsv assets.tsv municipalities.tsv
//   source_days.tsv hours.tsv
//   kpi_costs.tsv kpi_cells.tsv kpi_afford.tsv   inputs of `kpi`
// Nothing time- or host-dependent is written.
void write_run_dir(const std::string& dir, const engine::RunOutput& out, const domain::Instance& instance,
                   const scenario::History& history);

kpi::Tables read_kpi_tables(const std::string& dir);  // throws InputError

// "%.17g"
std::string num(double v);

}  // namespace bwf::output
