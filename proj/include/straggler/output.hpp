#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include "json.hpp"
#include "straggler/experiments.hpp"
#include "straggler/scenario.hpp"

namespace straggler {

inline constexpr const char* kVersion = "0.1.0";

// First line of every CSV file: "# straggler-lab <version> mode=... config_hash=... seed=...".
std::string csv_header_comment(const ScenarioConfig& config);

void write_sweep_csv(std::ostream& os, const SweepResult& result);
nlohmann::json sweep_schedules_json(const SweepResult& result);

// Columns: strategy,t,median_error,lower_error,upper_error,mean_error,mean_comm,mean_comp
void write_error_vs_time_csv(std::ostream& os, const SimulationOutcome& outcome);
// Columns: strategy,level,reached,time,comm,comp
void write_levels_csv(std::ostream& os, const SimulationOutcome& outcome);
// Every strategy against `baseline` at every configured error level.
void write_comparison_csv(std::ostream& os, const SimulationOutcome& outcome,
                          const std::string& baseline);
// Mean cost curves against mean error; rows beyond a positive clip are dropped.
void write_cost_vs_error_csv(std::ostream& os, const SimulationOutcome& outcome, double clip_comm,
                             double clip_comp);
// Columns: run_id,strategy,t,error,comm,comp,stage,k,beta
void write_trajectories_csv(std::ostream& os, const SimulationOutcome& outcome);
nlohmann::json simulation_summary_json(const SimulationOutcome& outcome);

void write_order_stats_csv(std::ostream& os, const std::vector<OrderStatRow>& rows);

// Runs the configured mode and writes its files into config.out_dir.
// Returns the list of files written.
std::vector<std::filesystem::path> run_scenario(const ScenarioConfig& config, std::ostream& log);

}  // namespace straggler
