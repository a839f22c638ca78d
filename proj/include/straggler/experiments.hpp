#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "straggler/aggregate.hpp"
#include "straggler/scenario.hpp"

namespace straggler {

// Runs body(i) for i in [0, count) on up to `jobs` threads. Results must be
// written to per-index slots; the first exception is rethrown.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

struct SweepCell {
    double comp_rate = 0.0;   // lambda
    double comm_shift = 0.0;  // t_x
    bool ok = false;
    std::string error;        // why the cell has no result
    Schedule adaptive_k_beta;
    Schedule adaptive_k;
    double runtime_ratio = 0.0;   // T(adaptive_k_beta) / T(adaptive_k)
    double comm_overhead = 0.0;   // comm ratio - 1
    double comp_reduction = 0.0;  // 1 - comp ratio
};

struct SweepResult {
    std::vector<SweepCell> cells;  // comp_rate-major
};

SweepResult run_theory_sweep(const SweepConfig& config, int jobs = 1);

// The cell with the smallest runtime ratio among successful cells.
const SweepCell* max_gain_cell(const SweepResult& result);

struct StrategyOutcome {
    Strategy strategy;
    RunSummary summary;
    int diverged = 0;  // excluded from the summary
    double mean_stages = 0.0;
    double mean_iterations = 0.0;
    std::vector<RunResult> trajectories;  // only when requested
};

struct SimulationOutcome {
    double lr = 0.0;
    double initial_error = 0.0;
    double f_star = 0.0;
    double lipschitz = 0.0;
    double convexity = 0.0;
    bool ridge_used = false;
    std::vector<StrategyOutcome> strategies;

    const StrategyOutcome& find(const std::string& strategy_name) const;
};

// Every strategy runs on the same data set and the same per-run seeds.
SimulationOutcome run_simulation_experiment(const SimulateConfig& config, std::uint64_t seed,
                                            int jobs = 1);

struct StrategyComparison {
    double level = 0.0;
    bool reached = false;         // both mean curves reach the level
    double time_ratio = 0.0;      // candidate / baseline
    double comp_reduction = 0.0;  // 1 - comp ratio
    double comm_increase = 0.0;   // comm ratio - 1
};

StrategyComparison compare_at_level(const RunSummary& candidate, const RunSummary& baseline,
                                    double level);

struct OrderStatRow {
    std::string variant;
    int n = 1;
    int k = 1;
    double beta = 1.0;
    double comp_rate = 0.0;
    double comm_rate = 0.0;  // NaN for the simplified model
    bool equal_rates = false;
    double closed_form = 0.0;  // NaN where no closed form is evaluated
    double quadrature = 0.0;
    double mc = 0.0;
    double mc_stderr = 0.0;
    double rel_closed_vs_mc = 0.0;
    double rel_quadrature_vs_mc = 0.0;
    double rel_closed_vs_quadrature = 0.0;
};

std::vector<OrderStatRow> run_order_stats(const OrderStatsConfig& config, std::uint64_t seed,
                                          int jobs = 1);

}  // namespace straggler
