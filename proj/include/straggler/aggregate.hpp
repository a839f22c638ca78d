#pragma once

#include <span>
#include <string>
#include <vector>

#include "straggler/simulator.hpp"

namespace straggler {

// Uniform grid {0, dt, ..., max_time} with `points` entries.
std::vector<double> uniform_time_grid(double max_time, int points);

// A run sampled on a time grid, holding the last recorded value.
struct ResampledRun {
    std::vector<double> error;
    std::vector<double> comm;
    std::vector<double> comp;
};

ResampledRun resample(const RunResult& run, std::span<const double> grid);

// Quantile with linear interpolation between order statistics; q in [0, 1].
double quantile(std::vector<double> values, double q);

// Cost and time when the mean error curve first reaches `level`, linearly
// interpolated between grid points.
struct LevelMetrics {
    double level = 0.0;
    bool reached = false;
    double time = 0.0;
    double comm = 0.0;
    double comp = 0.0;
};

struct RunSummary {
    std::string strategy;
    int runs = 0;
    std::vector<double> grid;
    std::vector<double> median_error;
    std::vector<double> lower_error;  // (1 - band) / 2 quantile
    std::vector<double> upper_error;  // (1 + band) / 2 quantile
    std::vector<double> mean_error;
    std::vector<double> mean_comm;
    std::vector<double> mean_comp;
    std::vector<LevelMetrics> levels;
};

// Pointwise statistics over at least two runs of one strategy.
RunSummary aggregate_runs(const std::string& strategy, std::span<const ResampledRun> runs,
                          std::span<const double> grid, double quantile_band,
                          std::span<const double> error_levels);

LevelMetrics level_metrics(const RunSummary& summary, double level);

}  // namespace straggler
