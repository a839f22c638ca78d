#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "straggler/aggregate.hpp"
#include "straggler/convergence.hpp"
#include "straggler/delay_models.hpp"
#include "straggler/planner.hpp"
#include "straggler/simulator.hpp"

namespace straggler {

enum class Mode { TheorySweep, Simulate, OrderStats };

Mode parse_mode(const std::string& text);
std::string mode_name(Mode mode);

// Planner comparison over a (comp_rate, comm_shift) grid, simplified model.
struct SweepConfig {
    int n = 50;
    int s = 200;
    ConvergenceParams convergence{0.1, 2.0, 10.0, 1.0, 1.0};
    double target_error = 1e-3;
    double comp_shift = 0.0;
    std::vector<double> comp_rates;   // lambda
    std::vector<double> comm_shifts;  // t_x
    PlannerOptions planner{};
};

struct SimulateConfig {
    DelayModel model = DelayModel::simplified(1.0, 0.01);
    int n = 20;
    int samples = 400;  // N
    int features = 10;  // d
    int feature_max = 100;
    int label_max = 10;
    double lr = 0.0;         // 0: lr_factor / L, L estimated from the data
    double lr_factor = 0.01;
    std::vector<Strategy> strategies;
    SimulationConfig base{};  // strategy, lr and stop rule are filled per run
    int runs = 100;
    int grid_points = 2001;
    double quantile_band = 0.8;
    std::vector<double> error_levels;
    double clip_comm = 0.0;  // 0: no clipping of the cost-vs-error tables
    double clip_comp = 0.0;
    bool write_trajectories = false;
};

struct OrderStatsConfig {
    std::vector<int> n_values;
    std::vector<double> betas;
    std::vector<double> comp_rates;  // lambda / lambda_y
    std::vector<double> comm_rates;  // lambda_x, generalized rows only
    double comm_shift = 0.0;
    double comp_shift = 0.0;
    bool simplified = true;
    bool generalized = true;
    long long mc_samples = 200000;
    int closed_form_max_n = 12;
};

struct ScenarioConfig {
    Mode mode = Mode::TheorySweep;
    std::uint64_t seed = 1;
    std::string out_dir = "results";
    int jobs = 1;
    SweepConfig sweep{};
    SimulateConfig simulate{};
    OrderStatsConfig order_stats{};
    // Effective key/value settings of the mode, after overrides; hashed and echoed.
    std::map<std::string, std::string> settings;

    std::uint64_t hash() const;
};

// Reads an INI file: top-level keys (seed, out, jobs) plus the section named
// after the mode. `overrides` are "key=value" strings applied last; a key may
// be written as "section.key" or bare (meaning the mode section). Unknown keys
// are rejected.
ScenarioConfig load_scenario(Mode mode, const std::string& path,
                             const std::vector<std::string>& overrides = {});

// Same, from in-memory INI text.
ScenarioConfig parse_scenario(Mode mode, const std::string& ini_text,
                              const std::vector<std::string>& overrides = {});

nlohmann::json scenario_to_json(const ScenarioConfig& config);

// FNV-1a, 64 bit.
std::uint64_t fnv1a(const std::string& text);

}  // namespace straggler
