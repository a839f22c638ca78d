#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "straggler/dataset.hpp"
#include "straggler/delay_models.hpp"
#include "straggler/planner.hpp"

namespace straggler {

enum class DiagnosticKind {
    // S sums <g_t, g_{t-1}> over consecutive aggregated gradients; stationary
    // once S < 0 after the burn-in.
    InnerProduct,
    // D_m = |w_m - w_ref|^2 from the stage start, checked at m = burn_in * q^j;
    // stationary once log(D_m / D_{m/q}) / log(q) falls below a threshold.
    // D grows like m^2 while the iterates drift and flattens once they
    // fluctuate around a fixed point.
    Distance,
    // InnerProduct over all lags: checkpoint windows [m_{j-1}, m_j) with
    // m_1 = burn_in and m_j = ceil(q * m_{j-1}); stationary once a window has
    // |sum g|^2 < ratio * sum |g|^2. For ratio = 1 this is "the sum of all
    // pairwise inner products in the window is negative". A coherent drift
    // adds up linearly in the window sum, noise only like sqrt(window).
    WindowedInnerProduct,
};

struct DiagnosticConfig {
    DiagnosticKind kind = DiagnosticKind::InnerProduct;
    double burn_in_factor = 2.0;            // burn-in = ceil(factor * s / beta)
    bool accumulate_during_burn_in = false; // InnerProduct: if false, S starts after the burn-in
    double checkpoint_ratio = 2.0;          // Distance: q > 1
    double slope_threshold = 0.6;           // Distance
    double ratio_threshold = 1.0;           // WindowedInnerProduct
};

struct DiagnosticState {
    DiagnosticKind kind = DiagnosticKind::InnerProduct;
    long long iterations = 0;  // within the current stage
    long long burn_in = 0;

    double statistic = 0.0;
    bool accumulate_during_burn_in = false;
    Eigen::VectorXd previous;
    bool has_previous = false;

    double checkpoint_ratio = 2.0;
    double slope_threshold = 0.6;
    Eigen::VectorXd reference;
    long long next_checkpoint = 0;
    double last_distance = -1.0;  // negative until the first checkpoint

    double ratio_threshold = 1.0;
    Eigen::VectorXd window_sum;
    double window_squares = 0.0;

    // Starts a new stage at iterate w.
    void reset(long long burn_in_iterations, const Eigen::VectorXd& w);
};

long long burn_in_length(const DiagnosticConfig& config, int s, double beta);

DiagnosticState make_diagnostic(const DiagnosticConfig& config, int s, double beta,
                                const Eigen::VectorXd& w);

// InnerProduct test: feeds one aggregated gradient. Never fires before the
// burn-in has elapsed.
bool diagnostic_update(DiagnosticState& state, const Eigen::VectorXd& gradient);

// Distance test: feeds the iterate after an update.
bool distance_update(DiagnosticState& state, const Eigen::VectorXd& w);

// WindowedInnerProduct test: feeds one aggregated gradient.
bool window_update(DiagnosticState& state, const Eigen::VectorXd& gradient);

// Dispatches on state.kind.
bool diagnostic_step(DiagnosticState& state, const Eigen::VectorXd& gradient,
                     const Eigen::VectorXd& w);

// One iteration's randomness: the n responses, the k fastest workers and the
// union of their sub-batches. All of it comes from
// substream(seed, run_id, iteration, worker).
struct FastestKDraw {
    double dt = 0.0;           // k-th smallest response
    std::vector<int> workers;  // the k fastest, ascending index
    std::vector<int> batch;    // per worker ascending, concatenated in worker order
};

// Reuses its buffers across iterations.
class FastestKSampler {
public:
    const FastestKDraw& draw(const Dataset& data, const DelayModel& model, const StageParams& stage,
                             std::uint64_t seed, std::uint64_t run_id, std::uint64_t iteration);

private:
    FastestKDraw draw_;
    std::vector<double> response_;
    std::vector<int> order_;
    std::vector<Rng> streams_;
    std::vector<int> scratch_, drawn_;
};

// Samples per worker, beta * s; throws unless integral.
int per_worker_batch(const StageParams& stage);

struct StopRule {
    double target_error = 0.0;  // stop once the error is at or below this; 0 disables
    double max_time = 0.0;      // 0 disables
    long long max_iterations = 10'000'000;
};

struct SimulationConfig {
    Strategy strategy = Strategy::adaptive_k_beta();
    LadderOptions ladder{};  // beta_levels must make beta * s integral
    double lr = 0.0;
    DiagnosticConfig diagnostic{};
    StopRule stop{};
    long long record_every = 1;
    double divergence_factor = 1e6;  // abort once error > factor * initial error
};

struct TrajectoryPoint {
    double t = 0.0;
    double error = 0.0;
    double comm = 0.0;
    double comp = 0.0;
    int stage = 0;
    int k = 1;
    double beta = 1.0;
};

struct RealizedStage {
    StageParams params;
    double t_start = 0.0;
    long long first_iteration = 0;
};

struct RunResult {
    std::string strategy;
    std::uint64_t run_id = 0;
    std::vector<TrajectoryPoint> trajectory;  // starts at t = 0
    std::vector<RealizedStage> stages;
    long long iterations = 0;
    bool diverged = false;
    bool reached_target = false;
};

// One synchronous fastest-k SGD run from w = 0. Responses, batch draws and the
// worker order are all taken from substream(seed, run_id, iteration, worker).
RunResult simulate_run(const Dataset& data, const OptimalLoss& opt, const DelayModel& model,
                       const SimulationConfig& config, std::uint64_t seed, std::uint64_t run_id);

// Same, with the strategy's stage ladder computed once by the caller.
RunResult simulate_run(const Dataset& data, const OptimalLoss& opt, const DelayModel& model,
                       const SimulationConfig& config, std::span<const LadderStep> ladder,
                       std::uint64_t seed, std::uint64_t run_id);

}  // namespace straggler
