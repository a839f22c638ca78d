#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "straggler/convergence.hpp"
#include "straggler/delay_models.hpp"
#include "straggler/types.hpp"

namespace straggler {

enum class StrategyKind { AdaptiveKBeta, AdaptiveK, Fixed };

struct Strategy {
    StrategyKind kind = StrategyKind::AdaptiveKBeta;
    int k = 1;                 // Fixed only
    double beta = 1.0;         // Fixed only

    static Strategy adaptive_k_beta() { return {StrategyKind::AdaptiveKBeta, 1, 1.0}; }
    static Strategy adaptive_k() { return {StrategyKind::AdaptiveK, 1, 1.0}; }
    static Strategy fixed(int k, double beta) { return {StrategyKind::Fixed, k, beta}; }

    // "adaptive_k_beta", "adaptive_k" or "fixed_k<k>_b<beta>".
    std::string name() const;
    // Inverse of name().
    static Strategy parse(const std::string& text);
};

/// How the batch scale for a new wait count is picked.
enum class BetaRule { Auto, ClosedForm, Numeric };

/// Discretisation of the stage progression.
struct LadderOptions {
    int beta_levels = 0;        // resolution of the beta grid; 0 means s
    int initial_beta_units = 1; // AdaptiveKBeta starts at beta = units / levels
    int beta_step_units = 1;    // beta increment within one k
    int k_step = 1;
    int k_cap = 0;              // largest admissible k; 0 means n
    BetaRule rule = BetaRule::Auto;
    OrderStatOptions order_stats{};
};

/// Computation billed per iteration: k*beta*s (aggregated work) or n*beta*s.
enum class CompCostModel { Aggregated, AllWorkers };

/// Iterations billed per stage: whole iterations (ceiled) or the expected,
/// real-valued count. Schedules with many short stages differ noticeably.
enum class IterationAccounting { Ceiled, Expected };

struct CostLedger {
    double wall_time = 0.0;
    double comm_units = 0.0;
    double comp_units = 0.0;
};

struct ScheduledStage {
    StageParams params;
    double mean_iteration_time = 0.0;
    double t_start = 0.0;
    double t_end = 0.0;  // switching time, or the time the target is hit
    double e_start = 0.0;
    double e_end = 0.0;
    double iterations = 0.0;           // real-valued
    long long iterations_ceiled = 0;   // billed
    bool beta_one_warning = false;     // optimal beta for this k came out as 1
};

struct StageTransition {
    StageParams from;
    StageParams to;
    double t_switch = 0.0;
    double e_at_switch = 0.0;
    bool clamped = false;  // immediate switch
};

struct Schedule {
    std::string strategy;
    std::vector<ScheduledStage> stages;
    std::vector<StageTransition> transitions;
    double target_error = 0.0;
    double total_time = 0.0;  // real-valued iterations times mean iteration time
    CostLedger cost;
};

struct PlannerOptions {
    LadderOptions ladder{};
    CompCostModel comp_cost = CompCostModel::Aggregated;
    IterationAccounting accounting = IterationAccounting::Ceiled;
};

struct SwitchResult {
    double t_switch = 0.0;
    double e_at_switch = 0.0;
    bool clamped = false;
};

/// Smallest beta on the grid with k_next * beta > k_cur * beta_cur.
/// Throws Infeasible when that requires beta > 1.
BatchScale beta_min(int k_cur, BatchScale beta_cur, int k_next);

/// Objective maximised by the batch scale of a new wait count:
///   O = (phi_next - phi_cur) / (phi_cur * phi_next) / (mu_next(beta) - mu_cur).
/// Returns -inf when phi does not increase and +inf when the next stage is not
/// slower.
double beta_objective(const DelayModel& model, int k_cur, double beta_cur, int k_next, int n,
                      double beta_next, const OrderStatOptions& os = {});

struct BetaRoots {
    double plus = 0.0;   // (phi/k')(1 + sqrt(disc))
    double minus = 0.0;  // (phi/k')(1 - sqrt(disc))
    double discriminant = 0.0;
};

/// Roots of the stationarity condition under the simplified model.
BetaRoots closed_form_beta_roots(const DelayModel& model, int k_cur, double beta_cur, int k_next,
                                 int n);

/// Closed-form optimum for the simplified model: the objective-maximising
/// root, snapped to the grid and clipped to [beta_min, 1].
BatchScale optimal_beta_closed(const DelayModel& model, int k_cur, BatchScale beta_cur, int k_next,
                               int n);

/// Exhaustive argmax of beta_objective over {beta_min, ..., 1}; smallest beta
/// on ties.
BatchScale optimal_beta_numeric(const DelayModel& model, int k_cur, BatchScale beta_cur, int k_next,
                                int n, const OrderStatOptions& os = {});

/// Left-hand side of the stationarity condition
///   mu'_next(b) * b * (b * k' - phi) + phi * (mu_cur - mu_next(b)).
double beta_stationarity(const DelayModel& model, int k_cur, double beta_cur, int k_next, int n,
                         double beta_next, int beta_levels, const OrderStatOptions& os = {});

/// Roots of beta_stationarity on (phi/k', 1], located by a sign scan and
/// refined with TOMS 748.
std::vector<double> beta_stationary_points(const DelayModel& model, int k_cur, double beta_cur,
                                           int k_next, int n, int beta_levels,
                                           const OrderStatOptions& os = {});

/// Time at which the next stage's error decay overtakes the current one.
/// Degenerate cases (next stage not slower, current stage at its floor) clamp
/// to t_prev, i.e. switch immediately.
SwitchResult switching_time(const ConvergenceParams& cp, const StageParams& from,
                            const StageParams& to, double t_prev, double e_prev, double mu_from,
                            double mu_to);

struct LadderStep {
    StageParams stage;
    bool beta_one_warning = false;
};

/// Deterministic stage progression of a strategy.
std::vector<LadderStep> stage_ladder(const DelayModel& model, const Strategy& strategy, int n, int s,
                                     const LadderOptions& options);

/// Planned schedule to reach target_error under the error-bound dynamics.
/// Walks the ladder, switching at switching_time(), and finishes inside the
/// first stage whose trajectory reaches the target before its switch.
Schedule build_schedule(const ConvergenceParams& cp, const DelayModel& model, int n, int s,
                        double target_error, const Strategy& strategy,
                        const PlannerOptions& options = {});

CostLedger schedule_costs(const Schedule& schedule, CompCostModel model = CompCostModel::Aggregated,
                          IterationAccounting accounting = IterationAccounting::Ceiled);

nlohmann::json schedule_to_json(const Schedule& schedule);

}  // namespace straggler
