#include "straggler/planner.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdio>
#include <limits>

namespace straggler {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double mean_time(const DelayModel& model, const StageParams& st, const OrderStatOptions& os) {
    return mean_order_stat(model, {st.k, st.n, st.beta_value()}, os);
}

BatchScale to_grid(double beta, int levels) {
    const int units = static_cast<int>(std::lround(beta * levels));
    BatchScale b{units, levels};
    if (std::abs(b.value() - beta) > 1e-9)
        throw InvalidArgument("batch scale " + std::to_string(beta) + " is not a multiple of 1/" +
                              std::to_string(levels));
    b.validate();
    return b;
}

// Billed iterations; absorbs floating noise just above an integer.
long long ceil_iterations(double iterations) {
    if (!(iterations > 0.0)) return 0;
    return static_cast<long long>(std::ceil(iterations - 1e-9 * std::max(1.0, iterations)));
}

}  // namespace

std::string Strategy::name() const {
    switch (kind) {
        case StrategyKind::AdaptiveKBeta:
            return "adaptive_k_beta";
        case StrategyKind::AdaptiveK:
            return "adaptive_k";
        case StrategyKind::Fixed: {
            char buf[64];
            std::snprintf(buf, sizeof buf, "fixed_k%d_b%g", k, beta);
            return buf;
        }
    }
    return "unknown";
}

Strategy Strategy::parse(const std::string& text) {
    if (text == "adaptive_k_beta") return adaptive_k_beta();
    if (text == "adaptive_k") return adaptive_k();
    int k = 0;
    double beta = 0.0;
    if (std::sscanf(text.c_str(), "fixed_k%d_b%lf", &k, &beta) == 2 && k >= 1 && beta > 0.0 &&
        beta <= 1.0)
        return fixed(k, beta);
    throw InvalidArgument("unknown strategy '" + text + "'");
}

BatchScale beta_min(int k_cur, BatchScale beta_cur, int k_next) {
    if (k_cur < 1 || k_next < 1) throw InvalidArgument("wait counts must be positive");
    beta_cur.validate();
    const long long phi_units = static_cast<long long>(k_cur) * beta_cur.units;
    long long units = (phi_units + k_next - 1) / k_next;
    if (units * k_next == phi_units) ++units;  // phi must strictly increase
    if (units > beta_cur.levels)
        throw Infeasible("no batch scale <= 1 increases phi when moving from k=" +
                         std::to_string(k_cur) + " to k=" + std::to_string(k_next));
    return {static_cast<int>(units), beta_cur.levels};
}

double beta_objective(const DelayModel& model, int k_cur, double beta_cur, int k_next, int n,
                      double beta_next, const OrderStatOptions& os) {
    const double phi_cur = k_cur * beta_cur;
    const double phi_next = k_next * beta_next;
    if (!(phi_next > phi_cur)) return -kInf;
    const double mu_cur = mean_order_stat(model, {k_cur, n, beta_cur}, os);
    const double mu_next = mean_order_stat(model, {k_next, n, beta_next}, os);
    if (!(mu_next > mu_cur)) return kInf;
    return (phi_next - phi_cur) / (phi_cur * phi_next) / (mu_next - mu_cur);
}

BetaRoots closed_form_beta_roots(const DelayModel& model, int k_cur, double beta_cur, int k_next,
                                 int n) {
    if (model.variant != DelayVariant::Simplified)
        throw InvalidArgument("closed-form optimal beta requires the simplified model");
    if (k_next <= k_cur) throw InvalidArgument("closed-form optimal beta requires k_next > k_cur");
    const double d_cur = d_mean_order_stat_dbeta(model, {k_cur, n, beta_cur}, 1);
    const double d_next = d_mean_order_stat_dbeta(model, {k_next, n, 1.0}, 1);
    const double phi = k_cur * beta_cur;
    BetaRoots r;
    r.discriminant = 1.0 - static_cast<double>(k_next) / k_cur * d_cur / d_next;
    if (!(r.discriminant > 0.0))
        throw std::logic_error("optimal beta: non-positive discriminant " +
                               std::to_string(r.discriminant));
    const double root = std::sqrt(r.discriminant);
    r.plus = phi / k_next * (1.0 + root);
    r.minus = phi / k_next * (1.0 - root);
    return r;
}

BatchScale optimal_beta_closed(const DelayModel& model, int k_cur, BatchScale beta_cur, int k_next,
                               int n) {
    const double b_cur = beta_cur.value();
    const BetaRoots roots = closed_form_beta_roots(model, k_cur, b_cur, k_next, n);
    // Roots may fall outside (0, 1]; the simplified means are affine in beta,
    // so the objective is evaluated directly there.
    const double d_cur = d_mean_order_stat_dbeta(model, {k_cur, n, b_cur}, 1);
    const double d_next = d_mean_order_stat_dbeta(model, {k_next, n, 1.0}, 1);
    auto objective = [&](double b) {
        const double phi_cur = k_cur * b_cur;
        const double phi_next = k_next * b;
        const double gap = b * d_next - b_cur * d_cur;
        if (!(phi_next > phi_cur)) return -kInf;
        if (!(gap > 0.0)) return kInf;
        return (phi_next - phi_cur) / (phi_cur * phi_next) / gap;
    };
    const double opt = objective(roots.plus) >= objective(roots.minus) ? roots.plus : roots.minus;

    const BatchScale lo = beta_min(k_cur, beta_cur, k_next);
    const int levels = beta_cur.levels;
    auto clip = [&](long long units) {
        return BatchScale{static_cast<int>(std::clamp<long long>(units, lo.units, levels)), levels};
    };
    // The objective is concave on the feasible interval, so the grid optimum
    // is one of the two grid neighbours of the continuous optimum.
    const double scaled = opt * levels;
    const BatchScale up = clip(static_cast<long long>(std::ceil(scaled - 1e-12)));
    const BatchScale down = clip(static_cast<long long>(std::floor(scaled + 1e-12)));
    if (up == down) return up;
    const double o_up = beta_objective(model, k_cur, b_cur, k_next, n, up.value());
    const double o_down = beta_objective(model, k_cur, b_cur, k_next, n, down.value());
    return o_down >= o_up ? down : up;
}

BatchScale optimal_beta_numeric(const DelayModel& model, int k_cur, BatchScale beta_cur, int k_next,
                                int n, const OrderStatOptions& os) {
    const BatchScale lo = beta_min(k_cur, beta_cur, k_next);
    const double b_cur = beta_cur.value();
    BatchScale best = lo;
    double best_value = -kInf;
    for (int u = lo.units; u <= beta_cur.levels; ++u) {
        const BatchScale cand{u, beta_cur.levels};
        const double value = beta_objective(model, k_cur, b_cur, k_next, n, cand.value(), os);
        if (value > best_value) {
            best_value = value;
            best = cand;
        }
    }
    return best;
}

double beta_stationarity(const DelayModel& model, int k_cur, double beta_cur, int k_next, int n,
                         double beta_next, int beta_levels, const OrderStatOptions& os) {
    const double phi = k_cur * beta_cur;
    const double mu_cur = mean_order_stat(model, {k_cur, n, beta_cur}, os);
    const double mu_next = mean_order_stat(model, {k_next, n, beta_next}, os);
    const double d_next = d_mean_order_stat_dbeta(model, {k_next, n, beta_next}, beta_levels);
    return d_next * beta_next * (beta_next * k_next - phi) + phi * (mu_cur - mu_next);
}

std::vector<double> beta_stationary_points(const DelayModel& model, int k_cur, double beta_cur,
                                           int k_next, int n, int beta_levels,
                                           const OrderStatOptions& os) {
    const double lo = std::min(1.0, k_cur * beta_cur / k_next) + 1e-9;
    std::vector<double> roots;
    if (lo >= 1.0) return roots;
    auto h = [&](double b) {
        return beta_stationarity(model, k_cur, beta_cur, k_next, n, b, beta_levels, os);
    };
    constexpr int kScan = 64;
    double a = lo;
    double fa = h(a);
    for (int i = 1; i <= kScan; ++i) {
        const double b = lo + (1.0 - lo) * i / kScan;
        const double fb = h(b);
        if (fa == 0.0) {
            roots.push_back(a);
        } else if (fa * fb < 0.0) {
            std::uintmax_t max_iter = 100;
            auto [left, right] = boost::math::tools::toms748_solve(
                h, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(40), max_iter);
            roots.push_back(0.5 * (left + right));
        }
        a = b;
        fa = fb;
    }
    if (fa == 0.0) roots.push_back(a);
    return roots;
}

SwitchResult switching_time(const ConvergenceParams& cp, const StageParams& from,
                            const StageParams& to, double t_prev, double e_prev, double mu_from,
                            double mu_to) {
    const SwitchResult immediate{t_prev, e_prev, true};
    const double phi_from = from.phi();
    const double phi_to = to.phi();
    if (!(phi_to > phi_from)) throw InvalidArgument("switching requires phi to increase");
    const double noise = cp.lr * cp.lipschitz * cp.grad_variance;  // eta * L * sigma^2
    const double margin = 2.0 * cp.convexity * phi_from * from.s * e_prev - noise;
    if (!(mu_to > mu_from) || !(margin > 0.0)) return immediate;
    if (noise == 0.0) {
        // No floor: the current stage never stalls.
        return {kInf, 0.0, false};
    }
    const double log_term = -std::log(mu_from * noise * (phi_to - phi_from)) +
                            std::log(mu_to - mu_from) + std::log(phi_to * margin);
    const double t_switch = t_prev + mu_from / cp.alpha() * log_term;
    if (!(t_switch > t_prev)) return immediate;
    const double floor_from = error_floor(cp, from);
    const double e_switch =
        floor_from * (1.0 + (phi_to - phi_from) * mu_from / ((mu_to - mu_from) * phi_to));
    return {t_switch, e_switch, false};
}

std::vector<LadderStep> stage_ladder(const DelayModel& model, const Strategy& strategy, int n, int s,
                                     const LadderOptions& options) {
    const int levels = options.beta_levels > 0 ? options.beta_levels : s;
    const int k_cap = options.k_cap > 0 ? std::min(options.k_cap, n) : n;
    if (options.beta_step_units < 1 || options.k_step < 1)
        throw InvalidArgument("ladder steps must be positive");
    auto make = [&](int k, BatchScale b) {
        StageParams st{k, b, s, n};
        st.validate();
        return st;
    };

    std::vector<LadderStep> ladder;
    switch (strategy.kind) {
        case StrategyKind::Fixed:
            ladder.push_back({make(strategy.k, to_grid(strategy.beta, levels)), false});
            break;
        case StrategyKind::AdaptiveK:
            for (int k = 1; k <= k_cap; k += options.k_step)
                ladder.push_back({make(k, BatchScale::full(levels)), false});
            if (ladder.back().stage.k != k_cap)
                ladder.push_back({make(k_cap, BatchScale::full(levels)), false});
            break;
        case StrategyKind::AdaptiveKBeta: {
            BatchScale beta{std::clamp(options.initial_beta_units, 1, levels), levels};
            int k = 1;
            ladder.push_back({make(k, beta), false});
            while (true) {
                if (!beta.is_full()) {
                    beta = {std::min(beta.units + options.beta_step_units, levels), levels};
                    ladder.push_back({make(k, beta), false});
                    continue;
                }
                if (k >= k_cap) break;
                const int k_next = std::min(k + options.k_step, k_cap);
                const bool closed =
                    options.rule == BetaRule::ClosedForm ||
                    (options.rule == BetaRule::Auto && model.variant == DelayVariant::Simplified);
                beta = closed ? optimal_beta_closed(model, k, beta, k_next, n)
                              : optimal_beta_numeric(model, k, beta, k_next, n, options.order_stats);
                k = k_next;
                ladder.push_back({make(k, beta), beta.is_full()});
            }
            break;
        }
    }
    return ladder;
}

Schedule build_schedule(const ConvergenceParams& cp, const DelayModel& model, int n, int s,
                        double target_error, const Strategy& strategy,
                        const PlannerOptions& options) {
    cp.validate();
    model.validate();
    Schedule schedule;
    schedule.strategy = strategy.name();
    schedule.target_error = target_error;
    if (!(target_error > 0.0)) throw InvalidArgument("target error must be positive");
    if (target_error >= cp.initial_error) return schedule;

    const auto ladder = stage_ladder(model, strategy, n, s, options.ladder);
    if (error_floor(cp, ladder.back().stage) >= target_error)
        throw Unreachable("target error is not above the floor of the final stage");

    const auto& os = options.ladder.order_stats;
    double t = 0.0;
    double e = cp.initial_error;
    double mu = mean_time(model, ladder.front().stage, os);
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        const StageParams& cur = ladder[i].stage;
        ScheduledStage stage;
        stage.params = cur;
        stage.mean_iteration_time = mu;
        stage.t_start = t;
        stage.e_start = e;
        stage.beta_one_warning = ladder[i].beta_one_warning;

        if (i + 1 < ladder.size()) {
            const StageParams& nxt = ladder[i + 1].stage;
            const double mu_next = mean_time(model, nxt, os);
            const SwitchResult sw = switching_time(cp, cur, nxt, t, e, mu, mu_next);
            if (!(sw.e_at_switch <= target_error)) {
                stage.t_end = sw.t_switch;
                stage.e_end = sw.e_at_switch;
                stage.iterations = (sw.t_switch - t) / mu;
                stage.iterations_ceiled = ceil_iterations(stage.iterations);
                schedule.stages.push_back(stage);
                schedule.transitions.push_back({cur, nxt, sw.t_switch, sw.e_at_switch, sw.clamped});
                t = sw.t_switch;
                e = sw.e_at_switch;
                mu = mu_next;
                continue;
            }
        }
        stage.iterations = iterations_to_error(cp, cur, e, target_error);
        stage.iterations_ceiled = ceil_iterations(stage.iterations);
        stage.t_end = t + stage.iterations * mu;
        stage.e_end = target_error;
        schedule.stages.push_back(stage);
        schedule.total_time = stage.t_end;
        break;
    }
    schedule.cost = schedule_costs(schedule, options.comp_cost, options.accounting);
    return schedule;
}

CostLedger schedule_costs(const Schedule& schedule, CompCostModel model,
                          IterationAccounting accounting) {
    CostLedger ledger;
    for (const auto& st : schedule.stages) {
        const double iters = accounting == IterationAccounting::Ceiled
                                 ? static_cast<double>(st.iterations_ceiled)
                                 : st.iterations;
        const StageParams& p = st.params;
        ledger.wall_time += iters * st.mean_iteration_time;
        ledger.comm_units += iters * (p.n + p.k);
        const double workers = model == CompCostModel::Aggregated ? p.k : p.n;
        ledger.comp_units += iters * workers * p.beta_value() * p.s;
    }
    return ledger;
}

nlohmann::json schedule_to_json(const Schedule& schedule) {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& st : schedule.stages) {
        stages.push_back({{"k", st.params.k},
                          {"beta", st.params.beta_value()},
                          {"t_switch", st.t_end},
                          {"e_at_switch", st.e_end},
                          {"iterations", st.iterations_ceiled},
                          {"mean_iteration_time", st.mean_iteration_time},
                          {"beta_one_warning", st.beta_one_warning}});
    }
    return {{"strategy", schedule.strategy},
            {"target_error", schedule.target_error},
            {"stages", std::move(stages)},
            {"totals",
             {{"time", schedule.total_time},
              {"wall_time", schedule.cost.wall_time},
              {"comm_units", schedule.cost.comm_units},
              {"comp_units", schedule.cost.comp_units}}}};
}

}  // namespace straggler
