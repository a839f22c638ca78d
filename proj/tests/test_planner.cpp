#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "straggler/planner.hpp"

using namespace straggler;

namespace {

// Simplified-model objective with the order-statistic means written out.
double objective(double lambda, double shift, int n, int k_cur, double b_cur, int k_next, double b) {
    const double mu_cur = b_cur / lambda * oracle::harmonic_tail(n, k_cur) + shift;
    const double mu_next = b / lambda * oracle::harmonic_tail(n, k_next) + shift;
    const double phi_cur = k_cur * b_cur, phi_next = k_next * b;
    return (phi_next - phi_cur) / (phi_cur * phi_next) / (mu_next - mu_cur);
}

// Exhaustive grid argmax over units in [lo, levels]; smallest on ties.
int grid_argmax(double lambda, double shift, int n, int k_cur, double b_cur, int k_next, int levels) {
    int best = -1;
    double best_value = -INFINITY;
    for (int u = 1; u <= levels; ++u) {
        if (!(k_next * u > k_cur * b_cur * levels + 1e-9)) continue;
        const double v = objective(lambda, shift, n, k_cur, b_cur, k_next, static_cast<double>(u) / levels);
        if (v > best_value) best_value = v, best = u;
    }
    return best;
}

ConvergenceParams sweep_cp() { return {0.1, 2.0, 10.0, 1.0, 1.0}; }

}  // namespace

TEST_CASE("strategy names round-trip") {
    for (const auto& s : {Strategy::adaptive_k_beta(), Strategy::adaptive_k(), Strategy::fixed(5, 1.0),
                          Strategy::fixed(1, 0.2)}) {
        const auto back = Strategy::parse(s.name());
        CHECK(back.kind == s.kind);
        CHECK(back.name() == s.name());
    }
    CHECK(Strategy::fixed(1, 0.2).name() == "fixed_k1_b0.2");
    CHECK_THROWS_AS(Strategy::parse("fastest"), InvalidArgument);
    CHECK_THROWS_AS(Strategy::parse("fixed_k1_b1.5"), InvalidArgument);
}

TEST_CASE("beta_min: ceiling and strict increase of phi") {
    CHECK(beta_min(1, {20, 20}, 2) == BatchScale{11, 20});
    CHECK(beta_min(1, {20, 20}, 3) == BatchScale{7, 20});
    CHECK_THROWS_AS(beta_min(2, {20, 20}, 2), Infeasible);
    CHECK(beta_min(3, {10, 20}, 4) == BatchScale{8, 20});  // phi 1.5 -> 4*0.4 = 1.6
    std::mt19937_64 gen(3);
    for (int i = 0; i < 1000; ++i) {
        const int levels = 1 + static_cast<int>(gen() % 40);
        const int units = 1 + static_cast<int>(gen() % levels);
        const int k = 1 + static_cast<int>(gen() % 10);
        const int k_next = k + 1 + static_cast<int>(gen() % 5);
        try {
            const BatchScale b = beta_min(k, {units, levels}, k_next);
            CHECK(k_next * b.units > k * units);
            CHECK(k_next * (b.units - 1) <= k * units);
        } catch (const Infeasible&) {
            CHECK(k_next * levels <= k * units);
        }
    }
}

TEST_CASE("closed-form optimum: two-worker example") {
    const auto m = DelayModel::simplified(1.0, 0.0);
    const auto roots = closed_form_beta_roots(m, 1, 1.0, 2, 2);
    CHECK(roots.plus == doctest::Approx(0.5 * (1 + std::sqrt(1.0 / 3))));
    CHECK(roots.minus == doctest::Approx(0.5 * (1 - std::sqrt(1.0 / 3))));
    CHECK(roots.plus == doctest::Approx(0.789).epsilon(1e-3));
    const BatchScale b = optimal_beta_closed(m, 1, {20, 20}, 2, 2);
    CHECK(b == BatchScale{16, 20});
    CHECK(grid_argmax(1.0, 0.0, 2, 1, 1.0, 2, 20) == 16);
}

TEST_CASE("closed-form discriminant is positive on the whole integer grid up to n=50") {
    const auto m = DelayModel::simplified(1.0, 0.0);
    for (int n = 2; n <= 50; ++n)
        for (int k = 1; k < n; ++k)
            for (int kn = k + 1; kn <= n; ++kn) {
                const double disc =
                    1.0 - static_cast<double>(kn) / k * oracle::harmonic_tail(n, k) / oracle::harmonic_tail(n, kn);
                REQUIRE(disc > 0.0);
                REQUIRE(closed_form_beta_roots(m, k, 1.0, kn, n).discriminant == doctest::Approx(disc));
            }
}

TEST_CASE("closed-form and numeric optimum agree with an exhaustive oracle") {
    std::mt19937_64 gen(101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double lambda = 0.05 + 20 * u(gen), shift = 20 * u(gen);
        const int n = 2 + static_cast<int>(gen() % 49);
        const int levels = 1 + static_cast<int>(gen() % 40);
        const int k = 1 + static_cast<int>(gen() % (n - 1));
        const int units = levels;
        const auto m = DelayModel::simplified(lambda, shift);
        const BatchScale closed = optimal_beta_closed(m, k, {units, levels}, k + 1, n);
        const BatchScale numeric = optimal_beta_numeric(m, k, {units, levels}, k + 1, n);
        CHECK(closed == numeric);
        CHECK(closed.units == grid_argmax(lambda, shift, n, k, 1.0, k + 1, levels));
        CHECK(closed.units >= beta_min(k, {units, levels}, k + 1).units);
    }
    for (int n = 2; n <= 20; ++n)
        for (int k = 1; k < n; ++k)
            for (int kn = k + 1; kn <= n; ++kn)
                for (int units : {10, 17, 20}) {
                    const BatchScale cur{units, 20};
                    if (kn * 20 <= k * units) continue;
                    const auto m = DelayModel::simplified(1.0, 0.05);
                    REQUIRE(optimal_beta_closed(m, k, cur, kn, n) == optimal_beta_numeric(m, k, cur, kn, n));
                }
}

TEST_CASE("inverted objective is convex, so the objective is unimodal on the feasible interval") {
    std::mt19937_64 gen(55);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const double lambda = 0.05 + 20 * u(gen), shift = 0.05 + 20 * u(gen);
        const int n = 2 + static_cast<int>(gen() % 49);
        const int k = 1 + static_cast<int>(gen() % (n - 1));
        const int kn = k + 1 + static_cast<int>(gen() % (n - k));
        const auto m = DelayModel::simplified(lambda, shift);
        const double lo = static_cast<double>(k) / kn;
        auto o = [&](double x) { return beta_objective(m, k, 1.0, kn, n, x); };
        auto inverted = [&](double x) { return 1.0 / (o(x) * k); };
        const int steps = 400;
        const double h = (1.0 - lo) / steps;
        int direction_changes = 0;
        double prev_diff = o(lo + 2 * h) - o(lo + h);
        for (int j = 2; j < steps; ++j) {
            const double b = lo + j * h;
            const double second = inverted(b + h) - 2 * inverted(b) + inverted(b - h);
            REQUIRE(second >= -1e-9 * std::abs(inverted(b)));
            const double diff = o(b + h) - o(b);
            if ((diff < 0) != (prev_diff < 0)) ++direction_changes;
            prev_diff = diff;
        }
        CHECK(direction_changes <= 1);
    }
}

TEST_CASE("the objective itself is not concave everywhere") {
    // One over a convex function: the tail decays like 1/beta.
    const auto m = DelayModel::simplified(1.0, 0.05);
    auto o = [&](double x) { return beta_objective(m, 1, 1.0, 2, 20, x); };
    CHECK(o(0.99) - 2 * o(0.995) + o(1.0) > 1e-4);
}

TEST_CASE("switching time: degenerate cases switch immediately") {
    const auto cp = sweep_cp();
    const StageParams from{1, {10, 20}, 20, 50}, to{1, {20, 20}, 20, 50};
    const auto a = switching_time(cp, from, to, 3.0, 1.0, 0.5, 0.5);
    CHECK(a.clamped);
    CHECK(a.t_switch == 3.0);
    const auto b = switching_time(cp, from, to, 3.0, error_floor(cp, from), 0.5, 0.6);
    CHECK(b.clamped);
    CHECK(b.t_switch == 3.0);
    CHECK_THROWS_AS(switching_time(cp, to, from, 0.0, 1.0, 0.5, 0.6), InvalidArgument);
}

TEST_CASE("switching time matches the crossing of the decay-rate curves on a dense grid") {
    const auto cp = sweep_cp();
    const auto m = DelayModel::simplified(1.0, 0.05);
    const StageParams from{1, {10, 20}, 20, 50}, to{1, {20, 20}, 20, 50};
    const double mu_f = 0.5 / 50 + 0.05, mu_t = 1.0 / 50 + 0.05;
    CHECK(mean_order_stat(m, {1, 50, 0.5}) == doctest::Approx(mu_f));
    const double a = -std::log(1 - cp.lr * cp.convexity);
    const double ff = cp.lr * cp.lipschitz * cp.grad_variance / (2 * cp.convexity * 0.5 * 20);
    const double ft = ff / 2;
    // Rate of the current stage versus the rate the next stage would start with at time t.
    auto gap = [&](double t) {
        const double e = ff + std::exp(-a * t / mu_f) * (1.0 - ff);
        return a / mu_f * std::exp(-a * t / mu_f) * (1.0 - ff) - a / mu_t * (e - ft);
    };
    double prev = gap(0.0), crossing = NAN;
    const double step = 1e-5;
    for (double t = step; t < 50.0; t += step) {
        const double g = gap(t);
        if (prev > 0 && g <= 0) {
            crossing = t - step + step * prev / (prev - g);
            break;
        }
        prev = g;
    }
    REQUIRE(std::isfinite(crossing));
    const auto sw = switching_time(cp, from, to, 0.0, 1.0, mu_f, mu_t);
    CHECK(!sw.clamped);
    CHECK(std::abs(sw.t_switch - crossing) < 1e-4);
    CHECK(sw.e_at_switch == doctest::Approx(ff + std::exp(-a * sw.t_switch / mu_f) * (1.0 - ff)).epsilon(1e-9));
}

TEST_CASE("switching time equalises decay rates on random stage pairs") {
    std::mt19937_64 gen(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int unclamped = 0;
    for (int tries = 0; unclamped < 100 && tries < 100000; ++tries) {
        ConvergenceParams cp{0.01 + 0.5 * u(gen), 2.0, 1 + 20 * u(gen), 1.0, 1.0};
        const int s = 20, n = 50;
        const int k = 1 + static_cast<int>(gen() % 10);
        const int units = 1 + static_cast<int>(gen() % 20);
        const StageParams from{k, {units, s}, s, n};
        const StageParams to = units < s ? StageParams{k, {units + 1, s}, s, n}
                                         : StageParams{k + 1, beta_min(k, {units, s}, k + 1), s, n};
        const auto m = DelayModel::simplified(0.05 + 10 * u(gen), 5 * u(gen));
        const double mu_f = mean_order_stat(m, {from.k, n, from.beta_value()});
        const double mu_t = mean_order_stat(m, {to.k, n, to.beta_value()});
        const double e_prev = error_floor(cp, from) + 0.5 + u(gen);
        const double t_prev = 10 * u(gen);
        const auto sw = switching_time(cp, from, to, t_prev, e_prev, mu_f, mu_t);
        if (sw.clamped) continue;
        ++unclamped;
        const double r_from = decay_rate_time(cp, from, mu_f, sw.t_switch, t_prev, e_prev);
        const double r_to = decay_rate_time(cp, to, mu_t, sw.t_switch, sw.t_switch, sw.e_at_switch);
        CHECK(oracle::rel(r_to, r_from) < 1e-6);
        CHECK(sw.e_at_switch == doctest::Approx(error_bound(cp, from, (sw.t_switch - t_prev) / mu_f, e_prev)).epsilon(1e-9));
        CHECK(sw.e_at_switch > error_floor(cp, to));
    }
    CHECK(unclamped == 100);
}

TEST_CASE("ladders: shapes of the three strategies") {
    const auto m = DelayModel::simplified(1.0, 0.05);
    LadderOptions opt;
    const auto akb = stage_ladder(m, Strategy::adaptive_k_beta(), 5, 4, opt);
    REQUIRE(akb.front().stage.k == 1);
    CHECK(akb.front().stage.beta == BatchScale{1, 4});
    for (std::size_t i = 1; i < akb.size(); ++i) {
        const auto& a = akb[i - 1].stage;
        const auto& b = akb[i].stage;
        CHECK(b.phi_units() > a.phi_units());
        if (a.k == b.k) CHECK(b.beta.units == a.beta.units + 1);
        else CHECK(b.k == a.k + 1);
    }
    CHECK(akb.back().stage.k == 5);
    CHECK(akb.back().stage.beta.is_full());

    const auto ak = stage_ladder(m, Strategy::adaptive_k(), 5, 4, opt);
    REQUIRE(ak.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(ak[i].stage.k == i + 1);

    opt.k_cap = 3;
    opt.beta_levels = 5;
    opt.initial_beta_units = 1;
    const auto capped = stage_ladder(m, Strategy::adaptive_k_beta(), 20, 20, opt);
    CHECK(capped.back().stage.k == 3);
    CHECK(capped.front().stage.beta_value() == doctest::Approx(0.2));

    const auto fixed = stage_ladder(m, Strategy::fixed(2, 0.5), 5, 4, LadderOptions{});
    REQUIRE(fixed.size() == 1);
    CHECK(fixed[0].stage.k == 2);
    CHECK_THROWS_AS(stage_ladder(m, Strategy::fixed(2, 0.3), 5, 4, LadderOptions{}), InvalidArgument);
}

TEST_CASE("schedule costs: worked example and empty schedule") {
    Schedule sch;
    ScheduledStage st;
    st.params = {5, {10, 20}, 20, 20};
    st.iterations = 10;
    st.iterations_ceiled = 10;
    st.mean_iteration_time = 0.5;
    sch.stages.push_back(st);
    const auto c = schedule_costs(sch);
    CHECK(c.comm_units == 250.0);
    CHECK(c.comp_units == 500.0);
    CHECK(c.wall_time == 5.0);
    CHECK(schedule_costs(sch, CompCostModel::AllWorkers).comp_units == 2000.0);
    const auto z = schedule_costs(Schedule{});
    CHECK(z.comm_units == 0.0);
    CHECK(z.comp_units == 0.0);
    CHECK(z.wall_time == 0.0);
}

TEST_CASE("build_schedule: trivial target, single fixed stage, unreachable target") {
    const auto cp = sweep_cp();
    const auto m = DelayModel::simplified(1.0, 0.05);
    const auto empty = build_schedule(cp, m, 50, 20, cp.initial_error, Strategy::adaptive_k_beta());
    CHECK(empty.stages.empty());
    CHECK(empty.total_time == 0.0);
    CHECK(empty.cost.comm_units == 0.0);

    const double target = 0.01;
    const auto fixed = build_schedule(cp, m, 50, 20, target, Strategy::fixed(50, 1.0));
    REQUIRE(fixed.stages.size() == 1);
    const double floor = 0.1 * 2 * 10 / (2.0 * 50 * 20);
    const double a = -std::log(0.9);
    const double iters = std::log((1.0 - floor) / (target - floor)) / a;
    const double mu = oracle::harmonic_tail(50, 50) + 0.05;
    CHECK(fixed.cost.wall_time == doctest::Approx(mu * std::ceil(iters)));
    CHECK(fixed.total_time == doctest::Approx(mu * iters));
    CHECK(fixed.cost.comm_units == doctest::Approx(100 * std::ceil(iters)));

    CHECK_THROWS_AS(build_schedule(cp, m, 50, 20, 1e-6, Strategy::adaptive_k()), Unreachable);
}

TEST_CASE("build_schedule: schedule invariants on a grid of models") {
    const auto cp = sweep_cp();
    for (double lambda : {0.05, 0.5, 5.0, 20.0})
        for (double tx : {0.05, 1.0, 20.0})
            for (const auto& strategy : {Strategy::adaptive_k_beta(), Strategy::adaptive_k()}) {
                const auto m = DelayModel::simplified(lambda, tx);
                const auto sch = build_schedule(cp, m, 50, 200, 1e-3, strategy);
                REQUIRE(!sch.stages.empty());
                CHECK(sch.stages.front().params.k == 1);
                double e = cp.initial_error, t = 0.0;
                for (std::size_t i = 0; i < sch.stages.size(); ++i) {
                    const auto& st = sch.stages[i];
                    CHECK(st.t_start == doctest::Approx(t));
                    CHECK(st.t_end >= st.t_start);
                    CHECK(std::abs(st.e_start - e) <= 1e-9 * e);
                    const double replay = error_bound(cp, st.params, st.iterations, st.e_start);
                    CHECK(std::abs(replay - st.e_end) <= 1e-9 * st.e_end);
                    if (i > 0) CHECK(st.params.phi_units() > sch.stages[i - 1].params.phi_units());
                    e = st.e_end;
                    t = st.t_end;
                }
                CHECK(e == doctest::Approx(1e-3));
                CHECK(sch.total_time == doctest::Approx(t));
                const auto json = schedule_to_json(sch);
                CHECK(json["stages"].size() == sch.stages.size());
            }
}

TEST_CASE("expected accounting bills the real-valued iteration counts") {
    const auto cp = sweep_cp();
    const auto m = DelayModel::simplified(2.0, 0.1);
    PlannerOptions opt;
    opt.accounting = IterationAccounting::Expected;
    const auto sch = build_schedule(cp, m, 50, 200, 1e-3, Strategy::adaptive_k_beta(), opt);
    CHECK(sch.cost.wall_time == doctest::Approx(sch.total_time).epsilon(1e-9));
    double comm = 0.0;
    for (const auto& st : sch.stages) comm += st.iterations * (st.params.n + st.params.k);
    CHECK(sch.cost.comm_units == doctest::Approx(comm));
}
