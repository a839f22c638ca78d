#include "straggler/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "straggler/rng.hpp"

namespace straggler {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kRunStream = 2;
constexpr std::uint64_t kOrderStatStream = 3;

std::uint64_t child_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0) {
    const std::uint64_t path[] = {stream, index};
    return derive_seed(master, path);
}

double relative(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
    const auto workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto loop = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < std::min(workers, count); ++t) pool.emplace_back(loop);
    }
    if (failure) std::rethrow_exception(failure);
}

SweepResult run_theory_sweep(const SweepConfig& config, int jobs) {
    config.convergence.validate();
    if (config.comp_rates.empty() || config.comm_shifts.empty())
        throw InvalidArgument("sweep grid is empty");
    SweepResult result;
    for (double rate : config.comp_rates)
        for (double shift : config.comm_shifts) {
            SweepCell cell;
            cell.comp_rate = rate;
            cell.comm_shift = shift;
            result.cells.push_back(std::move(cell));
        }

    parallel_for(result.cells.size(), jobs, [&](std::size_t i) {
        SweepCell& cell = result.cells[i];
        const auto model = DelayModel::simplified(cell.comp_rate, cell.comm_shift, config.comp_shift);
        try {
            cell.adaptive_k_beta = build_schedule(config.convergence, model, config.n, config.s,
                                                  config.target_error, Strategy::adaptive_k_beta(),
                                                  config.planner);
            cell.adaptive_k = build_schedule(config.convergence, model, config.n, config.s,
                                             config.target_error, Strategy::adaptive_k(),
                                             config.planner);
        } catch (const std::runtime_error& e) {
            cell.error = e.what();
            return;
        }
        const auto& a = cell.adaptive_k_beta;
        const auto& b = cell.adaptive_k;
        if (!(b.total_time > 0.0)) {
            cell.error = "target already met at the initial error";
            return;
        }
        cell.ok = true;
        cell.runtime_ratio = a.total_time / b.total_time;
        cell.comm_overhead = a.cost.comm_units / b.cost.comm_units - 1.0;
        cell.comp_reduction = 1.0 - a.cost.comp_units / b.cost.comp_units;
    });
    return result;
}

const SweepCell* max_gain_cell(const SweepResult& result) {
    const SweepCell* best = nullptr;
    for (const auto& c : result.cells)
        if (c.ok && (!best || c.runtime_ratio < best->runtime_ratio)) best = &c;
    return best;
}

const StrategyOutcome& SimulationOutcome::find(const std::string& strategy_name) const {
    for (const auto& s : strategies)
        if (s.strategy.name() == strategy_name) return s;
    throw InvalidArgument("strategy '" + strategy_name + "' was not simulated");
}

SimulationOutcome run_simulation_experiment(const SimulateConfig& config, std::uint64_t seed,
                                            int jobs) {
    if (config.strategies.empty()) throw InvalidArgument("no strategies to simulate");
    if (config.runs < 2) throw InvalidArgument("at least two runs per strategy are needed");

    Dataset data = generate_dataset(config.samples, config.features, config.feature_max,
                                    config.label_max, child_seed(seed, kDataStream));
    assign_partitions(data, config.n);
    const OptimalLoss opt = optimal_loss(data);

    SimulationOutcome out;
    out.f_star = opt.f_star;
    out.initial_error = excess_loss(opt, Eigen::VectorXd::Zero(data.features()));
    out.lipschitz = loss_lipschitz(opt);
    out.convexity = loss_convexity(opt);
    out.ridge_used = opt.ridge_used;
    out.lr = config.lr > 0.0 ? config.lr : config.lr_factor / out.lipschitz;

    const auto grid = uniform_time_grid(config.base.stop.max_time, config.grid_points);
    const std::uint64_t run_seed = child_seed(seed, kRunStream);

    for (const auto& strategy : config.strategies) {
        SimulationConfig sim = config.base;
        sim.strategy = strategy;
        sim.lr = out.lr;
        const auto ladder =
            stage_ladder(config.model, strategy, data.workers(), data.partition_size(), sim.ladder);

        std::vector<RunResult> runs(static_cast<std::size_t>(config.runs));
        std::vector<ResampledRun> sampled(runs.size());
        parallel_for(runs.size(), jobs, [&](std::size_t r) {
            RunResult run = simulate_run(data, opt, config.model, sim, ladder, run_seed, r);
            sampled[r] = resample(run, grid);
            if (config.write_trajectories) runs[r] = std::move(run);
            else {
                runs[r].diverged = run.diverged;
                runs[r].iterations = run.iterations;
                runs[r].stages = std::move(run.stages);
            }
        });

        StrategyOutcome so;
        so.strategy = strategy;
        std::vector<ResampledRun> kept;
        double stages = 0.0, iterations = 0.0;
        for (std::size_t r = 0; r < runs.size(); ++r) {
            if (runs[r].diverged) {
                ++so.diverged;
                continue;
            }
            kept.push_back(std::move(sampled[r]));
            stages += static_cast<double>(runs[r].stages.size());
            iterations += static_cast<double>(runs[r].iterations);
        }
        if (kept.size() < 2)
            throw std::runtime_error("strategy " + strategy.name() + ": fewer than two runs converged");
        so.mean_stages = stages / static_cast<double>(kept.size());
        so.mean_iterations = iterations / static_cast<double>(kept.size());
        so.summary = aggregate_runs(strategy.name(), kept, grid, config.quantile_band,
                                    config.error_levels);
        if (config.write_trajectories) so.trajectories = std::move(runs);
        out.strategies.push_back(std::move(so));
    }
    return out;
}

StrategyComparison compare_at_level(const RunSummary& candidate, const RunSummary& baseline,
                                    double level) {
    StrategyComparison c;
    c.level = level;
    const auto a = level_metrics(candidate, level);
    const auto b = level_metrics(baseline, level);
    c.reached = a.reached && b.reached && b.time > 0.0;
    if (!c.reached) return c;
    c.time_ratio = a.time / b.time;
    c.comp_reduction = 1.0 - a.comp / b.comp;
    c.comm_increase = a.comm / b.comm - 1.0;
    return c;
}

std::vector<OrderStatRow> run_order_stats(const OrderStatsConfig& config, std::uint64_t seed,
                                          int jobs) {
    std::vector<OrderStatRow> rows;
    for (int n : config.n_values) {
        std::vector<int> ks{1, (n + 1) / 2, n};
        ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
        for (int k : ks)
            for (double beta : config.betas)
                for (double rate : config.comp_rates) {
                    if (config.simplified)
                        rows.push_back({"simplified", n, k, beta, rate, kNaN});
                    if (config.generalized)
                        for (double comm : config.comm_rates)
                            rows.push_back({"generalized", n, k, beta, rate, comm});
                }
    }

    OrderStatOptions auto_opts;
    auto_opts.closed_form_max_n = config.closed_form_max_n;
    parallel_for(rows.size(), jobs, [&](std::size_t i) {
        OrderStatRow& row = rows[i];
        const OrderStatQuery q{row.k, row.n, row.beta};
        const bool simplified = row.variant == "simplified";
        const auto model =
            simplified ? DelayModel::simplified(row.comp_rate, config.comm_shift, config.comp_shift)
                       : DelayModel::generalized(row.comp_rate, row.comm_rate, config.comp_shift,
                                                 config.comm_shift);
        row.equal_rates = !simplified && std::abs(row.comm_rate - row.comp_rate / row.beta) <=
                                             1e-12 * row.comm_rate;
        if (simplified)
            row.closed_form = mean_order_stat_simplified(model, q);
        else if (!row.equal_rates && row.n <= config.closed_form_max_n)
            row.closed_form = mean_order_stat_closed_form(model, q);
        else
            row.closed_form = kNaN;
        row.quadrature = mean_order_stat_quadrature(model, q);
        const auto mc = mc_order_stat_oracle(model, q, config.mc_samples,
                                             child_seed(seed, kOrderStatStream, i));
        row.mc = mc.estimate;
        row.mc_stderr = mc.std_error;
        row.rel_closed_vs_mc = relative(row.closed_form, row.mc);
        row.rel_quadrature_vs_mc = relative(row.quadrature, row.mc);
        row.rel_closed_vs_quadrature = relative(row.closed_form, row.quadrature);
    });
    return rows;
}

}  // namespace straggler
