#include "straggler/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "straggler/rng.hpp"

namespace straggler {

void DiagnosticState::reset(long long burn_in_iterations, const Eigen::VectorXd& w) {
    iterations = 0;
    burn_in = burn_in_iterations;
    statistic = 0.0;
    has_previous = false;
    reference = w;
    next_checkpoint = std::max(1LL, burn_in);
    last_distance = -1.0;
    window_sum.setZero(w.size());
    window_squares = 0.0;
}

long long burn_in_length(const DiagnosticConfig& config, int s, double beta) {
    if (!(config.burn_in_factor >= 0.0)) throw InvalidArgument("burn-in factor must be nonnegative");
    return static_cast<long long>(std::ceil(config.burn_in_factor * s / beta - 1e-9));
}

DiagnosticState make_diagnostic(const DiagnosticConfig& config, int s, double beta,
                                const Eigen::VectorXd& w) {
    if (!(config.checkpoint_ratio > 1.0)) throw InvalidArgument("checkpoint ratio must exceed 1");
    DiagnosticState state;
    state.kind = config.kind;
    state.accumulate_during_burn_in = config.accumulate_during_burn_in;
    state.checkpoint_ratio = config.checkpoint_ratio;
    state.slope_threshold = config.slope_threshold;
    state.ratio_threshold = config.ratio_threshold;
    state.reset(burn_in_length(config, s, beta), w);
    return state;
}

bool diagnostic_update(DiagnosticState& state, const Eigen::VectorXd& gradient) {
    ++state.iterations;
    const bool past_burn_in = state.iterations > state.burn_in;
    if (state.has_previous && (past_burn_in || state.accumulate_during_burn_in))
        state.statistic += gradient.dot(state.previous);
    state.previous = gradient;
    state.has_previous = true;
    return past_burn_in && state.statistic < 0.0;
}

bool distance_update(DiagnosticState& state, const Eigen::VectorXd& w) {
    ++state.iterations;
    if (state.iterations < state.next_checkpoint) return false;
    const double distance = (w - state.reference).squaredNorm();
    const double previous = state.last_distance;
    state.last_distance = distance;
    state.next_checkpoint = std::max(
        state.iterations + 1,
        static_cast<long long>(std::ceil(static_cast<double>(state.iterations) * state.checkpoint_ratio)));
    if (previous < 0.0) return false;
    if (!(previous > 0.0) || !(distance > 0.0)) return distance <= previous;
    const double slope = std::log(distance / previous) / std::log(state.checkpoint_ratio);
    return slope < state.slope_threshold;
}

bool window_update(DiagnosticState& state, const Eigen::VectorXd& gradient) {
    ++state.iterations;
    if (state.window_sum.size() != gradient.size()) state.window_sum.setZero(gradient.size());
    state.window_sum += gradient;
    state.window_squares += gradient.squaredNorm();
    if (state.iterations < state.next_checkpoint) return false;
    const bool stationary =
        state.window_sum.squaredNorm() < state.ratio_threshold * state.window_squares;
    state.window_sum.setZero();
    state.window_squares = 0.0;
    state.next_checkpoint = std::max(
        state.iterations + 1,
        static_cast<long long>(std::ceil(static_cast<double>(state.iterations) * state.checkpoint_ratio)));
    return stationary;
}

bool diagnostic_step(DiagnosticState& state, const Eigen::VectorXd& gradient,
                     const Eigen::VectorXd& w) {
    switch (state.kind) {
        case DiagnosticKind::InnerProduct: return diagnostic_update(state, gradient);
        case DiagnosticKind::Distance: return distance_update(state, w);
        case DiagnosticKind::WindowedInnerProduct: return window_update(state, gradient);
    }
    return false;
}

int per_worker_batch(const StageParams& st) {
    const long long scaled = static_cast<long long>(st.beta.units) * st.s;
    if (scaled % st.beta.levels != 0)
        throw InvalidArgument("beta * s must be an integer number of samples");
    return static_cast<int>(scaled / st.beta.levels);
}

const FastestKDraw& FastestKSampler::draw(const Dataset& data, const DelayModel& model,
                                          const StageParams& st, std::uint64_t seed,
                                          std::uint64_t run_id, std::uint64_t iteration) {
    const int n = data.workers();
    const double beta = st.beta_value();
    const int per_worker = per_worker_batch(st);
    response_.resize(n);
    order_.resize(n);
    streams_.clear();
    for (int i = 0; i < n; ++i) {
        streams_.push_back(substream(seed, run_id, iteration, static_cast<std::uint64_t>(i)));
        response_[i] = sample_response(model, beta, streams_.back());
    }
    std::iota(order_.begin(), order_.end(), 0);
    std::nth_element(order_.begin(), order_.begin() + (st.k - 1), order_.end(),
                     [&](int a, int b) { return response_[a] < response_[b]; });
    draw_.dt = response_[order_[st.k - 1]];
    std::sort(order_.begin(), order_.begin() + st.k);
    draw_.workers.assign(order_.begin(), order_.begin() + st.k);

    draw_.batch.clear();
    for (int worker : draw_.workers) {
        sample_without_replacement(data.partition[worker], per_worker, streams_[worker], scratch_,
                                   drawn_);
        std::sort(drawn_.begin(), drawn_.end());
        draw_.batch.insert(draw_.batch.end(), drawn_.begin(), drawn_.end());
    }
    return draw_;
}

RunResult simulate_run(const Dataset& data, const OptimalLoss& opt, const DelayModel& model,
                       const SimulationConfig& config, std::uint64_t seed, std::uint64_t run_id) {
    if (data.workers() < 1) throw InvalidArgument("data set has no partitions");
    const auto ladder =
        stage_ladder(model, config.strategy, data.workers(), data.partition_size(), config.ladder);
    return simulate_run(data, opt, model, config, ladder, seed, run_id);
}

RunResult simulate_run(const Dataset& data, const OptimalLoss& opt, const DelayModel& model,
                       const SimulationConfig& config, std::span<const LadderStep> ladder,
                       std::uint64_t seed, std::uint64_t run_id) {
    const int n = data.workers();
    const int s = data.partition_size();
    if (n < 1) throw InvalidArgument("data set has no partitions");
    if (!(config.lr > 0.0)) throw InvalidArgument("learning rate must be positive");
    if (config.record_every < 1) throw InvalidArgument("record cadence must be positive");
    if (ladder.empty()) throw InvalidArgument("empty stage ladder");
    model.validate();
    for (const auto& step : ladder) {
        if (step.stage.n != n || step.stage.s != s)
            throw InvalidArgument("stage ladder does not match the data partition");
        per_worker_batch(step.stage);
    }

    RunResult result;
    result.strategy = config.strategy.name();
    result.run_id = run_id;

    Eigen::VectorXd w = Eigen::VectorXd::Zero(data.features());
    const double e0 = excess_loss(opt, w);
    double t = 0.0, comm = 0.0, comp = 0.0;
    std::size_t stage = 0;

    auto record = [&](double error) {
        const auto& st = ladder[stage].stage;
        result.trajectory.push_back(
            {t, error, comm, comp, static_cast<int>(stage), st.k, st.beta_value()});
    };
    auto enter_stage = [&](long long iteration) {
        result.stages.push_back({ladder[stage].stage, t, iteration});
    };

    enter_stage(0);
    record(e0);
    DiagnosticState diag =
        make_diagnostic(config.diagnostic, s, ladder[stage].stage.beta_value(), w);

    FastestKSampler sampler;

    for (long long it = 0; it < config.stop.max_iterations; ++it) {
        const StageParams& st = ladder[stage].stage;
        const FastestKDraw& draw =
            sampler.draw(data, model, st, seed, run_id, static_cast<std::uint64_t>(it));
        const double dt = draw.dt;

        const Eigen::VectorXd g = minibatch_gradient(w, data, draw.batch);
        w -= config.lr * g;
        t += dt;
        comm += n + st.k;
        comp += static_cast<double>(draw.batch.size());
        result.iterations = it + 1;

        const double error = excess_loss(opt, w);
        if (!std::isfinite(error) || error > config.divergence_factor * e0) {
            result.diverged = true;
            record(error);
            return result;
        }
        const bool hit = config.stop.target_error > 0.0 && error <= config.stop.target_error;
        const bool out_of_time = config.stop.max_time > 0.0 && t >= config.stop.max_time;
        const bool last = it + 1 == config.stop.max_iterations;
        if (hit || out_of_time || last || result.iterations % config.record_every == 0) record(error);
        if (hit) {
            result.reached_target = true;
            return result;
        }
        if (out_of_time) return result;

        if (diagnostic_step(diag, g, w) && stage + 1 < ladder.size()) {
            ++stage;
            enter_stage(result.iterations);
            diag.reset(burn_in_length(config.diagnostic, s, ladder[stage].stage.beta_value()), w);
        }
    }
    return result;
}

}  // namespace straggler
