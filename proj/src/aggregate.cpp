#include "straggler/aggregate.hpp"

#include <algorithm>
#include <cmath>

namespace straggler {

std::vector<double> uniform_time_grid(double max_time, int points) {
    if (!(max_time > 0.0) || points < 2) throw InvalidArgument("time grid needs max_time > 0 and >= 2 points");
    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i) grid[i] = max_time * i / (points - 1);
    return grid;
}

ResampledRun resample(const RunResult& run, std::span<const double> grid) {
    if (run.trajectory.empty()) throw InvalidArgument("cannot resample an empty trajectory");
    ResampledRun out;
    out.error.reserve(grid.size());
    out.comm.reserve(grid.size());
    out.comp.reserve(grid.size());
    std::size_t j = 0;
    const auto& tr = run.trajectory;
    for (double t : grid) {
        while (j + 1 < tr.size() && tr[j + 1].t <= t) ++j;
        out.error.push_back(tr[j].error);
        out.comm.push_back(tr[j].comm);
        out.comp.push_back(tr[j].comp);
    }
    return out;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw InvalidArgument("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

RunSummary aggregate_runs(const std::string& strategy, std::span<const ResampledRun> runs,
                          std::span<const double> grid, double quantile_band,
                          std::span<const double> error_levels) {
    if (runs.size() < 2) throw InvalidArgument("aggregation needs at least two runs");
    if (!(quantile_band > 0.0 && quantile_band <= 1.0))
        throw InvalidArgument("quantile band must lie in (0, 1]");
    for (const auto& r : runs)
        if (r.error.size() != grid.size()) throw InvalidArgument("run not sampled on the grid");

    RunSummary s;
    s.strategy = strategy;
    s.runs = static_cast<int>(runs.size());
    s.grid.assign(grid.begin(), grid.end());
    const double q_lo = 0.5 * (1.0 - quantile_band);
    const double q_hi = 0.5 * (1.0 + quantile_band);
    std::vector<double> column(runs.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double e = 0.0, cm = 0.0, cp = 0.0;
        for (std::size_t r = 0; r < runs.size(); ++r) {
            column[r] = runs[r].error[i];
            e += runs[r].error[i];
            cm += runs[r].comm[i];
            cp += runs[r].comp[i];
        }
        const double m = static_cast<double>(runs.size());
        s.mean_error.push_back(e / m);
        s.mean_comm.push_back(cm / m);
        s.mean_comp.push_back(cp / m);
        s.median_error.push_back(quantile(column, 0.5));
        s.lower_error.push_back(quantile(column, q_lo));
        s.upper_error.push_back(quantile(column, q_hi));
    }
    for (double level : error_levels) s.levels.push_back(level_metrics(s, level));
    return s;
}

LevelMetrics level_metrics(const RunSummary& summary, double level) {
    LevelMetrics m;
    m.level = level;
    const auto& e = summary.mean_error;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (e[i] > level) continue;
        m.reached = true;
        if (i == 0) {
            m.time = summary.grid[0];
            m.comm = summary.mean_comm[0];
            m.comp = summary.mean_comp[0];
        } else {
            const double f = (e[i - 1] - level) / (e[i - 1] - e[i]);
            auto lerp = [&](const std::vector<double>& v) { return v[i - 1] + f * (v[i] - v[i - 1]); };
            m.time = lerp(summary.grid);
            m.comm = lerp(summary.mean_comm);
            m.comp = lerp(summary.mean_comp);
        }
        break;
    }
    return m;
}

}  // namespace straggler
