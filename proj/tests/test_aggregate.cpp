#include "doctest.h"
#include "straggler/aggregate.hpp"

using namespace straggler;

namespace {

RunResult run_with(std::vector<std::pair<double, double>> points) {
    RunResult r;
    double comm = 0, comp = 0;
    for (auto [t, e] : points) {
        r.trajectory.push_back({t, e, comm, comp, 0, 1, 1.0});
        comm += 21;
        comp += 20;
    }
    return r;
}

}  // namespace

TEST_CASE("time grid and resampling hold the last value") {
    const auto grid = uniform_time_grid(10.0, 11);
    REQUIRE(grid.size() == 11);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == 10.0);
    const auto r = run_with({{0.0, 1.0}, {0.5, 0.8}, {2.5, 0.4}, {7.0, 0.1}});
    const auto s = resample(r, grid);
    CHECK(s.error[0] == 1.0);
    CHECK(s.error[1] == 0.8);
    CHECK(s.error[2] == 0.8);
    CHECK(s.error[3] == 0.4);
    CHECK(s.error[7] == 0.1);
    CHECK(s.error[10] == 0.1);
    CHECK(s.comm[3] == 42.0);
    CHECK_THROWS(uniform_time_grid(10.0, 1));
}

TEST_CASE("quantiles interpolate linearly") {
    CHECK(quantile({3, 1, 2, 4}, 0.0) == 1.0);
    CHECK(quantile({3, 1, 2, 4}, 1.0) == 4.0);
    CHECK(quantile({3, 1, 2, 4}, 0.5) == 2.5);
    CHECK(quantile({1, 2, 3, 4, 5}, 0.1) == doctest::Approx(1.4));
    CHECK_THROWS(quantile({}, 0.5));
}

TEST_CASE("identical runs give a zero-width band") {
    const auto grid = uniform_time_grid(5.0, 6);
    const auto r = resample(run_with({{0.0, 1.0}, {1.0, 0.5}, {3.0, 0.1}}), grid);
    const std::vector<ResampledRun> runs(4, r);
    const double levels[] = {0.3};
    const auto s = aggregate_runs("x", runs, grid, 0.8, levels);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(s.lower_error[i] == s.upper_error[i]);
        CHECK(s.median_error[i] == r.error[i]);
    }
    REQUIRE(s.levels.size() == 1);
    CHECK(s.levels[0].reached);
    // mean error 0.5 at t=1..2 and 0.1 at t=3: 0.3 is crossed halfway between t=2 and t=3
    CHECK(s.levels[0].time == doctest::Approx(2.5));
    const std::vector<ResampledRun> one(1, r);
    CHECK_THROWS(aggregate_runs("x", one, grid, 0.8, levels));
}

TEST_CASE("an 80 percent band covers 80 percent of the runs pointwise") {
    const auto grid = uniform_time_grid(1.0, 2);
    std::vector<ResampledRun> runs;
    for (int i = 0; i < 101; ++i) runs.push_back({{double(i), double(i)}, {0, 0}, {0, 0}});
    const auto s = aggregate_runs("x", runs, grid, 0.8, {});
    int inside = 0;
    for (const auto& r : runs) inside += r.error[0] >= s.lower_error[0] && r.error[0] <= s.upper_error[0];
    CHECK(inside == 81);
    CHECK(s.median_error[0] == 50.0);
    CHECK(s.mean_error[0] == 50.0);
}

TEST_CASE("levels that are never reached are flagged") {
    const auto grid = uniform_time_grid(2.0, 3);
    const std::vector<ResampledRun> runs(2, ResampledRun{{1, 0.9, 0.8}, {0, 1, 2}, {0, 1, 2}});
    const auto s = aggregate_runs("x", runs, grid, 0.8, {});
    CHECK(!level_metrics(s, 0.5).reached);
    const auto m = level_metrics(s, 0.85);
    CHECK(m.reached);
    CHECK(m.time == doctest::Approx(1.5));
    CHECK(m.comm == doctest::Approx(1.5));
}
