#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "straggler/dataset.hpp"
#include "straggler/types.hpp"

using namespace straggler;

TEST_CASE("generated data: ranges, determinism, constant labels") {
    const auto a = generate_dataset(400, 10, 100, 10, 5);
    CHECK(a.samples() == 400);
    CHECK(a.features() == 10);
    CHECK(a.X.minCoeff() >= 1.0);
    CHECK(a.X.maxCoeff() <= 100.0);
    CHECK(a.y.minCoeff() >= 1.0);
    CHECK(a.y.maxCoeff() <= 10.0);
    CHECK((a.X.array() == a.X.array().round()).all());
    CHECK(a.X.maxCoeff() == 100.0);  // 4000 draws cover the top value
    const auto b = generate_dataset(400, 10, 100, 10, 5);
    CHECK(a.X == b.X);
    CHECK(a.y == b.y);
    CHECK(generate_dataset(400, 10, 100, 10, 6).X != a.X);
    const auto ones = generate_dataset(50, 3, 5, 1, 9);
    CHECK((ones.y.array() == 1.0).all());
}

TEST_CASE("partitions are disjoint, exhaustive and contiguous") {
    auto d = generate_dataset(400, 10, 100, 10, 1);
    assign_partitions(d, 20);
    CHECK(d.workers() == 20);
    CHECK(d.partition_size() == 20);
    std::vector<int> seen(400, 0);
    for (const auto& p : d.partition)
        for (int i : p) ++seen[i];
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    CHECK(d.partition[3].front() == 60);
    CHECK_THROWS_AS(assign_partitions(d, 7), InvalidArgument);
}

TEST_CASE("optimal loss: realizable systems have zero optimum") {
    auto d = generate_dataset(40, 4, 100, 10, 2);
    Eigen::VectorXd w(4);
    w << 0.5, -1.0, 2.0, 0.25;
    d.y = d.X * w;
    const auto opt = optimal_loss(d);
    CHECK(opt.f_star < 1e-16);
    CHECK((opt.w_star - w).norm() < 1e-8);

    auto square = generate_dataset(5, 5, 100, 10, 3);
    const auto sq = optimal_loss(square);
    CHECK(!sq.ridge_used);
    CHECK(sq.f_star < 1e-12);
}

TEST_CASE("optimal loss: perturbation optimality, gram form of the excess loss") {
    auto d = generate_dataset(50, 5, 100, 10, 4);
    const auto opt = optimal_loss(d);
    CHECK(loss(d, opt.w_star) == doctest::Approx(opt.f_star).epsilon(1e-12));
    std::mt19937_64 gen(4);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        Eigen::VectorXd delta(5);
        for (int j = 0; j < 5; ++j) delta(j) = z(gen) * 1e-3 * (1 + i % 10);
        const Eigen::VectorXd w = opt.w_star + delta;
        CHECK(loss(d, w) >= opt.f_star);
        CHECK(excess_loss(opt, w) == doctest::Approx(loss(d, w) - opt.f_star).epsilon(1e-6));
    }
    CHECK(loss_lipschitz(opt) == doctest::Approx(2 * opt.gram_max_eig));
    CHECK(loss_convexity(opt) > 0.0);
}

TEST_CASE("optimal loss: rank deficiency falls back to a ridge") {
    auto d = generate_dataset(30, 3, 100, 10, 5);
    d.X.col(2) = d.X.col(0);
    const auto opt = optimal_loss(d);
    CHECK(opt.ridge_used);
    CHECK(std::isfinite(opt.f_star));
    CHECK(loss(d, opt.w_star) == doctest::Approx(opt.f_star).epsilon(1e-6));
}

TEST_CASE("minibatch gradient: stationarity, single sample, finite differences") {
    auto d = generate_dataset(60, 6, 100, 10, 6);
    const auto opt = optimal_loss(d);
    std::vector<int> all(60);
    std::iota(all.begin(), all.end(), 0);
    const double scale = d.X.norm() * d.y.norm();
    CHECK(minibatch_gradient(opt.w_star, d, all).norm() / scale < 1e-8);

    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(6);
    const int one[] = {7};
    CHECK((minibatch_gradient(zero, d, one) + 2.0 * d.y(7) * d.X.row(7).transpose()).norm() == 0.0);
    CHECK_THROWS_AS(minibatch_gradient(zero, d, std::span<const int>{}), InvalidArgument);

    std::mt19937_64 gen(6);
    std::normal_distribution<double> z(0.0, 0.05);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd w(6);
        for (int j = 0; j < 6; ++j) w(j) = z(gen);
        std::vector<int> idx;
        for (int i = 0; i < 60; ++i)
            if (gen() % 3 == 0) idx.push_back(i);
        if (idx.empty()) idx.push_back(0);
        auto batch_loss = [&](const Eigen::VectorXd& v) {
            long double s = 0;
            for (int i : idx) {
                const long double r = static_cast<long double>(d.X.row(i).dot(v)) - d.y(i);
                s += r * r;
            }
            return static_cast<double>(s / idx.size());
        };
        const Eigen::VectorXd g = minibatch_gradient(w, d, idx);
        for (int j = 0; j < 6; ++j) {
            const double h = 1e-5;
            Eigen::VectorXd p = w, m = w;
            p(j) += h;
            m(j) -= h;
            const double fd = (batch_loss(p) - batch_loss(m)) / (2 * h);
            CHECK(std::abs(fd - g(j)) <= 1e-6 * std::max(1.0, g.norm()));
        }
    }
}
