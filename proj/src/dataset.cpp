#include "straggler/dataset.hpp"

#include <numeric>

#include "straggler/rng.hpp"
#include "straggler/types.hpp"

namespace straggler {

Dataset generate_dataset(int N, int d, int feature_max, int label_max, std::uint64_t seed) {
    if (N < 1 || d < 1) throw InvalidArgument("data set dimensions must be positive");
    if (feature_max < 1 || label_max < 1) throw InvalidArgument("value ranges must be positive");
    const std::uint64_t path[] = {0x6461746173657400ULL};
    Rng rng(derive_seed(seed, path));
    Dataset data;
    data.X.resize(N, d);
    data.y.resize(N);
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < d; ++j)
            data.X(i, j) = static_cast<double>(rng.below(static_cast<std::uint64_t>(feature_max)) + 1);
        data.y(i) = static_cast<double>(rng.below(static_cast<std::uint64_t>(label_max)) + 1);
    }
    return data;
}

void assign_partitions(Dataset& data, int n) {
    const int N = data.samples();
    if (n < 1 || N % n != 0) throw InvalidArgument("worker count must divide the sample count");
    const int s = N / n;
    data.partition.assign(n, std::vector<int>(s));
    for (int i = 0; i < n; ++i) std::iota(data.partition[i].begin(), data.partition[i].end(), i * s);
}

OptimalLoss optimal_loss(const Dataset& data) {
    const double N = data.samples();
    OptimalLoss opt;
    opt.gram = (data.X.transpose() * data.X) / N;
    const Eigen::VectorXd rhs = data.X.transpose() * data.y / N;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(opt.gram, Eigen::EigenvaluesOnly);
    opt.gram_min_eig = eig.eigenvalues().minCoeff();
    opt.gram_max_eig = eig.eigenvalues().maxCoeff();

    Eigen::MatrixXd system = opt.gram;
    if (!(opt.gram_min_eig > 1e-12 * opt.gram_max_eig)) {
        opt.ridge_used = true;
        system.diagonal().array() += 1e-10 * std::max(1.0, opt.gram_max_eig);
    }
    opt.w_star = system.ldlt().solve(rhs);
    opt.f_star = loss(data, opt.w_star);
    return opt;
}

double loss(const Dataset& data, const Eigen::VectorXd& w) {
    return (data.X * w - data.y).squaredNorm() / data.samples();
}

double excess_loss(const OptimalLoss& opt, const Eigen::VectorXd& w) {
    const Eigen::VectorXd delta = w - opt.w_star;
    return std::max(0.0, delta.dot(opt.gram * delta));
}

Eigen::VectorXd minibatch_gradient(const Eigen::VectorXd& w, const Dataset& data,
                                   std::span<const int> indices) {
    if (indices.empty()) throw InvalidArgument("gradient over an empty batch");
    Eigen::VectorXd g = Eigen::VectorXd::Zero(w.size());
    for (int i : indices) {
        const auto row = data.X.row(i);
        g.noalias() += (2.0 * (row.dot(w) - data.y(i))) * row.transpose();
    }
    return g / static_cast<double>(indices.size());
}

}  // namespace straggler
