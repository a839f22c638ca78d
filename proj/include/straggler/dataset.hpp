#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace straggler {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Least-squares data set split into equal contiguous blocks, one per worker.
struct Dataset {
    RowMatrix X;        // N x d
    Eigen::VectorXd y;  // N
    std::vector<std::vector<int>> partition;

    int samples() const { return static_cast<int>(X.rows()); }
    int features() const { return static_cast<int>(X.cols()); }
    int workers() const { return static_cast<int>(partition.size()); }
    int partition_size() const { return partition.empty() ? 0 : static_cast<int>(partition[0].size()); }
};

// Integer features uniform on {1..feature_max}, labels uniform on {1..label_max}.
// The result is unpartitioned until assign_partitions() is called.
Dataset generate_dataset(int N, int d, int feature_max, int label_max, std::uint64_t seed);

// Worker i owns samples [i*s, (i+1)*s), s = N/n. Throws unless n divides N.
void assign_partitions(Dataset& data, int n);

struct OptimalLoss {
    double f_star = 0.0;
    Eigen::VectorXd w_star;
    Eigen::MatrixXd gram;   // X^T X / N; the error is (w - w*)^T gram (w - w*)
    double gram_min_eig = 0.0;
    double gram_max_eig = 0.0;
    bool ridge_used = false;  // X was numerically rank deficient
};

// Loss F(w) = (1/N) sum (x_i w - y_i)^2 and its minimiser.
OptimalLoss optimal_loss(const Dataset& data);

double loss(const Dataset& data, const Eigen::VectorXd& w);

// F(w) - F*, evaluated through the Gram matrix so it never goes negative.
double excess_loss(const OptimalLoss& opt, const Eigen::VectorXd& w);

// (1/|S|) sum_{i in S} 2 (x_i w - y_i) x_i. Duplicated indices count twice.
Eigen::VectorXd minibatch_gradient(const Eigen::VectorXd& w, const Dataset& data,
                                   std::span<const int> indices);

// Smoothness and strong-convexity constants of F: 2 * extreme Gram eigenvalues.
inline double loss_lipschitz(const OptimalLoss& opt) { return 2.0 * opt.gram_max_eig; }
inline double loss_convexity(const OptimalLoss& opt) { return 2.0 * opt.gram_min_eig; }

}  // namespace straggler
