#pragma once

#include "straggler/types.hpp"

namespace straggler {

/// Constants of the SGD error bound
///   E_j <= floor + (1 - lr * c)^j * (e_ref - floor),
///   floor = lr * L * sigma^2 / (2 * c * phi * s).
struct ConvergenceParams {
    double lr = 0.1;             // eta
    double lipschitz = 2.0;      // L
    double grad_variance = 10.0; // sigma^2
    double convexity = 1.0;      // c
    double initial_error = 1.0;  // F(w_0) - F*

    // Per-iteration decay exponent: -log(1 - lr * c) > 0.
    double alpha() const;
    void validate() const;
};

double error_floor(const ConvergenceParams& cp, const StageParams& stage);

/// Bound after j iterations (real-valued) starting from error e_ref.
double error_bound(const ConvergenceParams& cp, const StageParams& stage, double j, double e_ref);

/// |dE/dt| at time t when iterations take mu time units on average and the
/// stage was entered at t_ref with error e_ref. Throws Unreachable if e_ref is
/// already below the stage floor.
double decay_rate_time(const ConvergenceParams& cp, const StageParams& stage, double mu, double t,
                       double t_ref, double e_ref);

/// Real-valued number of iterations for the bound to fall from e_start to
/// e_target. Throws Unreachable if e_target <= floor.
double iterations_to_error(const ConvergenceParams& cp, const StageParams& stage, double e_start,
                           double e_target);

}  // namespace straggler
