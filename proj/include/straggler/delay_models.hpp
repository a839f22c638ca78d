#pragma once

#include <cstdint>

#include "straggler/rng.hpp"
#include "straggler/types.hpp"

namespace straggler {

enum class DelayVariant { Simplified, Generalized };

/// Per-worker response time distribution.
///
/// Simplified:  T = t_x + t_y + Exp(comp_rate / beta)
/// Generalized: T = t_x + Exp(comm_rate) + t_y + Exp(comp_rate / beta)
///
/// Only the computation rate is scaled by the batch scale beta; communication
/// does not depend on the per-worker batch.
struct DelayModel {
    DelayVariant variant = DelayVariant::Simplified;
    double comp_rate = 1.0;   // lambda (lambda_y), at beta = 1
    double comp_shift = 0.0;  // t_y
    double comm_rate = 1.0;   // lambda_x, Generalized only
    double comm_shift = 0.0;  // t_x

    static DelayModel simplified(double comp_rate, double comm_shift, double comp_shift = 0.0) {
        return {DelayVariant::Simplified, comp_rate, comp_shift, 1.0, comm_shift};
    }
    static DelayModel generalized(double comp_rate, double comm_rate, double comp_shift = 0.0,
                                  double comm_shift = 0.0) {
        return {DelayVariant::Generalized, comp_rate, comp_shift, comm_rate, comm_shift};
    }

    double total_shift() const { return comm_shift + comp_shift; }
    // Computation rate at batch scale beta.
    double scaled_comp_rate(double beta) const { return comp_rate / beta; }
    void validate() const;
};

/// Expected time until the k-th fastest of n workers responds, at batch scale beta.
struct OrderStatQuery {
    int k = 1;
    int n = 1;
    double beta = 1.0;

    void validate() const;
};

enum class OrderStatMethod { Auto, ClosedForm, Quadrature };

struct OrderStatOptions {
    OrderStatMethod method = OrderStatMethod::Auto;
    // Above this n the alternating closed form is not trusted and the
    // survival-function quadrature is used instead.
    int closed_form_max_n = 12;
};

/// One response-time draw. Every draw is >= model.total_shift().
double sample_response(const DelayModel& model, double beta, Rng& rng);

/// Exact mean of the k-th order statistic under the simplified model:
/// (beta / lambda) * sum_{j=n-k+1}^{n} 1/j + t_y + t_x.
double mean_order_stat_simplified(const DelayModel& model, const OrderStatQuery& q);

/// Mean of the k-th order statistic under the generalized model.
double mean_order_stat_general(const DelayModel& model, const OrderStatQuery& q,
                               const OrderStatOptions& options = {});

/// Alternating quadruple-sum closed form for unequal rates (no stability
/// guard). Throws InvalidArgument when the scaled rates coincide.
double mean_order_stat_closed_form(const DelayModel& model, const OrderStatQuery& q);

/// t_x + t_y + integral of P(k-th order statistic > z) over z >= 0, for
/// either variant.
double mean_order_stat_quadrature(const DelayModel& model, const OrderStatQuery& q);

/// Dispatches on model.variant.
double mean_order_stat(const DelayModel& model, const OrderStatQuery& q,
                       const OrderStatOptions& options = {});

/// Derivative of the mean order statistic with respect to beta. Exact for the
/// simplified model; a central difference with step max(1/(4 * beta_levels), 1e-4)
/// (kept inside (0, 1]) for the generalized one.
double d_mean_order_stat_dbeta(const DelayModel& model, const OrderStatQuery& q,
                               int beta_levels);

/// CDF of the random part of one response, z measured after subtracting the
/// shifts. Returns 0 for z <= 0.
double response_cdf(const DelayModel& model, double beta, double z);

/// 1 - response_cdf, computed without cancellation in the tail.
double response_survival(const DelayModel& model, double beta, double z);

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

/// Monte-Carlo estimate of the k-th order statistic mean and its standard
/// error. Deterministic in `seed`; requires num_samples >= 10^4.
McEstimate mc_order_stat_oracle(const DelayModel& model, const OrderStatQuery& q,
                                std::int64_t num_samples, std::uint64_t seed);

}  // namespace straggler
