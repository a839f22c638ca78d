#include "straggler/convergence.hpp"

#include <cmath>

namespace straggler {

double ConvergenceParams::alpha() const { return -std::log1p(-lr * convexity); }

void ConvergenceParams::validate() const {
    if (!(convexity > 0.0)) throw InvalidArgument("convexity c must be positive");
    if (!(lr > 0.0) || !(lr * convexity < 1.0))
        throw InvalidArgument("learning rate must satisfy 0 < lr * c < 1");
    if (lipschitz < convexity) throw InvalidArgument("Lipschitz constant must be >= c");
    if (!(grad_variance >= 0.0)) throw InvalidArgument("gradient variance must be nonnegative");
    if (!(initial_error > 0.0)) throw InvalidArgument("initial error must be positive");
}

double error_floor(const ConvergenceParams& cp, const StageParams& stage) {
    return cp.lr * cp.lipschitz * cp.grad_variance /
           (2.0 * cp.convexity * stage.phi() * stage.s);
}

double error_bound(const ConvergenceParams& cp, const StageParams& stage, double j, double e_ref) {
    if (j < 0.0) throw InvalidArgument("iteration count must be nonnegative");
    const double floor = error_floor(cp, stage);
    return floor + std::exp(-cp.alpha() * j) * (e_ref - floor);
}

double decay_rate_time(const ConvergenceParams& cp, const StageParams& stage, double mu, double t,
                       double t_ref, double e_ref) {
    if (!(mu > 0.0)) throw InvalidArgument("mean iteration time must be positive");
    if (t < t_ref) throw InvalidArgument("decay rate requested before the reference time");
    const double floor = error_floor(cp, stage);
    if (e_ref < floor) throw Unreachable("reference error is already below the stage floor");
    const double a = cp.alpha();
    return a / mu * std::exp(-a * (t - t_ref) / mu) * (e_ref - floor);
}

double iterations_to_error(const ConvergenceParams& cp, const StageParams& stage, double e_start,
                           double e_target) {
    const double floor = error_floor(cp, stage);
    if (e_target >= e_start) return 0.0;
    if (e_target <= floor) throw Unreachable("target error is at or below the stage floor");
    return std::log((e_start - floor) / (e_target - floor)) / cp.alpha();
}

}  // namespace straggler
