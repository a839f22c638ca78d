#include "straggler/delay_models.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cfloat>
#include <cmath>
#include <thread>
#include <vector>

namespace straggler {

namespace {

double harmonic_tail(int n, int k) {
    double sum = 0.0;
    for (int j = n - k + 1; j <= n; ++j) sum += 1.0 / j;
    return sum;
}

bool rates_coincide(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(a, b);
}

// Pascal triangle rows 0..n in long double.
std::vector<std::vector<long double>> binomials(int n) {
    std::vector<std::vector<long double>> c(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) {
        auto& row = c[static_cast<std::size_t>(i)];
        row.assign(static_cast<std::size_t>(i) + 1, 1.0L);
        for (int j = 1; j < i; ++j)
            row[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j) - 1] +
                                               c[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(j)];
    }
    return c;
}

struct ClosedFormResult {
    long double value = 0.0L;
    long double max_term = 0.0L;
    long double terms = 0.0L;
};

ClosedFormResult closed_form_sum(double comm_rate, double comp_rate, int k, int n) {
    const auto lx = static_cast<long double>(comm_rate);
    const auto ly = static_cast<long double>(comp_rate);
    const long double ratio = lx / (lx - ly);
    const auto c = binomials(n);
    auto binom = [&](int top, int bottom) {
        return c[static_cast<std::size_t>(top)][static_cast<std::size_t>(bottom)];
    };

    ClosedFormResult r;
    std::vector<long double> ratio_pow(static_cast<std::size_t>(n) + 1, 1.0L);
    for (int b = 1; b <= n; ++b)
        ratio_pow[static_cast<std::size_t>(b)] = ratio_pow[static_cast<std::size_t>(b) - 1] * ratio;

    for (int j = k; j <= n; ++j) {
        for (int a = 0; a <= j; ++a) {
            const int m = a + n - j;
            for (int b = 0; b <= m; ++b) {
                for (int cc = 0; cc <= b; ++cc) {
                    const long double alpha = lx * (m - b + cc) + ly * (b - cc);
                    if (alpha == 0.0L) continue;
                    const long double sign = ((a + cc + 1) % 2 == 0) ? 1.0L : -1.0L;
                    const long double term = binom(n, j) * binom(j, a) * binom(m, b) * binom(b, cc) *
                                             sign * ratio_pow[static_cast<std::size_t>(b)] / alpha;
                    r.value += term;
                    r.max_term = std::max(r.max_term, std::abs(term));
                    r.terms += 1.0L;
                }
            }
        }
    }
    return r;
}

// P(k-th order statistic of n responses > z), z after shifts:
// P(Binomial(n, F(z)) <= k - 1) = I_{S(z)}(n - k + 1, k).
double order_stat_survival(const DelayModel& model, const OrderStatQuery& q, double z) {
    const double surv = response_survival(model, q.beta, z);
    if (surv <= 0.0) return 0.0;
    if (surv >= 1.0) return 1.0;
    return boost::math::ibeta(static_cast<double>(q.n - q.k + 1), static_cast<double>(q.k), surv);
}

}  // namespace

void DelayModel::validate() const {
    if (!(comp_rate > 0.0) || !std::isfinite(comp_rate))
        throw InvalidArgument("computation rate must be positive");
    if (variant == DelayVariant::Generalized && (!(comm_rate > 0.0) || !std::isfinite(comm_rate)))
        throw InvalidArgument("communication rate must be positive");
    if (!(comp_shift >= 0.0) || !(comm_shift >= 0.0))
        throw InvalidArgument("delay shifts must be nonnegative");
}

void OrderStatQuery::validate() const {
    if (n < 1) throw InvalidArgument("order statistic: n must be positive");
    if (k < 1 || k > n) throw InvalidArgument("order statistic: k must satisfy 1 <= k <= n");
    if (!(beta > 0.0) || beta > 1.0) throw InvalidArgument("batch scale must lie in (0, 1]");
}

double sample_response(const DelayModel& model, double beta, Rng& rng) {
    if (!(beta > 0.0) || beta > 1.0) throw InvalidArgument("batch scale must lie in (0, 1]");
    double t = model.total_shift();
    if (model.variant == DelayVariant::Generalized) t += rng.exponential(model.comm_rate);
    t += rng.exponential(model.scaled_comp_rate(beta));
    return t;
}

double mean_order_stat_simplified(const DelayModel& model, const OrderStatQuery& q) {
    if (model.variant != DelayVariant::Simplified)
        throw InvalidArgument("mean_order_stat_simplified requires the simplified model");
    model.validate();
    q.validate();
    return q.beta / model.comp_rate * harmonic_tail(q.n, q.k) + model.comp_shift + model.comm_shift;
}

double mean_order_stat_closed_form(const DelayModel& model, const OrderStatQuery& q) {
    if (model.variant != DelayVariant::Generalized)
        throw InvalidArgument("closed form order statistic requires the generalized model");
    model.validate();
    q.validate();
    const double ly = model.scaled_comp_rate(q.beta);
    if (rates_coincide(model.comm_rate, ly))
        throw InvalidArgument("closed form requires distinct communication and computation rates");
    const auto r = closed_form_sum(model.comm_rate, ly, q.k, q.n);
    return static_cast<double>(r.value) + model.total_shift();
}

double mean_order_stat_quadrature(const DelayModel& model, const OrderStatQuery& q) {
    model.validate();
    q.validate();
    auto survival = [&](double z) { return order_stat_survival(model, q, z); };

    // Extend the upper limit until the order statistic survival is negligible.
    double slowest_mean = q.beta / model.comp_rate;
    if (model.variant == DelayVariant::Generalized) slowest_mean += 1.0 / model.comm_rate;
    double z_max = slowest_mean;
    while (survival(z_max) >= 1e-12) z_max *= 2.0;

    // Split at a few mean multiples so the adaptive rule sees the bulk.
    double total = 0.0;
    double lo = 0.0;
    for (double hi = std::min(slowest_mean, z_max);; hi = std::min(hi * 2.0, z_max)) {
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(survival, lo, hi, 15,
                                                                                1e-13);
        lo = hi;
        if (hi >= z_max) break;
    }
    return total + model.total_shift();
}

double mean_order_stat_general(const DelayModel& model, const OrderStatQuery& q,
                               const OrderStatOptions& options) {
    if (model.variant != DelayVariant::Generalized)
        throw InvalidArgument("mean_order_stat_general requires the generalized model");
    model.validate();
    q.validate();
    const double ly = model.scaled_comp_rate(q.beta);
    const bool equal_rates = rates_coincide(model.comm_rate, ly);

    switch (options.method) {
        case OrderStatMethod::Quadrature:
            return mean_order_stat_quadrature(model, q);
        case OrderStatMethod::ClosedForm:
            return mean_order_stat_closed_form(model, q);
        case OrderStatMethod::Auto:
            break;
    }
    // Equal rates: Erlang(2) responses, handled by the quadrature path whose
    // CDF has the Erlang limit built in.
    if (equal_rates || q.n > options.closed_form_max_n) return mean_order_stat_quadrature(model, q);

    const auto r = closed_form_sum(model.comm_rate, ly, q.k, q.n);
    const long double cancellation = r.max_term * LDBL_EPSILON * r.terms;
    if (!std::isfinite(static_cast<double>(r.value)) ||
        cancellation > 1e-10L * std::abs(r.value))
        return mean_order_stat_quadrature(model, q);
    return static_cast<double>(r.value) + model.total_shift();
}

double mean_order_stat(const DelayModel& model, const OrderStatQuery& q,
                       const OrderStatOptions& options) {
    return model.variant == DelayVariant::Simplified ? mean_order_stat_simplified(model, q)
                                                     : mean_order_stat_general(model, q, options);
}

double d_mean_order_stat_dbeta(const DelayModel& model, const OrderStatQuery& q, int beta_levels) {
    q.validate();
    if (model.variant == DelayVariant::Simplified) {
        model.validate();
        return harmonic_tail(q.n, q.k) / model.comp_rate;
    }
    if (beta_levels < 1) throw InvalidArgument("beta resolution must be positive");
    const double h = std::max(1.0 / (4.0 * beta_levels), 1e-4);
    const double lo = std::max(q.beta - h, 0.5 * q.beta);
    const double hi = std::min(q.beta + h, 1.0);
    OrderStatQuery ql = q, qh = q;
    ql.beta = lo;
    qh.beta = hi;
    return (mean_order_stat_general(model, qh) - mean_order_stat_general(model, ql)) / (hi - lo);
}

double response_survival(const DelayModel& model, double beta, double z) {
    if (z <= 0.0) return 1.0;
    const double ly = model.scaled_comp_rate(beta);
    if (model.variant == DelayVariant::Simplified) return std::exp(-ly * z);
    // Hypoexponential survival e^{-lx z} (1 + lx (1 - e^{-(ly - lx) z}) / (ly - lx)),
    // written with expm1 so it degrades gracefully into the Erlang(2) limit
    // e^{-l z} (1 + l z) as the rates approach each other.
    const double lx = model.comm_rate;
    const double d = ly - lx;
    double factor;
    if (d == 0.0) {
        factor = lx * z;
    } else if (d > 0.0) {
        factor = lx * (-std::expm1(-d * z)) / d;
    } else {
        // Swap roles so the exponential factor stays bounded.
        return std::exp(-ly * z) * (1.0 + ly * (-std::expm1(d * z)) / (-d));
    }
    return std::exp(-lx * z) * (1.0 + factor);
}

double response_cdf(const DelayModel& model, double beta, double z) {
    if (z <= 0.0) return 0.0;
    return std::clamp(1.0 - response_survival(model, beta, z), 0.0, 1.0);
}

McEstimate mc_order_stat_oracle(const DelayModel& model, const OrderStatQuery& q,
                                std::int64_t num_samples, std::uint64_t seed) {
    model.validate();
    q.validate();
    if (num_samples < 10000) throw InvalidArgument("Monte-Carlo oracle needs at least 10^4 samples");

    // Fixed chunking keeps the estimate independent of the thread count.
    constexpr int kChunks = 64;
    struct Partial {
        double sum = 0.0;
        double sum_sq = 0.0;
        std::int64_t count = 0;
    };
    std::vector<Partial> partials(kChunks);

    auto run_chunk = [&](int chunk) {
        const std::uint64_t path[] = {static_cast<std::uint64_t>(chunk)};
        Rng rng(derive_seed(seed, path));
        const std::int64_t begin = num_samples * chunk / kChunks;
        const std::int64_t end = num_samples * (chunk + 1) / kChunks;
        std::vector<double> times(static_cast<std::size_t>(q.n));
        Partial p;
        for (std::int64_t i = begin; i < end; ++i) {
            for (auto& t : times) t = sample_response(model, q.beta, rng);
            auto kth = times.begin() + (q.k - 1);
            std::nth_element(times.begin(), kth, times.end());
            p.sum += *kth;
            p.sum_sq += *kth * *kth;
            ++p.count;
        }
        partials[static_cast<std::size_t>(chunk)] = p;
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), kChunks));
    if (workers == 1) {
        for (int c = 0; c < kChunks; ++c) run_chunk(c);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (int c = static_cast<int>(w); c < kChunks; c += static_cast<int>(workers)) run_chunk(c);
            });
    }

    double sum = 0.0, sum_sq = 0.0;
    for (const auto& p : partials) {
        sum += p.sum;
        sum_sq += p.sum_sq;
    }
    const auto count = static_cast<double>(num_samples);
    const double mean = sum / count;
    const double var = std::max(0.0, (sum_sq - count * mean * mean) / (count - 1.0));
    return {mean, std::sqrt(var / count)};
}

}  // namespace straggler
