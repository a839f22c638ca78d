#pragma once

#include <stdexcept>
#include <string>

namespace straggler {

// Scenario parameters that violate a precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// The requested error cannot be reached (by a stage, or by the whole schedule).
class Unreachable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// No admissible batch scale exists for the requested wait count.
class Infeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Batch scale beta = units / levels, with 1 <= units <= levels. `levels` is
// the resolution of the beta grid (s for the unrestricted grid {1/s, ..., 1}).
// Integer representation keeps ceiling arithmetic and phi comparisons exact.
struct BatchScale {
    int units = 1;
    int levels = 1;

    static BatchScale full(int levels) { return {levels, levels}; }

    double value() const { return static_cast<double>(units) / levels; }
    bool is_full() const { return units == levels; }
    BatchScale next() const { return {units + 1, levels}; }

    void validate() const {
        if (levels < 1 || units < 1 || units > levels)
            throw InvalidArgument("batch scale must be a multiple of 1/" + std::to_string(levels) +
                                  " in (0, 1]");
    }

    friend bool operator==(const BatchScale&, const BatchScale&) = default;
};

// One stage's configuration: wait for k of n workers, each using beta * s samples.
struct StageParams {
    int k = 1;
    BatchScale beta{};
    int s = 1;  // per-worker partition size
    int n = 1;  // cluster size

    double beta_value() const { return beta.value(); }
    double phi() const { return k * beta.value(); }
    // phi scaled by the beta resolution; exact for comparisons.
    long long phi_units() const { return static_cast<long long>(k) * beta.units; }
    // Samples aggregated per iteration: k * beta * s.
    double aggregate_batch() const { return phi() * s; }

    void validate() const {
        if (n < 1) throw InvalidArgument("cluster size n must be positive");
        if (k < 1 || k > n) throw InvalidArgument("wait count k must satisfy 1 <= k <= n");
        if (s < 1) throw InvalidArgument("partition size s must be positive");
        beta.validate();
    }
};

}  // namespace straggler
