#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace straggler {

// SplitMix64: small-state generator used for counter-derived substreams.
// Satisfies UniformRandomBitGenerator.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Exponential with the given rate, via inversion.
    double exponential(double rate);

    // Uniform integer on [0, bound), unbiased (Lemire's method).
    std::uint64_t below(std::uint64_t bound);

private:
    std::uint64_t state_;
};

// Deterministic child seed for a path of indices under a master seed, e.g.
// (master, run, iteration, worker).
std::uint64_t derive_seed(std::uint64_t master, std::span<const std::uint64_t> path);

inline Rng substream(std::uint64_t master, std::uint64_t run, std::uint64_t iteration,
                     std::uint64_t worker) {
    const std::uint64_t path[] = {run, iteration, worker};
    return Rng(derive_seed(master, path));
}

// Draws `count` distinct values from `pool` (partial Fisher-Yates on a scratch
// copy) and writes them to `out`, in draw order.
void sample_without_replacement(std::span<const int> pool, int count, Rng& rng,
                                std::vector<int>& scratch, std::vector<int>& out);

}  // namespace straggler
