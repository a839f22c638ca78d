#include "straggler/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace straggler {

double Rng::exponential(double rate) {
    // 1 - u lies in (0, 1], so the log is finite.
    return -std::log1p(-uniform()) / rate;
}

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("Rng::below: bound must be positive");
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            m = static_cast<unsigned __int128>((*this)()) * bound;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

std::uint64_t derive_seed(std::uint64_t master, std::span<const std::uint64_t> path) {
    Rng mixer(master ^ 0x6a09e667f3bcc909ULL);
    std::uint64_t h = mixer();
    for (std::uint64_t p : path) {
        Rng step(h ^ (p * 0x9e3779b97f4a7c15ULL + 0x3c6ef372fe94f82bULL));
        h = step();
    }
    return h;
}

void sample_without_replacement(std::span<const int> pool, int count, Rng& rng,
                                std::vector<int>& scratch, std::vector<int>& out) {
    const auto size = static_cast<int>(pool.size());
    if (count < 0 || count > size)
        throw std::invalid_argument("sample_without_replacement: count out of range");
    scratch.assign(pool.begin(), pool.end());
    out.resize(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(size - i)));
        std::swap(scratch[static_cast<std::size_t>(i)], scratch[static_cast<std::size_t>(j)]);
        out[static_cast<std::size_t>(i)] = scratch[static_cast<std::size_t>(i)];
    }
}

}  // namespace straggler
