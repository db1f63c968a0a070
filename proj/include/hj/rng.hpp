#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace hj {

/// Default seed for every sampled audit; documented in the README so runs
/// are reproducible without flags.
inline constexpr std::uint64_t kDefaultSeed = 12345;

/// SplitMix64 generator. Self-contained so that sampled audits produce the
/// same stream on every platform and compiler (std:: distributions do not
/// guarantee that).
class Rng {
public:
    explicit Rng(std::uint64_t seed = kDefaultSeed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

private:
    std::uint64_t state_;
};

namespace detail {

/// Random convex weights over k vertices (sorted-uniform gaps).
inline std::vector<double> simplex_weights(Rng& rng, std::size_t k) {
    if (k == 1) return {1.0};
    std::vector<double> cuts(k - 1);
    for (auto& c : cuts) c = rng.next_double();
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> w(k);
    double prev = 0.0;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        w[i] = cuts[i] - prev;
        prev = cuts[i];
    }
    w[k - 1] = 1.0 - prev;
    return w;
}

}  // namespace detail

}  // namespace hj
