// rng.hpp - deterministic random generation
//
// All randomized operations in the toolkit draw from this wrapper instead of
// <random> distributions: the mt19937_64 output sequence is pinned by the
// standard but the distribution adaptors are not, and reproducibility across
// toolchains is a hard requirement here.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace wfp {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(splitmix64(seed)) {}

    // Independent stream for a parallelizable work unit; serial and parallel
    // schedules consume identical sequences.
    static Rng derive(uint64_t seed, uint64_t stream) {
        return Rng(splitmix64(seed) ^ splitmix64(stream * 0xD6E8FEB86659FD93ULL + 1));
    }

    uint64_t next_u64() { return eng_(); }

    // Uniform integer in [0, bound). Modulo bias is negligible for the bounds
    // used here and keeps the draw count per call fixed.
    uint64_t below(uint64_t bound) { return bound <= 1 ? 0 : eng_() % bound; }

    // Uniform double in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    // Box-Muller; the paired value is discarded so consumption stays one
    // draw pattern per call regardless of caller interleaving.
    double normal() {
        double u1 = unit();
        double u2 = unit();
        while (u1 <= 0.0) u1 = unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

    // Knuth's product method; adequate for the packet-count scale lambdas.
    uint64_t poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        double limit = std::exp(-lambda);
        uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= unit();
        } while (p > limit);
        return k - 1;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // First k entries of a random permutation of [0, n).
    std::vector<size_t> sample_without_replacement(size_t n, size_t k) {
        std::vector<size_t> idx(n);
        for (size_t i = 0; i < n; ++i) idx[i] = i;
        if (k > n) k = n;
        for (size_t i = 0; i < k; ++i) {
            size_t j = i + static_cast<size_t>(below(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

private:
    std::mt19937_64 eng_;
};

} // namespace wfp
