#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pessimlab {

using Vec = std::vector<double>;

// Raised when inputs or config files fail validation (CLI exit code 1).
// Plain std::runtime_error is used for failures at run time (exit code 2).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from a base seed and a stream id.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t s = base ^ (0x632be59bd9b4e019ULL + (stream << 1));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return a ^ (b >> 17);
}

// Deterministic xoshiro256++ generator. All randomness in the library flows
// through explicit Rng instances; there is no hidden global state.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller; consumes exactly two draws per call.
    double normal() {
        const double u1 = (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }

    // Uniform integer in [lo, hi], inclusive.
    long integer(long lo, long hi) {
        return lo + static_cast<long>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    template <typename T>
    void shuffle(std::vector<T>& xs) {
        for (std::size_t i = xs.size(); i > 1; --i) std::swap(xs[i - 1], xs[index(i)]);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<std::uint64_t, 4> state_{};
};

// Runs fn(i) for i in [0, n) on up to `workers` threads. Results must be
// written to disjoint slots so the outcome is identical for any worker count.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

// --workers flag fallback: PESSIMLAB_WORKERS env var, then hardware concurrency.
int default_workers();

inline double clip(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

inline bool all_finite(const Vec& xs) {
    for (double x : xs)
        if (!std::isfinite(x)) return false;
    return true;
}

inline double l2_norm(const Vec& xs) {
    double s = 0.0;
    for (double x : xs) s += x * x;
    return std::sqrt(s);
}

inline double squared_distance(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

// Linear-interpolation quantile of an unsorted sample, p in [0, 1].
double quantile_linear(Vec values, double p);

double mean_of(const Vec& xs);
double median_of(Vec xs);

}  // namespace pessimlab
