#pragma once

#include <cmath>
#include <cstdint>

#include "vicontour/types.hpp"

namespace vic {

/// Portable counter-based generator (SplitMix64 output function).
/// The k-th value of stream `seed` is mix(seed + (k+1)*GOLDEN), which makes
/// every draw a pure function of (seed, k): identical across platforms and
/// independent of evaluation order.
namespace rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t at(std::uint64_t seed, std::uint64_t k) {
    return mix(seed + (k + 1) * kGolden);
}

/// Uniform in the open interval (0,1).
inline double uniformAt(std::uint64_t seed, std::uint64_t k) {
    return (static_cast<double>(at(seed, k) >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on the value pair (2k, 2k+1).
inline double gaussianAt(std::uint64_t seed, std::uint64_t k) {
    const double u1 = uniformAt(seed, 2 * k);
    const double u2 = uniformAt(seed, 2 * k + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

/// Sub-stream seed for trial `t` of a study, documented so parallel and
/// sequential executions agree.
inline std::uint64_t subSeed(std::uint64_t seed, std::uint64_t t) {
    return at(seed ^ 0xD1B54A32D192ED03ull, t);
}

}  // namespace rng

/// Small sequential convenience wrapper over the counter-based stream.
class SplitMix {
public:
    explicit SplitMix(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next() { return rng::at(seed_, counter_++); }
    double uniform() { return rng::uniformAt(seed_, counter_++); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double gaussian() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace vic
