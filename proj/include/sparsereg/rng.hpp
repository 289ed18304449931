#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sparsereg {

using Rng = std::mt19937_64;

// Draws are implemented directly on the engine output so that sequences are
// reproducible across standard-library implementations.
inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + unit * (hi - lo);
}

inline int uniform_int(Rng& rng, int lo, int hi) {  // inclusive bounds
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(rng() % span);
}

inline double gaussian(Rng& rng, double mean = 0.0, double sigma = 1.0) {
    // Box-Muller; discards the second deviate to keep the stream simple.
    double u1 = uniform(rng);
    double u2 = uniform(rng);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return mean + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace sparsereg
