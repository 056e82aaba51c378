#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dirsup/errors.hpp"
#include "dirsup/random.hpp"

namespace dirsup {

enum class NoiseKind { rademacher, gaussian };

inline std::string_view noise_name(NoiseKind k) { return k == NoiseKind::rademacher ? "rademacher" : "gaussian"; }

inline NoiseKind parse_noise_kind(std::string_view s) {
    if (s == "rademacher")
        return NoiseKind::rademacher;
    if (s == "gaussian")
        return NoiseKind::gaussian;
    throw invalid_argument("unknown noise kind '" + std::string(s) + "'");
}

// values[n-1] is epsilon_n (rademacher) or mu_n (gaussian), n = 1..N.
struct NoiseDraw {
    NoiseKind kind = NoiseKind::rademacher;
    std::uint64_t seed = 0;
    std::vector<double> values;

    double at(std::uint64_t n) const { return values.at(n - 1); }
};

// Rademacher: one engine bit per value, low bit first. Gaussian: Box-Muller
// on consecutive uniform pairs.
inline NoiseDraw draw_noise(NoiseKind kind, std::uint64_t seed, std::uint64_t N) {
    if (N < 1)
        throw invalid_argument("draw_noise: N must be >= 1");
    NoiseDraw d{kind, seed, {}};
    d.values.reserve(N);
    Rng rng(seed);
    if (kind == NoiseKind::rademacher) {
        std::uint64_t word = 0;
        for (std::uint64_t i = 0; i < N; ++i) {
            if (i % 64 == 0)
                word = rng.bits();
            d.values.push_back((word & 1u) ? 1.0 : -1.0);
            word >>= 1;
        }
    } else {
        while (d.values.size() < N) {
            auto [a, b] = rng.normal_pair();
            d.values.push_back(a);
            if (d.values.size() < N)
                d.values.push_back(b);
        }
    }
    return d;
}

} // namespace dirsup
