#pragma once

// Dirichlet polynomials D(s) = sum_n c_n n^{-s}, s = sigma + i t, and their
// torus counterparts Q(z) = sum_n c_n n^{-sigma} e^{2 pi i <a(n), z>}, where
// a(n) is the vector of prime valuations of n. The substitution
// z_j = -t log(p_j) / (2 pi) mod 1 maps the line onto the torus exactly.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dirsup/arith.hpp"
#include "dirsup/errors.hpp"
#include "dirsup/noise.hpp"
#include "dirsup/random.hpp"
#include "dirsup/weights.hpp"

namespace dirsup {

using cplx = std::complex<double>;

inline constexpr int poly_format_version = 1;

struct PolyTerm {
    std::uint64_t n;
    double coeff;
    bool operator==(const PolyTerm&) const = default;
};

struct NoiseMeta {
    NoiseKind kind;
    std::uint64_t seed;
};

struct DirichletPoly {
    std::uint64_t N = 0;
    double sigma = 0;
    std::vector<PolyTerm> coeffs;  // ascending n, zeros omitted
    std::string weight_id;
    std::optional<NoiseMeta> noise;  // nullopt: deterministic

    double coefficient(std::uint64_t n) const {
        auto it = std::lower_bound(coeffs.begin(), coeffs.end(), n,
                                   [](const PolyTerm& t, std::uint64_t v) { return t.n < v; });
        return (it != coeffs.end() && it->n == n) ? it->coeff : 0.0;
    }
};

// coeff_n = noise_n d(n), with noise_n = 1 when no draw is given.
inline DirichletPoly build_poly(std::uint64_t N, double sigma, const WeightSpec& spec, const PrimeTable& table,
                                const NoiseDraw* noise = nullptr) {
    if (N < 1)
        throw invalid_argument("build_poly: N must be >= 1");
    if (!(sigma >= 0.0 && sigma <= 0.5))
        throw invalid_argument("build_poly: sigma must lie in [0, 1/2]");
    if (noise && noise->values.size() < N)
        throw invalid_argument("build_poly: noise draw shorter than N");
    DirichletPoly poly;
    poly.N = N;
    poly.sigma = sigma;
    poly.weight_id = format_weight(spec);
    if (noise)
        poly.noise = NoiseMeta{noise->kind, noise->seed};
    for (std::uint64_t n = 1; n <= N; ++n) {
        const double d = eval_weight(spec, n, table);
        if (d == 0.0)
            continue;
        const double c = noise ? noise->at(n) * d : d;
        if (c != 0.0)
            poly.coeffs.push_back({n, c});
    }
    return poly;
}

// Keeps only the terms whose n is y-smooth: P+(n) <= bound.
inline DirichletPoly restrict_to_smooth(DirichletPoly poly, std::uint64_t bound, const PrimeTable& table) {
    std::erase_if(poly.coeffs, [&](const PolyTerm& t) { return p_plus(t.n, table) > bound; });
    return poly;
}

namespace detail {

inline double frac(long double x) { return static_cast<double>(x - std::floor(x)); }

inline cplx unit_phase(double turns) {
    const double a = 2.0 * std::numbers::pi * turns;
    return {std::cos(a), std::sin(a)};
}

} // namespace detail

inline constexpr long double inv_two_pi = 0.159154943091895335768883763372514362L;

// Evaluates D(sigma + i t) for many t. Phases t log(n) / (2 pi) are reduced
// mod 1 in extended precision before the trigonometric call.
class LineEvaluator {
public:
    explicit LineEvaluator(const DirichletPoly& poly) {
        for (const auto& term : poly.coeffs) {
            amp_.push_back(term.coeff * std::pow(static_cast<double>(term.n), -poly.sigma));
            turns_.push_back(std::log(static_cast<long double>(term.n)) * inv_two_pi);
        }
    }
    cplx operator()(double t) const {
        cplx acc = 0.0;
        for (std::size_t k = 0; k < amp_.size(); ++k)
            acc += amp_[k] * detail::unit_phase(-detail::frac(static_cast<long double>(t) * turns_[k]));
        return acc;
    }

private:
    std::vector<double> amp_;
    std::vector<long double> turns_;
};

inline cplx eval_line(const DirichletPoly& poly, double t) { return LineEvaluator(poly)(t); }

// ---------------------------------------------------------------------------
// Torus polynomial
// ---------------------------------------------------------------------------

struct Frequency {
    std::size_t index;   // j (1-based)
    unsigned exponent;   // a_j(n) >= 1
    bool operator==(const Frequency&) const = default;
};

struct TorusTerm {
    double amplitude;              // coeff_n n^{-sigma}
    std::vector<Frequency> freq;   // sparse a(n), ascending index
    std::uint64_t n;
};

struct TorusPoly {
    std::size_t tau = 0;
    std::vector<TorusTerm> terms;

    double trivial_upper() const {
        CompensatedSum s;
        for (const auto& t : terms)
            s.add(std::abs(t.amplitude));
        return s.value();
    }
};

inline TorusPoly to_torus(const DirichletPoly& poly, std::size_t tau, const PrimeTable& table) {
    TorusPoly tp;
    tp.tau = tau;
    tp.terms.reserve(poly.coeffs.size());
    for (const auto& term : poly.coeffs) {
        const auto f = factorize(term.n, table);
        TorusTerm tt{term.coeff * std::pow(static_cast<double>(term.n), -poly.sigma), {}, term.n};
        for (const auto& pp : f.factors) {
            if (pp.index > tau)
                throw invalid_argument("to_torus: n = " + std::to_string(term.n) + " has prime factor p_" +
                                       std::to_string(pp.index) + " beyond tau = " + std::to_string(tau));
            tt.freq.push_back({pp.index, pp.exponent});
        }
        tp.terms.push_back(std::move(tt));
    }
    return tp;
}

// <a(n), z> mod 1 in extended precision.
inline double torus_phase(const TorusTerm& term, std::span<const double> z) {
    long double s = 0;
    for (const auto& f : term.freq)
        s += static_cast<long double>(f.exponent) * z[f.index - 1];
    return detail::frac(s);
}

inline cplx eval_torus(const TorusPoly& tp, std::span<const double> z) {
    if (z.size() != tp.tau)
        throw invalid_argument("eval_torus: point has dimension " + std::to_string(z.size()) + ", expected " +
                               std::to_string(tp.tau));
    cplx acc = 0.0;
    for (const auto& term : tp.terms)
        acc += term.amplitude * detail::unit_phase(torus_phase(term, z));
    return acc;
}

// Torus image of the line point t: z_j = -t log(p_j) / (2 pi) mod 1.
inline void line_to_torus(double t, std::span<const long double> prime_turns, std::span<double> z) {
    for (std::size_t j = 0; j < prime_turns.size(); ++j)
        z[j] = detail::frac(-static_cast<long double>(t) * prime_turns[j]);
}

inline std::vector<long double> prime_turns(std::size_t tau, const PrimeTable& table) {
    std::vector<long double> out(tau);
    for (std::size_t j = 1; j <= tau; ++j)
        out[j - 1] = std::log(static_cast<long double>(table.prime(j))) * inv_two_pi;
    return out;
}

inline std::vector<double> line_to_torus(double t, std::size_t tau, const PrimeTable& table) {
    std::vector<double> z(tau);
    line_to_torus(t, prime_turns(tau, table), z);
    return z;
}

struct KroneckerGap {
    double sup_line = 0;           // max |D| over the t grid
    double sup_torus_images = 0;   // max |Q| over the torus images of the grid
    double sup_torus_random = 0;   // max |Q| over z_budget uniform points
    double sup_torus_sampled = 0;  // max of the two above
    std::uint64_t grid_points = 0;
    double relative_gap() const {
        return sup_torus_sampled > 0 ? (sup_torus_sampled - sup_line) / sup_torus_sampled : 0.0;
    }
};

// Diagnostic for sup_t |D| = sup_z |Q|: the line can only reach torus values,
// so sup_line <= sup_torus_sampled up to rounding; closeness is sampled.
// Sampling is meaningful only for small tau (roughly tau <= 6).
inline KroneckerGap kronecker_gap(const DirichletPoly& poly, std::size_t tau, double t_begin, double t_end,
                                  double t_step, std::uint64_t z_budget, std::uint64_t seed,
                                  const PrimeTable& table) {
    if (!(t_step > 0) || !(t_end >= t_begin))
        throw invalid_argument("kronecker_gap: bad t grid");
    const auto tp = to_torus(poly, tau, table);
    const LineEvaluator line(poly);
    const auto turns = prime_turns(tau, table);
    std::vector<double> z(tau);
    KroneckerGap g;
    const auto steps = static_cast<std::uint64_t>(std::floor((t_end - t_begin) / t_step + 1e-9));
    for (std::uint64_t k = 0; k <= steps; ++k) {
        const double t = t_begin + static_cast<double>(k) * t_step;
        g.sup_line = std::max(g.sup_line, std::abs(line(t)));
        line_to_torus(t, turns, z);
        g.sup_torus_images = std::max(g.sup_torus_images, std::abs(eval_torus(tp, z)));
    }
    g.grid_points = steps + 1;
    Rng rng(seed);
    for (std::uint64_t k = 0; k < z_budget; ++k) {
        for (auto& zj : z)
            zj = rng.uniform();
        g.sup_torus_random = std::max(g.sup_torus_random, std::abs(eval_torus(tp, z)));
    }
    g.sup_torus_sampled = std::max(g.sup_torus_images, g.sup_torus_random);
    return g;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const DirichletPoly& p) {
    nlohmann::json j;
    j["format_version"] = poly_format_version;
    j["N"] = p.N;
    j["sigma"] = p.sigma;
    j["weight_id"] = p.weight_id;
    if (p.noise)
        j["noise_meta"] = {{"kind", std::string(noise_name(p.noise->kind))},
                           {"seed", p.noise->seed},
                           {"generator_id", std::string(generator_id)}};
    else
        j["noise_meta"] = "deterministic";
    auto& c = j["coeffs"] = nlohmann::json::array();
    for (const auto& t : p.coeffs)
        c.push_back({t.n, t.coeff});
    return j;
}

inline DirichletPoly poly_from_json(const nlohmann::json& j) {
    if (j.at("format_version").get<int>() != poly_format_version)
        throw invalid_argument("polynomial JSON: unsupported format_version");
    DirichletPoly p;
    p.N = j.at("N").get<std::uint64_t>();
    p.sigma = j.at("sigma").get<double>();
    p.weight_id = j.at("weight_id").get<std::string>();
    const auto& nm = j.at("noise_meta");
    if (nm.is_object())
        p.noise = NoiseMeta{parse_noise_kind(nm.at("kind").get<std::string>()), nm.at("seed").get<std::uint64_t>()};
    for (const auto& c : j.at("coeffs"))
        p.coeffs.push_back({c.at(0).get<std::uint64_t>(), c.at(1).get<double>()});
    return p;
}

} // namespace dirsup
