#pragma once

// Right-hand sides of the upper and lower estimates, evaluated with their
// unspecified constants set to 1. Every envelope carries its factors so that
// consumers compare ratios and growth orders, never absolute values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dirsup/arith.hpp"
#include "dirsup/errors.hpp"
#include "dirsup/weights.hpp"

namespace dirsup {

// ---------------------------------------------------------------------------
// Regimes
// ---------------------------------------------------------------------------

enum class RegimeCase { large_tau, mid_tau, small_tau };

inline std::string_view regime_name(RegimeCase c) {
    switch (c) {
    case RegimeCase::large_tau: return "large_tau";
    case RegimeCase::mid_tau: return "mid_tau";
    case RegimeCase::small_tau: return "small_tau";
    }
    return "?";
}

struct Regime {
    RegimeCase case_id = RegimeCase::large_tau;
    double b_low = 0;   // (N / (log N loglog N))^{1/2}
    double b_high = 0;  // (N loglog N / log N)^{1/2}
};

inline double regime_b_low(double N) {
    const double L = std::log(N);
    return std::sqrt(N / (L * std::log(L)));
}

inline double regime_b_high(double N) {
    const double L = std::log(N);
    return std::sqrt(N * std::log(L) / L);
}

// Boundary ties go to the higher-tau case. The caller is responsible for
// tau <= pi(N).
inline Regime classify_regime(double N, double tau) {
    if (!(N >= 16))
        throw invalid_argument("classify_regime: N must be >= 16");
    if (!(tau >= 1))
        throw invalid_argument("classify_regime: tau must be >= 1");
    Regime r;
    r.b_low = regime_b_low(N);
    r.b_high = regime_b_high(N);
    r.case_id = tau >= r.b_high ? RegimeCase::large_tau
              : tau >= r.b_low  ? RegimeCase::mid_tau
                                : RegimeCase::small_tau;
    return r;
}

// ---------------------------------------------------------------------------
// Envelopes
// ---------------------------------------------------------------------------

struct BoundEnvelope {
    double value = 0;  // product of the components
    std::map<std::string, double> components;
    std::string constant_symbol;
};

namespace detail {

inline BoundEnvelope make_envelope(std::string symbol, std::initializer_list<std::pair<const char*, double>> parts) {
    BoundEnvelope e;
    e.constant_symbol = std::move(symbol);
    e.value = 1.0;
    for (const auto& [name, v] : parts) {
        e.components[name] = v;
        e.value *= v;
    }
    return e;
}

inline void check_sigma(double sigma, bool allow_half, const char* who) {
    if (!(sigma >= 0.0 && (allow_half ? sigma <= 0.5 : sigma < 0.5)))
        throw invalid_argument(std::string(who) + ": sigma out of range");
}

} // namespace detail

// N^{1-sigma} D2~(N) / log N. Real N is accepted so the formula can be
// evaluated off the integers.
inline BoundEnvelope envelope_theorem1(double N, double sigma, double D2_tilde) {
    detail::check_sigma(sigma, true, "envelope_theorem1");
    if (!(N > 1))
        throw invalid_argument("envelope_theorem1: N must exceed 1");
    return detail::make_envelope("C_{sigma,d}", {{"N^{1-sigma}", std::pow(N, 1.0 - sigma)},
                                                 {"D2_tilde(N)", D2_tilde},
                                                 {"1/log N", 1.0 / std::log(N)}});
}

// with_extra drops D2~(N), which is admissible only when D2~(M) <= M^b with
// b < 1/(sqrt 5 + 1) holds on [2, N].
inline BoundEnvelope envelope_theorem1(std::uint64_t N, double sigma, const WeightSpec& spec, const PrimeTable& table,
                                       bool with_extra) {
    if (N < 2)
        throw invalid_argument("envelope_theorem1: N must be >= 2");
    if (with_extra) {
        const auto rep = check_condition(spec, ConditionId::extra_b, N, {}, table);
        if (!rep.holds)
            throw condition_violated("envelope_theorem1: fitted b = " +
                                     std::to_string(rep.fitted_constants.at("b_fit")) + " is not below 1/(sqrt 5 + 1)");
        auto e = envelope_theorem1(static_cast<double>(N), sigma, 1.0);
        e.components.erase("D2_tilde(N)");
        e.constant_symbol = "C_{sigma,b}";
        return e;
    }
    return envelope_theorem1(static_cast<double>(N), sigma, characteristic_sums(spec, N, table).D2_tilde);
}

// D2~(N) B with the three-case B:
//   large  N^{1/2-sigma} tau^{1/2} (log N)^{-1/2}
//   mid    N^{3/4-sigma} (loglog N)^{1/4} (log N)^{-3/4}
//   small  N^{1/2-sigma} (tau loglog tau / log tau)^{1/2}, tau >= 3
inline BoundEnvelope envelope_theorem2(double N, double sigma, double tau, double D2_tilde) {
    detail::check_sigma(sigma, false, "envelope_theorem2");
    const auto reg = classify_regime(N, tau);
    const double L = std::log(N);
    switch (reg.case_id) {
    case RegimeCase::large_tau:
        return detail::make_envelope("C_{sigma,d}", {{"D2_tilde(N)", D2_tilde},
                                                     {"N^{1/2-sigma}", std::pow(N, 0.5 - sigma)},
                                                     {"tau^{1/2}", std::sqrt(tau)},
                                                     {"(log N)^{-1/2}", 1.0 / std::sqrt(L)}});
    case RegimeCase::mid_tau:
        return detail::make_envelope("C_{sigma,d}", {{"D2_tilde(N)", D2_tilde},
                                                     {"N^{3/4-sigma}", std::pow(N, 0.75 - sigma)},
                                                     {"(loglog N)^{1/4}", std::pow(std::log(L), 0.25)},
                                                     {"(log N)^{-3/4}", std::pow(L, -0.75)}});
    case RegimeCase::small_tau:
        break;
    }
    if (tau < 3)
        throw invalid_argument("envelope_theorem2: small-tau case needs tau >= 3");
    const double lt = std::log(tau);
    return detail::make_envelope("C_{sigma,d}", {{"D2_tilde(N)", D2_tilde},
                                                 {"N^{1/2-sigma}", std::pow(N, 0.5 - sigma)},
                                                 {"(tau loglog tau/log tau)^{1/2}", std::sqrt(tau * std::log(lt) / lt)}});
}

inline BoundEnvelope envelope_theorem2(std::uint64_t N, double sigma, std::size_t tau, const WeightSpec& spec,
                                       const PrimeTable& table) {
    return envelope_theorem2(static_cast<double>(N), sigma, static_cast<double>(tau),
                             characteristic_sums(spec, N, table).D2_tilde);
}

struct SmallTauEnvelopes {
    BoundEnvelope lower;
    BoundEnvelope upper;
};

// sigma < 1/2: lower = Pi^{1/2} tau^{1-sigma} / (log tau)^sigma,
//              upper = Pi^{1/2} tau^{3/2-2 sigma} / (log tau)^{2 sigma},
// with Pi = Pi_sigma(tau) = prod_{l<=tau} (1 - p_l^{-2 sigma})^{-1}.
// sigma = 1/2: lower = tau^{1/2}, upper = tau^{1/2} (loglog tau)^{1/2}, tau >= 16.
inline SmallTauEnvelopes envelope_smalltau(std::size_t tau, double sigma, const PrimeTable& table) {
    if (!(sigma > 0.0 && sigma <= 0.5))
        throw invalid_argument("envelope_smalltau: sigma must lie in (0, 1/2]");
    if (tau < 3)
        throw invalid_argument("envelope_smalltau: tau must be >= 3");
    const double t = static_cast<double>(tau);
    const double lt = std::log(t);
    if (sigma == 0.5) {
        if (tau < 16)
            throw invalid_argument("envelope_smalltau: sigma = 1/2 needs tau >= 16");
        return {detail::make_envelope("C_1", {{"tau^{1/2}", std::sqrt(t)}}),
                detail::make_envelope("C_2", {{"tau^{1/2}", std::sqrt(t)},
                                              {"(loglog tau)^{1/2}", std::sqrt(std::log(lt))}})};
    }
    const double root_pi =
        std::sqrt(euler_weighted_product(tau, 2.0 * sigma, FactorSign::minus, ProductForm::power, table));
    return {detail::make_envelope("c_sigma", {{"Pi_sigma(tau)^{1/2}", root_pi},
                                              {"tau^{1-sigma}", std::pow(t, 1.0 - sigma)},
                                              {"(log tau)^{-sigma}", std::pow(lt, -sigma)}}),
            detail::make_envelope("C_sigma", {{"Pi_sigma(tau)^{1/2}", root_pi},
                                              {"tau^{3/2-2sigma}", std::pow(t, 1.5 - 2.0 * sigma)},
                                              {"(log tau)^{-2sigma}", std::pow(lt, -2.0 * sigma)}})};
}

// N^{1/2-sigma} max(1, S1)^{1/2} S2 with S1 = sum 1/p_k and S2 = sum p_k^{-1/2}
// over k <= nu, k not in K. Requires 1 <= nu <= (N / (log N loglog N))^{1/2}.
inline BoundEnvelope envelope_theorem3(std::uint64_t N, double sigma, std::size_t nu, std::span<const std::size_t> K,
                                       const PrimeTable& table) {
    if (!(sigma > 0.0 && sigma < 0.5))
        throw invalid_argument("envelope_theorem3: sigma must lie in (0, 1/2)");
    if (N < 16)
        throw invalid_argument("envelope_theorem3: N must be >= 16");
    const double Nd = static_cast<double>(N);
    if (nu < 1 || static_cast<double>(nu) > regime_b_low(Nd))
        throw condition_violated("envelope_theorem3: nu = " + std::to_string(nu) +
                                 " outside [1, (N/(log N loglog N))^{1/2}]");
    std::vector<std::size_t> sorted(K.begin(), K.end());
    std::sort(sorted.begin(), sorted.end());
    CompensatedSum s1, s2;
    for (std::size_t k = 1; k <= nu; ++k) {
        if (std::binary_search(sorted.begin(), sorted.end(), k))
            continue;
        const double p = static_cast<double>(table.prime(k));
        s1.add(1.0 / p);
        s2.add(1.0 / std::sqrt(p));
    }
    return detail::make_envelope("C_sigma", {{"N^{1/2-sigma}", std::pow(Nd, 0.5 - sigma)},
                                             {"max(1, sum 1/p)^{1/2}", std::sqrt(std::max(1.0, s1.value()))},
                                             {"sum 1/sqrt(p)", s2.value()}});
}

// ---------------------------------------------------------------------------
// Lemma ratios and the choice of nu
// ---------------------------------------------------------------------------

enum class AbelForm { abel0, abel1, abel2 };

inline AbelForm parse_abel_form(std::string_view s) {
    if (s == "abel0") return AbelForm::abel0;
    if (s == "abel1") return AbelForm::abel1;
    if (s == "abel2") return AbelForm::abel2;
    throw invalid_argument("unknown lemma form: " + std::string(s));
}

// LHS / RHS with C = 1:
//   abel0, abel2  sum_{m<=M} d(m)^2 m^{-2 sigma}  /  D2~(M)^2 M^{1-2 sigma}
//   abel1         sum_{m<=M} (N/m)^{1/2} log(N/m)^{-1/2} d(m)  /  D1~(M) (N M)^{1/2} log(N/M)^{-1/2}
inline double lemma21_ratio(std::uint64_t M, std::uint64_t N, double sigma, const WeightSpec& spec,
                            const PrimeTable& table, AbelForm which) {
    if (M < 1 || M > N)
        throw invalid_argument("lemma21_ratio: need 1 <= M <= N");
    if (!(sigma > 0.0 && sigma < 0.5))
        throw invalid_argument("lemma21_ratio: sigma must lie in (0, 1/2)");
    const auto d = weight_values(spec, M, table);
    const auto cs = characteristic_sums_from_values(d);
    const double Md = static_cast<double>(M);
    CompensatedSum lhs;
    if (which == AbelForm::abel1) {
        if (2 * M > N)
            throw invalid_argument("lemma21_ratio: abel1 needs M <= N/2");
        const double Nd = static_cast<double>(N);
        for (std::uint64_t m = 1; m <= M; ++m) {
            const double q = Nd / static_cast<double>(m);
            lhs.add(std::sqrt(q / std::log(q)) * d[m]);
        }
        return lhs.value() / (cs.D1_tilde * std::sqrt(Nd * Md / std::log(Nd / Md)));
    }
    for (std::uint64_t m = 1; m <= M; ++m)
        lhs.add(d[m] * d[m] * std::pow(static_cast<double>(m), -2.0 * sigma));
    return lhs.value() / (cs.D2_tilde * cs.D2_tilde * std::pow(Md, 1.0 - 2.0 * sigma));
}

// round(N^{1/2} (log N)^{-1/2} (loglog N)^{-1/2}), at least 1.
inline std::uint64_t nu_optimal(double N) {
    if (!(N >= 16))
        throw invalid_argument("nu_optimal: N must be >= 16");
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(regime_b_low(N))));
}

// The two terms balanced by nu_optimal: (nu loglog nu / log nu)^{1/2} and
// N^{1/2} / (nu^{1/2} log nu). Needs nu >= 3.
inline std::pair<double, double> nu_balance_terms(double N, double nu) {
    if (!(nu >= 3))
        throw invalid_argument("nu_balance_terms: nu must be >= 3");
    const double ln = std::log(nu);
    return {std::sqrt(nu * std::log(ln) / ln), std::sqrt(N) / (std::sqrt(nu) * ln)};
}

// ---------------------------------------------------------------------------
// Summation by parts
// ---------------------------------------------------------------------------

struct AbelCheck {
    double direct = 0;       // sum_{n<=x} a_n b(n)
    double transformed = 0;  // A(x) b(x) - int_1^x A(t) b'(t) dt
    double difference() const { return std::abs(direct - transformed); }
};

inline constexpr double abel_quadrature_tol = 1e-9;

namespace detail {

inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                           double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

} // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                               int max_depth = 50) {
    if (b <= a)
        return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// a[n] for 1 <= n <= floor(x) (a[0] ignored). A(t) is a step function, so the
// integral is split at the integers and each piece handled by adaptive
// Simpson on the analytic derivative db; the tolerance is shared by length.
inline AbelCheck abel_transform_check(std::span<const double> a, const std::function<double(double)>& b,
                                      const std::function<double(double)>& db, double x) {
    if (!(x >= 1))
        throw invalid_argument("abel_transform_check: x must be >= 1");
    const auto n_max = static_cast<std::uint64_t>(std::floor(x));
    if (a.size() <= n_max)
        throw invalid_argument("abel_transform_check: coefficient vector shorter than floor(x) + 1");
    AbelCheck out;
    CompensatedSum direct, integral;
    double A = 0.0;
    for (std::uint64_t n = 1; n <= n_max; ++n) {
        direct.add(a[n] * b(static_cast<double>(n)));
        A += a[n];
        const double lo = static_cast<double>(n), hi = std::min(x, lo + 1.0);
        if (hi > lo && A != 0.0)
            integral.add(A * adaptive_simpson(db, lo, hi, abel_quadrature_tol * (hi - lo) / std::max(1.0, x - 1.0)));
    }
    out.direct = direct.value();
    out.transformed = A * b(x) - integral.value();
    return out;
}

inline nlohmann::json to_json(const BoundEnvelope& e) {
    return {{"value", e.value}, {"components", e.components}, {"constant_symbol", e.constant_symbol}};
}

inline nlohmann::json to_json(const Regime& r) {
    return {{"case", std::string(regime_name(r.case_id))}, {"b_low", r.b_low}, {"b_high", r.b_high}};
}

} // namespace dirsup
