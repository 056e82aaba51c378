#pragma once

// Prime tables, factorization and smooth-number machinery, plus the
// classical sums and products (Mertens, Euler, Dickman, coprime counts)
// consumed by the rest of the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dirsup/errors.hpp"

namespace dirsup {

// ---------------------------------------------------------------------------
// Constants
// ---------------------------------------------------------------------------

struct AnalyticConstants {
    // Meissel-Mertens constant, OEIS A077761:
    // sum_{p<=x} 1/p = log log x + c1 + o(1).
    static constexpr double mertens_c1 = 0.26149721284764278375542683860869585905;
    // Euler-Mascheroni constant, OEIS A001620.
    static constexpr double euler_gamma = 0.57721566490153286060651209008240243104;
};

// Neumaier-compensated running sum. Used wherever long harmonic-type sums
// are accumulated so results do not depend on summation length.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// ---------------------------------------------------------------------------
// PrimeTable
// ---------------------------------------------------------------------------

// Primes p_1 = 2 < p_2 < ... <= limit with 1-based rank lookup, plus a
// smallest-prime-factor sieve over [0, limit] for O(log n) factorization.
class PrimeTable {
public:
    explicit PrimeTable(std::uint64_t limit) : limit_(limit) {
        if (limit < 2)
            throw invalid_argument("sieve_primes: limit must be >= 2");
        if (limit > 0xFFFFFFFFull)
            throw invalid_argument("sieve_primes: limit must fit in 32 bits");
        spf_.assign(limit + 1, 0);
        for (std::uint64_t i = 2; i <= limit; ++i) {
            if (spf_[i] == 0) {
                spf_[i] = static_cast<std::uint32_t>(i);
                primes_.push_back(i);
            }
            for (std::uint64_t p : primes_) {
                if (p > spf_[i] || i * p > limit)
                    break;
                spf_[i * p] = static_cast<std::uint32_t>(p);
            }
        }
    }

    std::uint64_t limit() const { return limit_; }
    std::span<const std::uint64_t> primes() const { return primes_; }
    std::size_t size() const { return primes_.size(); }

    // p_j, 1-based.
    std::uint64_t prime(std::size_t j) const {
        if (j == 0 || j > primes_.size())
            throw table_too_small("prime index " + std::to_string(j) + " exceeds pi(" +
                                  std::to_string(limit_) + ") = " + std::to_string(primes_.size()));
        return primes_[j - 1];
    }

    // Rank j with p_j = p, or nullopt when p is not a tabulated prime.
    std::optional<std::size_t> index_of(std::uint64_t p) const {
        auto it = std::lower_bound(primes_.begin(), primes_.end(), p);
        if (it == primes_.end() || *it != p)
            return std::nullopt;
        return static_cast<std::size_t>(it - primes_.begin()) + 1;
    }

    bool is_prime(std::uint64_t n) const {
        if (n > limit_)
            throw table_too_small("is_prime: " + std::to_string(n) + " beyond table limit");
        return n >= 2 && spf_[n] == n;
    }

    // pi(x) for x <= limit.
    std::size_t pi(double x) const {
        if (x < 2.0)
            return 0;
        if (x >= static_cast<double>(limit_) + 1.0)
            throw table_too_small("pi(x): x beyond table limit");
        const auto xi = static_cast<std::uint64_t>(std::floor(x));
        return static_cast<std::size_t>(std::upper_bound(primes_.begin(), primes_.end(), xi) -
                                        primes_.begin());
    }

    std::uint32_t smallest_factor(std::uint64_t n) const { return spf_.at(n); }

    // Newline-delimited decimal dump, for debugging.
    void dump(std::ostream& os) const {
        for (auto p : primes_)
            os << p << '\n';
    }

private:
    std::uint64_t limit_;
    std::vector<std::uint64_t> primes_;
    std::vector<std::uint32_t> spf_;
};

inline PrimeTable sieve_primes(std::uint64_t limit) { return PrimeTable(limit); }

// ---------------------------------------------------------------------------
// Factorization
// ---------------------------------------------------------------------------

struct PrimePower {
    std::size_t index;      // j, so that prime == p_j
    std::uint64_t prime;
    unsigned exponent;      // a_j(n) >= 1

    bool operator==(const PrimePower&) const = default;
};

struct Factorization {
    std::uint64_t n = 1;
    std::vector<PrimePower> factors;  // sorted by index

    std::size_t omega() const { return factors.size(); }
    unsigned big_omega() const {
        unsigned s = 0;
        for (const auto& f : factors)
            s += f.exponent;
        return s;
    }
    // a_j(n), zero when p_j does not divide n.
    unsigned valuation(std::size_t j) const {
        for (const auto& f : factors)
            if (f.index == j)
                return f.exponent;
        return 0;
    }
    std::uint64_t largest_prime() const { return factors.empty() ? 1 : factors.back().prime; }
};

inline Factorization factorize(std::uint64_t n, const PrimeTable& table) {
    if (n == 0)
        throw invalid_argument("factorize: n must be >= 1");
    Factorization out;
    out.n = n;
    auto push = [&](std::uint64_t p, unsigned e) {
        out.factors.push_back({*table.index_of(p), p, e});
    };
    std::uint64_t rem = n;
    if (n <= table.limit()) {
        while (rem > 1) {
            const std::uint64_t p = table.smallest_factor(rem);
            unsigned e = 0;
            while (rem % p == 0) {
                rem /= p;
                ++e;
            }
            push(p, e);
        }
        return out;
    }
    for (std::uint64_t p : table.primes()) {
        if (p > rem / p)
            break;
        if (rem % p != 0)
            continue;
        unsigned e = 0;
        while (rem % p == 0) {
            rem /= p;
            ++e;
        }
        push(p, e);
    }
    if (rem > 1) {
        if (rem > table.limit())
            throw table_too_small("factorize: " + std::to_string(n) + " has a prime factor beyond " +
                                  std::to_string(table.limit()));
        push(rem, 1);
    }
    return out;
}

// Largest prime divisor; P+(1) := 1.
inline std::uint64_t p_plus(std::uint64_t n, const PrimeTable& table) {
    return factorize(n, table).largest_prime();
}

// ---------------------------------------------------------------------------
// Smooth numbers
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t default_smooth_cap = 100'000'000;

namespace detail {

inline std::uint64_t floor_to_u64(double x) {
    if (!(x >= 1.0))
        throw invalid_argument("smooth enumeration: x must be >= 1");
    if (x >= 9.2e18)
        throw invalid_argument("smooth enumeration: x exceeds 2^63");
    return static_cast<std::uint64_t>(std::floor(x));
}

// Primes usable as factors of y-smooth n <= x.
inline std::span<const std::uint64_t> smooth_primes(std::uint64_t x, double y, const PrimeTable& table) {
    if (!(y >= 1.0))
        throw invalid_argument("smooth enumeration: y must be >= 1");
    const double bound = std::min(y, static_cast<double>(x));
    if (bound >= static_cast<double>(table.limit()) + 1.0)
        throw table_too_small("smooth enumeration: min(x, y) beyond table limit");
    return table.primes().first(table.pi(bound));
}

template <class Visit>
void smooth_dfs(std::uint64_t n, std::size_t first, std::uint64_t x,
                std::span<const std::uint64_t> primes, Visit& visit) {
    for (std::size_t k = first; k < primes.size(); ++k) {
        const std::uint64_t p = primes[k];
        if (n > x / p)
            break;
        std::uint64_t m = n * p;
        while (true) {
            visit(m);
            smooth_dfs(m, k + 1, x, primes, visit);
            if (m > x / p)
                break;
            m *= p;
        }
    }
}

} // namespace detail

// Calls visit(n) once for every n <= x with P+(n) <= y, including n = 1.
// Order is DFS over prime powers (deterministic, not ascending).
template <class Visit>
void for_each_smooth(double x, double y, const PrimeTable& table, Visit&& visit,
                     std::uint64_t cap = default_smooth_cap) {
    const std::uint64_t xi = detail::floor_to_u64(x);
    const auto primes = detail::smooth_primes(xi, y, table);
    std::uint64_t emitted = 0;
    auto guarded = [&](std::uint64_t n) {
        if (++emitted > cap)
            throw resource_limit("smooth enumeration exceeded cap of " + std::to_string(cap));
        visit(n);
    };
    guarded(1);
    detail::smooth_dfs(1, 0, xi, primes, guarded);
}

// Ascending list of y-smooth n <= x.
inline std::vector<std::uint64_t> enumerate_smooth(double x, double y, const PrimeTable& table,
                                                   std::uint64_t cap = default_smooth_cap) {
    std::vector<std::uint64_t> out;
    for_each_smooth(x, y, table, [&](std::uint64_t n) { out.push_back(n); }, cap);
    std::sort(out.begin(), out.end());
    return out;
}

// Psi(x, y).
inline std::uint64_t count_smooth(double x, double y, const PrimeTable& table,
                                  std::uint64_t cap = default_smooth_cap) {
    std::uint64_t c = 0;
    for_each_smooth(x, y, table, [&](std::uint64_t) { ++c; }, cap);
    return c;
}

inline double smooth_harmonic_sum(double x, double y, double beta, const PrimeTable& table,
                                  std::uint64_t cap = default_smooth_cap) {
    if (beta < 0.0)
        throw invalid_argument("smooth_harmonic_sum: beta must be >= 0");
    CompensatedSum s;
    for_each_smooth(
        x, y, table, [&](std::uint64_t n) { s.add(std::pow(static_cast<double>(n), -beta)); }, cap);
    return s.value();
}

struct SmoothStats {
    double x = 0, y = 0, u = 0;
    std::uint64_t count = 0;
    std::vector<std::pair<double, double>> harmonic_sums;  // (beta, sum)
};

inline SmoothStats smooth_stats(double x, double y, std::span<const double> betas,
                                const PrimeTable& table, std::uint64_t cap = default_smooth_cap) {
    SmoothStats st;
    st.x = x;
    st.y = y;
    st.u = (x > 1.0 && y > 1.0) ? std::log(x) / std::log(y) : 0.0;
    std::vector<CompensatedSum> sums(betas.size());
    for_each_smooth(
        x, y, table,
        [&](std::uint64_t n) {
            ++st.count;
            for (std::size_t i = 0; i < betas.size(); ++i)
                sums[i].add(std::pow(static_cast<double>(n), -betas[i]));
        },
        cap);
    for (std::size_t i = 0; i < betas.size(); ++i)
        st.harmonic_sums.emplace_back(betas[i], sums[i].value());
    return st;
}

// ---------------------------------------------------------------------------
// Prime sums and Euler products
// ---------------------------------------------------------------------------

struct MertensCheck {
    double sum;         // sum_{p<=x} 1/p
    double main_term;   // log log x + c1
    double bound;       // 5 / log x
    bool holds() const { return std::abs(sum - main_term) < bound; }
};

inline MertensCheck mertens_prime_sum(double x, const PrimeTable& table) {
    if (x < 2.0)
        throw invalid_argument("mertens_prime_sum: x must be >= 2");
    if (x >= static_cast<double>(table.limit()) + 1.0)
        throw table_too_small("mertens_prime_sum: x beyond table limit");
    CompensatedSum s;
    for (auto p : table.primes().first(table.pi(x)))
        s.add(1.0 / static_cast<double>(p));
    const double lx = std::log(x);
    return {s.value(), std::log(lx) + AnalyticConstants::mertens_c1, 5.0 / lx};
}

enum class FactorSign { minus, plus };
enum class ProductForm { linear, power };

// linear: prod_{j<=tau} (1 -/+ lambda/p_j)^{-1}
// power:  prod_{j<=tau} (1 -/+ p_j^{-lambda})^{-1}; with lambda = 2 sigma this is Pi_sigma(tau).
inline double euler_weighted_product(std::size_t tau, double lambda, FactorSign sign, ProductForm form,
                                     const PrimeTable& table) {
    if (form == ProductForm::linear && sign == FactorSign::minus && lambda >= 2.0)
        throw divergent_factor("euler_weighted_product: lambda >= p_1 = 2 makes the first factor diverge");
    if (form == ProductForm::power && !(lambda > 0.0))
        throw invalid_argument("euler_weighted_product: power form needs lambda = 2 sigma > 0");
    if (tau > table.size())
        throw table_too_small("euler_weighted_product: tau exceeds pi(limit)");
    // Accumulate in log space: tau may be in the thousands.
    CompensatedSum log_prod;
    const double s = sign == FactorSign::minus ? -1.0 : 1.0;
    for (auto p : table.primes().first(tau)) {
        const double pd = static_cast<double>(p);
        const double t = form == ProductForm::linear ? lambda / pd : std::pow(pd, -lambda);
        log_prod.add(-std::log1p(s * t));
    }
    return std::exp(log_prod.value());
}

// ---------------------------------------------------------------------------
// Coprime counts (Hall-type estimates)
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::uint64_t> primes_of_indices(std::span<const std::size_t> K, const PrimeTable& table) {
    std::vector<std::uint64_t> ps;
    ps.reserve(K.size());
    for (auto j : K)
        ps.push_back(table.prime(j));
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
    return ps;
}

// coprime[k] == true iff gcd(k, prod ps) == 1, for 0 <= k <= x.
inline std::vector<char> coprime_mask(std::uint64_t x, std::span<const std::uint64_t> ps) {
    std::vector<char> mask(x + 1, 1);
    mask[0] = 0;
    for (auto p : ps)
        for (std::uint64_t m = p; m <= x; m += p)
            mask[m] = 0;
    return mask;
}

inline double hall_product(double x, std::span<const std::uint64_t> ps) {
    double prod = 1.0;
    for (auto p : ps)
        if (static_cast<double>(p) <= x)
            prod *= 1.0 - 1.0 / static_cast<double>(p);
    return prod;
}

} // namespace detail

struct CoprimeCount {
    std::uint64_t count;  // phi_K(x)
    double hall_bound;    // x prod_{p|K, p<=x} (1 - 1/p)
    double ratio() const { return hall_bound > 0 ? static_cast<double>(count) / hall_bound : 0.0; }
};

inline CoprimeCount coprime_count(double x, std::span<const std::size_t> K, const PrimeTable& table) {
    const std::uint64_t xi = detail::floor_to_u64(x);
    const auto ps = detail::primes_of_indices(K, table);
    const auto mask = detail::coprime_mask(xi, ps);
    const auto count = static_cast<std::uint64_t>(std::count(mask.begin(), mask.end(), 1));
    return {count, x * detail::hall_product(x, ps)};
}

struct CoprimeHarmonic {
    double sum;        // sum_{n<=x, (n,L)=1} n^{-beta}
    double reference;  // x^{1-beta} prod_{p|L, p<=x} (1 - 1/p)
    double ratio() const { return sum / reference; }
};

inline CoprimeHarmonic coprime_harmonic_sum(double x, std::span<const std::size_t> K, double beta,
                                            const PrimeTable& table) {
    if (!(beta > 0.0))
        throw invalid_argument("coprime_harmonic_sum: beta must be > 0");
    const std::uint64_t xi = detail::floor_to_u64(x);
    const auto ps = detail::primes_of_indices(K, table);
    const auto mask = detail::coprime_mask(xi, ps);
    CompensatedSum s;
    for (std::uint64_t n = 1; n <= xi; ++n)
        if (mask[n])
            s.add(std::pow(static_cast<double>(n), -beta));
    return {s.value(), std::pow(x, 1.0 - beta) * detail::hall_product(x, ps)};
}

// ---------------------------------------------------------------------------
// Dickman rho
// ---------------------------------------------------------------------------

// rho = 1 on [0, 1]; u rho'(u) = -rho(u - 1) beyond. Stepped with h = 1e-4,
// midpoint rule on the delay integral, linear interpolation between nodes.
inline double dickman_rho(double u) {
    if (!(u >= 0.0))
        throw invalid_argument("dickman_rho: u must be >= 0");
    if (u <= 1.0)
        return 1.0;
    constexpr std::size_t per_unit = 10'000;
    constexpr double h = 1.0 / per_unit;
    const auto last = static_cast<std::size_t>(std::ceil(u * per_unit));
    std::vector<double> g(last + 1, 1.0);  // g[i] = rho(i h)
    for (std::size_t i = per_unit + 1; i <= last; ++i) {
        const double mid = (static_cast<double>(i) - 0.5) * h;
        const std::size_t a = i - 1 - per_unit;  // mid - 1 lies in [a h, (a+1) h]
        const double delayed = 0.5 * (g[a] + g[a + 1]);
        g[i] = g[i - 1] - h * delayed / mid;
    }
    const double pos = u * per_unit;
    const auto lo = std::min(static_cast<std::size_t>(std::floor(pos)), last - 1);
    const double frac = pos - static_cast<double>(lo);
    return g[lo] + frac * (g[lo + 1] - g[lo]);
}

struct SmoothAsymptotic {
    double lhs;       // sum_{n<=x, P+(n)<=y} 1/n
    double rhs;       // e^gamma log y
    double residual;  // |lhs - rhs|
    double u;         // log x / log y
    double residual_over_u() const { return residual / u; }
};

inline SmoothAsymptotic smooth_harmonic_asymptotic_check(double x, double y, const PrimeTable& table) {
    if (!(y >= 2.0 && x >= y))
        throw invalid_argument("smooth_harmonic_asymptotic_check: need x >= y >= 2");
    const double lhs = smooth_harmonic_sum(x, y, 1.0, table);
    const double rhs = std::exp(AnalyticConstants::euler_gamma) * std::log(y);
    return {lhs, rhs, std::abs(lhs - rhs), std::log(x) / std::log(y)};
}

} // namespace dirsup
