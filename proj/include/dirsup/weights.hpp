#pragma once

// Weight families d(n), their structural conditions and characteristic sums
//   D1(M) = sum_{m<=M} d(m),    D1~(M)   = max_{m<=M} D1(m)/m,
//   D2(M) = sum_{m<=M} d(m)^2,  D2~(M)^2 = max_{m<=M} D2(m)/m.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dirsup/arith.hpp"
#include "dirsup/errors.hpp"

namespace dirsup {

struct WeightSpec;

namespace weight {

struct One {};
struct Divisor {};
struct LambdaOmega { double lambda; };          // lambda^omega(n)
struct LambdaBigOmega { double lambda; };       // lambda^Omega(n)
struct CoprimeIndicator { std::vector<std::size_t> K; };  // 1{(n, prod_{j in K} p_j) = 1}
struct TruncatedDivisor { std::uint64_t cutoff; };        // #{k <= cutoff : k | n}
struct ExpLogAlpha { double alpha; };           // exp((log n)^alpha)
struct Product { std::vector<WeightSpec> factors; };
struct CustomTable { std::map<std::uint64_t, double> values; };

} // namespace weight

struct WeightSpec {
    using Family = std::variant<weight::One, weight::Divisor, weight::LambdaOmega, weight::LambdaBigOmega,
                                weight::CoprimeIndicator, weight::TruncatedDivisor, weight::ExpLogAlpha,
                                weight::Product, weight::CustomTable>;
    Family family;

    static WeightSpec one() { return {weight::One{}}; }
    static WeightSpec divisor() { return {weight::Divisor{}}; }
    static WeightSpec lambda_omega(double lambda) {
        if (!(lambda > 0))
            throw invalid_argument("lambda_omega: lambda must be > 0");
        return {weight::LambdaOmega{lambda}};
    }
    static WeightSpec lambda_big_omega(double lambda) {
        if (!(lambda > 0))
            throw invalid_argument("lambda_big_omega: lambda must be > 0");
        return {weight::LambdaBigOmega{lambda}};
    }
    static WeightSpec coprime_indicator(std::vector<std::size_t> K) {
        for (auto j : K)
            if (j == 0)
                throw invalid_argument("coprime_indicator: prime indices are 1-based");
        std::sort(K.begin(), K.end());
        K.erase(std::unique(K.begin(), K.end()), K.end());
        return {weight::CoprimeIndicator{std::move(K)}};
    }
    static WeightSpec truncated_divisor(std::uint64_t cutoff) {
        if (cutoff == 0)
            throw invalid_argument("truncated_divisor: cutoff must be >= 1");
        return {weight::TruncatedDivisor{cutoff}};
    }
    static WeightSpec exp_log_alpha(double alpha) {
        if (!(alpha > 0 && alpha < 1))
            throw invalid_argument("exp_log_alpha: alpha must lie in (0, 1)");
        return {weight::ExpLogAlpha{alpha}};
    }
    static WeightSpec product(std::vector<WeightSpec> factors) {
        if (factors.empty())
            throw invalid_argument("product: needs at least one factor");
        return {weight::Product{std::move(factors)}};
    }
    static WeightSpec custom(std::map<std::uint64_t, double> values) {
        for (const auto& [n, v] : values)
            if (n == 0 || !(v >= 0) || !std::isfinite(v))
                throw invalid_argument("custom: keys must be >= 1 and values finite, non-negative");
        return {weight::CustomTable{std::move(values)}};
    }

    template <class F>
    bool is() const { return std::holds_alternative<F>(family); }
};

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace detail {

// Number of divisors of n (given its factorization) that are <= cutoff.
inline std::uint64_t count_divisors_upto(const Factorization& f, std::uint64_t cutoff) {
    std::uint64_t count = 0;
    auto rec = [&](auto&& self, std::size_t i, std::uint64_t d) -> void {
        if (i == f.factors.size()) {
            ++count;
            return;
        }
        const auto p = f.factors[i].prime;
        for (unsigned e = 0; e <= f.factors[i].exponent; ++e) {
            self(self, i + 1, d);
            if (e == f.factors[i].exponent || d > cutoff / p)
                break;
            d *= p;
        }
    };
    rec(rec, 0, 1);
    return count;
}

} // namespace detail

inline double eval_weight_factored(const WeightSpec& spec, const Factorization& f) {
    return std::visit(
        [&](const auto& w) -> double {
            using W = std::decay_t<decltype(w)>;
            if constexpr (std::is_same_v<W, weight::One>) {
                return 1.0;
            } else if constexpr (std::is_same_v<W, weight::Divisor>) {
                double d = 1.0;
                for (const auto& pp : f.factors)
                    d *= pp.exponent + 1.0;
                return d;
            } else if constexpr (std::is_same_v<W, weight::LambdaOmega>) {
                return std::pow(w.lambda, static_cast<double>(f.omega()));
            } else if constexpr (std::is_same_v<W, weight::LambdaBigOmega>) {
                return std::pow(w.lambda, static_cast<double>(f.big_omega()));
            } else if constexpr (std::is_same_v<W, weight::CoprimeIndicator>) {
                for (const auto& pp : f.factors)
                    if (std::binary_search(w.K.begin(), w.K.end(), pp.index))
                        return 0.0;
                return 1.0;
            } else if constexpr (std::is_same_v<W, weight::TruncatedDivisor>) {
                return static_cast<double>(detail::count_divisors_upto(f, w.cutoff));
            } else if constexpr (std::is_same_v<W, weight::ExpLogAlpha>) {
                return f.n == 1 ? 1.0 : std::exp(std::pow(std::log(static_cast<double>(f.n)), w.alpha));
            } else if constexpr (std::is_same_v<W, weight::Product>) {
                double d = 1.0;
                for (const auto& g : w.factors)
                    d *= eval_weight_factored(g, f);
                return d;
            } else {
                auto it = w.values.find(f.n);
                if (it == w.values.end())
                    throw undefined_weight("custom weight undefined at n = " + std::to_string(f.n));
                return it->second;
            }
        },
        spec.family);
}

inline double eval_weight(const WeightSpec& spec, std::uint64_t n, const PrimeTable& table) {
    if (n == 0)
        throw invalid_argument("eval_weight: n must be >= 1");
    if (spec.is<weight::One>())
        return 1.0;
    if (const auto* c = std::get_if<weight::CustomTable>(&spec.family)) {
        auto it = c->values.find(n);
        if (it == c->values.end())
            throw undefined_weight("custom weight undefined at n = " + std::to_string(n));
        return it->second;
    }
    return eval_weight_factored(spec, factorize(n, table));
}

// d(0..M) with d(0) := 0; one factorization per n.
inline std::vector<double> weight_values(const WeightSpec& spec, std::uint64_t M, const PrimeTable& table) {
    std::vector<double> d(M + 1, 0.0);
    for (std::uint64_t n = 1; n <= M; ++n)
        d[n] = eval_weight(spec, n, table);
    return d;
}

// Built-in families satisfy d(1) = 1; custom tables are flagged when they do not.
inline bool unit_at_one(const WeightSpec& spec, const PrimeTable& table) {
    try {
        return eval_weight(spec, 1, table) == 1.0;
    } catch (const undefined_weight&) {
        return false;
    }
}

// ---------------------------------------------------------------------------
// Canonical text form
//
//   one | divisor | lambda_omega(L) | lambda_big_omega(L) | coprime_indicator(j,...)
//   | truncated_divisor(c) | exp_log_alpha(a) | product(spec;spec;...) | custom(n:v,...)
//
// coprime_indicator takes 1-based prime indices. Whitespace is ignored.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw invalid_argument("weight spec: bad number '" + std::string(s) + "'");
    return v;
}

inline std::uint64_t parse_uint(std::string_view s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw invalid_argument("weight spec: bad integer '" + std::string(s) + "'");
    return v;
}

// Split on sep at parenthesis depth zero.
inline std::vector<std::string_view> split_top(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '(')
            ++depth;
        else if (s[i] == ')')
            --depth;
        else if (s[i] == sep && depth == 0) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    out.push_back(s.substr(start));
    if (out.size() == 1 && out[0].empty())
        out.clear();
    return out;
}

inline WeightSpec parse_weight_compact(std::string_view s) {
    const auto open = s.find('(');
    const std::string_view name = s.substr(0, open);
    std::string_view args;
    if (open != std::string_view::npos) {
        if (s.back() != ')')
            throw invalid_argument("weight spec: missing ')' in '" + std::string(s) + "'");
        args = s.substr(open + 1, s.size() - open - 2);
    }
    auto need_one_arg = [&]() {
        auto parts = split_top(args, ',');
        if (parts.size() != 1)
            throw invalid_argument("weight spec: '" + std::string(name) + "' takes one argument");
        return parts[0];
    };
    if (name == "one" && open == std::string_view::npos)
        return WeightSpec::one();
    if (name == "divisor" && open == std::string_view::npos)
        return WeightSpec::divisor();
    if (name == "lambda_omega")
        return WeightSpec::lambda_omega(parse_double(need_one_arg()));
    if (name == "lambda_big_omega")
        return WeightSpec::lambda_big_omega(parse_double(need_one_arg()));
    if (name == "truncated_divisor")
        return WeightSpec::truncated_divisor(parse_uint(need_one_arg()));
    if (name == "exp_log_alpha")
        return WeightSpec::exp_log_alpha(parse_double(need_one_arg()));
    if (name == "coprime_indicator" && open != std::string_view::npos) {
        std::vector<std::size_t> K;
        for (auto part : split_top(args, ','))
            K.push_back(parse_uint(part));
        return WeightSpec::coprime_indicator(std::move(K));
    }
    if (name == "product") {
        std::vector<WeightSpec> fs;
        for (auto part : split_top(args, ';'))
            fs.push_back(parse_weight_compact(part));
        return WeightSpec::product(std::move(fs));
    }
    if (name == "custom" && open != std::string_view::npos) {
        std::map<std::uint64_t, double> values;
        for (auto part : split_top(args, ',')) {
            const auto colon = part.find(':');
            if (colon == std::string_view::npos)
                throw invalid_argument("weight spec: custom entries are n:value");
            values[parse_uint(part.substr(0, colon))] = parse_double(part.substr(colon + 1));
        }
        return WeightSpec::custom(std::move(values));
    }
    throw invalid_argument("weight spec: unknown family '" + std::string(s) + "'");
}

} // namespace detail

inline WeightSpec parse_weight(std::string_view text) {
    std::string compact;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c)))
            compact.push_back(c);
    if (compact.empty())
        throw invalid_argument("weight spec: empty");
    return detail::parse_weight_compact(compact);
}

inline std::string format_weight(const WeightSpec& spec) {
    return std::visit(
        [](const auto& w) -> std::string {
            using W = std::decay_t<decltype(w)>;
            using detail::format_double;
            if constexpr (std::is_same_v<W, weight::One>) {
                return "one";
            } else if constexpr (std::is_same_v<W, weight::Divisor>) {
                return "divisor";
            } else if constexpr (std::is_same_v<W, weight::LambdaOmega>) {
                return "lambda_omega(" + format_double(w.lambda) + ")";
            } else if constexpr (std::is_same_v<W, weight::LambdaBigOmega>) {
                return "lambda_big_omega(" + format_double(w.lambda) + ")";
            } else if constexpr (std::is_same_v<W, weight::CoprimeIndicator>) {
                std::string s = "coprime_indicator(";
                for (std::size_t i = 0; i < w.K.size(); ++i)
                    s += (i ? "," : "") + std::to_string(w.K[i]);
                return s + ")";
            } else if constexpr (std::is_same_v<W, weight::TruncatedDivisor>) {
                return "truncated_divisor(" + std::to_string(w.cutoff) + ")";
            } else if constexpr (std::is_same_v<W, weight::ExpLogAlpha>) {
                return "exp_log_alpha(" + format_double(w.alpha) + ")";
            } else if constexpr (std::is_same_v<W, weight::Product>) {
                std::string s = "product(";
                for (std::size_t i = 0; i < w.factors.size(); ++i)
                    s += (i ? ";" : "") + format_weight(w.factors[i]);
                return s + ")";
            } else {
                std::string s = "custom(";
                bool first = true;
                for (const auto& [n, v] : w.values) {
                    s += (first ? "" : ",") + std::to_string(n) + ":" + format_double(v);
                    first = false;
                }
                return s + ")";
            }
        },
        spec.family);
}

// ---------------------------------------------------------------------------
// Characteristic sums
// ---------------------------------------------------------------------------

struct CharacteristicSums {
    std::uint64_t M = 0;
    double D1 = 0, D2 = 0, D1_tilde = 0, D2_tilde = 0;
};

// Running D1~(m), D2~(m) for m = 1..M (index 0 unused).
struct CharacteristicProfile {
    std::vector<double> D1_tilde, D2_tilde;
};

inline CharacteristicProfile characteristic_profile(std::span<const double> d) {
    CharacteristicProfile prof;
    const std::size_t M = d.size() - 1;
    prof.D1_tilde.assign(M + 1, 0.0);
    prof.D2_tilde.assign(M + 1, 0.0);
    CompensatedSum s1, s2;
    double best1 = 0, best2 = 0;
    for (std::size_t m = 1; m <= M; ++m) {
        s1.add(d[m]);
        s2.add(d[m] * d[m]);
        best1 = std::max(best1, s1.value() / static_cast<double>(m));
        best2 = std::max(best2, s2.value() / static_cast<double>(m));
        prof.D1_tilde[m] = best1;
        prof.D2_tilde[m] = std::sqrt(best2);
    }
    return prof;
}

inline CharacteristicSums characteristic_sums_from_values(std::span<const double> d) {
    if (d.size() < 2)
        throw invalid_argument("characteristic_sums: M must be >= 1");
    CharacteristicSums cs;
    cs.M = d.size() - 1;
    CompensatedSum s1, s2;
    double best1 = 0, best2 = 0;
    for (std::size_t m = 1; m < d.size(); ++m) {
        s1.add(d[m]);
        s2.add(d[m] * d[m]);
        best1 = std::max(best1, s1.value() / static_cast<double>(m));
        best2 = std::max(best2, s2.value() / static_cast<double>(m));
    }
    cs.D1 = s1.value();
    cs.D2 = s2.value();
    cs.D1_tilde = best1;
    cs.D2_tilde = std::sqrt(best2);
    return cs;
}

inline CharacteristicSums characteristic_sums(const WeightSpec& spec, std::uint64_t M, const PrimeTable& table) {
    if (M < 1)
        throw invalid_argument("characteristic_sums: M must be >= 1");
    if (spec.is<weight::One>()) {
        const double m = static_cast<double>(M);
        return {M, m, m, 1.0, 1.0};
    }
    const auto d = weight_values(spec, M, table);
    return characteristic_sums_from_values(d);
}

// M_d = max_{p <= limit} d(p).
inline double sup_prime_value(const WeightSpec& spec, std::uint64_t limit, const PrimeTable& table) {
    if (limit < 2)
        throw invalid_argument("sup_prime_value: limit must be >= 2");
    double best = 0.0;
    for (auto p : table.primes().first(table.pi(static_cast<double>(limit))))
        best = std::max(best, eval_weight(spec, p, table));
    return best;
}

struct Hr3Ratios {
    double r1;  // D1~(N) / (log N)^{M_d}
    double r2;  // D2~(N) / (log N)^{M_d^2}
};

// Boundedness of these ratios across N is what (basic_n) predicts.
inline Hr3Ratios hr3_ratio_check(const WeightSpec& spec, std::uint64_t N, const PrimeTable& table) {
    if (N < 3)
        throw invalid_argument("hr3_ratio_check: N must be >= 3");
    const auto cs = characteristic_sums(spec, N, table);
    const double Md = sup_prime_value(spec, N, table);
    const double lN = std::log(static_cast<double>(N));
    return {cs.D1_tilde / std::pow(lN, Md), cs.D2_tilde / std::pow(lN, Md * Md)};
}

// ---------------------------------------------------------------------------
// Structural conditions
// ---------------------------------------------------------------------------

enum class ConditionId { submult, pest, basic_d, basic_n, hr0, extra_b };

inline std::string_view condition_name(ConditionId id) {
    switch (id) {
    case ConditionId::submult: return "submult";
    case ConditionId::pest: return "pest";
    case ConditionId::basic_d: return "basic_d";
    case ConditionId::basic_n: return "basic_n";
    case ConditionId::hr0: return "hr0";
    case ConditionId::extra_b: return "extra_b";
    }
    return "?";
}

inline ConditionId parse_condition(std::string_view name) {
    for (auto id : {ConditionId::submult, ConditionId::pest, ConditionId::basic_d, ConditionId::basic_n,
                    ConditionId::hr0, ConditionId::extra_b})
        if (condition_name(id) == name)
            return id;
    throw invalid_argument("unknown condition id '" + std::string(name) + "'");
}

using ConditionParams = std::map<std::string, double>;

struct ConditionReport {
    ConditionId condition_id{};
    std::uint64_t checked_range = 0;
    bool holds = true;
    // Smallest violating tuples in lexicographic order, at most max_witnesses.
    std::vector<std::vector<std::uint64_t>> witnesses;
    std::uint64_t witness_count = 0;
    std::map<std::string, double> fitted_constants;
};

namespace detail {

inline constexpr std::size_t max_witnesses = 32;
inline constexpr double rel_tol = 1e-12;

inline bool exceeds(double lhs, double rhs) { return lhs > rhs + rel_tol * std::max(1.0, std::abs(rhs)); }

class WitnessSink {
public:
    explicit WitnessSink(ConditionReport& r) : r_(r) {}
    void add(std::vector<std::uint64_t> w) {
        ++r_.witness_count;
        if (r_.witnesses.size() < max_witnesses)
            r_.witnesses.push_back(std::move(w));
    }

private:
    ConditionReport& r_;
};

inline std::optional<double> param(const ConditionParams& p, const std::string& key) {
    auto it = p.find(key);
    if (it == p.end())
        return std::nullopt;
    return it->second;
}

// Geometric tail growth of d along prime powers: max over primes p with at
// least min_chain powers p^J <= limit of (d(p^J)/d(p))^{1/(J-1)}, floored at 1.
// Returns the maximizing (p, J) too. Infinite when d(p) = 0 < d(p^J).
struct TailGrowth {
    double rate = 1.0;
    std::uint64_t p = 0;
    unsigned J = 0;
};

inline TailGrowth tail_growth(std::span<const double> d, const PrimeTable& table, unsigned min_chain = 4) {
    TailGrowth best;
    const std::uint64_t limit = d.size() - 1;
    for (auto p : table.primes()) {
        if (p > limit)
            break;
        unsigned J = 1;
        std::uint64_t pj = p;
        while (pj <= limit / p) {
            pj *= p;
            ++J;
        }
        if (J < min_chain)
            break;
        double r;
        if (d[p] > 0)
            r = std::pow(d[pj] / d[p], 1.0 / (J - 1));
        else
            r = d[pj] > 0 ? std::numeric_limits<double>::infinity() : 0.0;
        if (r > best.rate) {
            best = {r, p, J};
        }
    }
    return best;
}

inline void check_submult(std::span<const double> d, ConditionReport& r) {
    WitnessSink sink(r);
    const std::uint64_t limit = d.size() - 1;
    double worst = 0.0;
    for (std::uint64_t n = 1; n * (n + 1) <= limit; ++n) {
        for (std::uint64_t m = n + 1; n * m <= limit; ++m) {
            if (std::gcd(n, m) != 1)
                continue;
            const double lhs = d[n * m], rhs = d[n] * d[m];
            if (rhs > 0)
                worst = std::max(worst, lhs / rhs);
            if (exceeds(lhs, rhs))
                sink.add({n, m});
        }
    }
    r.fitted_constants["max_ratio"] = worst;
}

inline void check_pest(std::span<const double> d, const PrimeTable& table, const ConditionParams& params,
                       ConditionReport& r) {
    WitnessSink sink(r);
    const std::uint64_t limit = d.size() - 1;
    const auto C_given = param(params, "C");
    // Part 1: p | n  =>  d(n) <= C d(n/p).
    double C = 0.0;
    for (std::uint64_t n = 2; n <= limit; ++n) {
        std::uint64_t rem = n;
        while (rem > 1) {
            const std::uint64_t p = table.smallest_factor(rem);
            while (rem % p == 0)
                rem /= p;
            const double num = d[n], den = d[n / p];
            if (den > 0)
                C = std::max(C, num / den);
            else if (num > 0)
                C = std::numeric_limits<double>::infinity();
            if ((den == 0 && num > 0) || (C_given && exceeds(num, *C_given * den)))
                sink.add({n, p});
        }
    }
    // Part 2: d(p^j) <= C1 lambda^j with lambda < sqrt 2.
    const auto growth = tail_growth(d, table);
    const double lambda = param(params, "lambda").value_or(growth.rate);
    if (lambda >= std::sqrt(2.0)) {
        if (param(params, "lambda"))
            throw invalid_argument("pest: supplied lambda must be < sqrt 2");
        sink.add({growth.p, growth.J});
    }
    const auto C1_given = param(params, "C1");
    double C1 = 0.0;
    for (auto p : table.primes()) {
        if (p > limit)
            break;
        std::uint64_t pj = p;
        for (unsigned j = 1;; ++j) {
            const double bound = std::pow(lambda, static_cast<double>(j));
            C1 = std::max(C1, d[pj] / bound);
            if (C1_given && exceeds(d[pj], *C1_given * bound))
                sink.add({p, j});
            if (pj > limit / p)
                break;
            pj *= p;
        }
    }
    r.fitted_constants["C"] = C;
    r.fitted_constants["lambda"] = lambda;
    r.fitted_constants["C1"] = C1;
}

inline void check_basic_d(std::span<const double> d, const PrimeTable& table, const ConditionParams& params,
                          ConditionReport& r) {
    WitnessSink sink(r);
    const std::uint64_t limit = d.size() - 1;
    const double C = param(params, "C").value_or(2.0);
    const double H = param(params, "H").value_or(1.0);
    double C_fit = 0.0;
    std::vector<double> g;  // g[j] = max_{k,p} d(k p^j) / d(k)
    for (std::uint64_t k = 1; k <= limit / 2; ++k) {
        for (auto p : table.primes()) {
            if (p > limit / k)
                break;
            std::uint64_t n = k * p;
            for (unsigned j = 1;; ++j) {
                const double jH = std::pow(static_cast<double>(j), H);
                if (d[k] > 0) {
                    const double ratio = d[n] / d[k];
                    C_fit = std::max(C_fit, ratio / jH);
                    if (g.size() <= j)
                        g.resize(j + 1, 0.0);
                    g[j] = std::max(g[j], ratio);
                }
                if (exceeds(d[n], C * d[k] * jH))
                    sink.add({k, p, j});
                if (n > limit / p)
                    break;
                n *= p;
            }
        }
    }
    double H_fit = 0.0;
    if (g.size() > 1 && g[1] > 0)
        for (std::size_t j = 2; j < g.size(); ++j)
            if (g[j] > g[1])
                H_fit = std::max(H_fit, std::log(g[j] / g[1]) / std::log(static_cast<double>(j)));
    r.fitted_constants["C"] = C;
    r.fitted_constants["H"] = H;
    r.fitted_constants["C_fit"] = C_fit;
    r.fitted_constants["H_fit"] = H_fit;
}

inline void check_basic_n(std::span<const double> d, const PrimeTable& table, const ConditionParams& params,
                          ConditionReport& r) {
    WitnessSink sink(r);
    const std::uint64_t limit = d.size() - 1;
    const auto lambda_given = param(params, "lambda");
    double lambda = 0.0;
    for (auto p : table.primes()) {
        if (p > limit)
            break;
        std::uint64_t prev = 1, pa = p;
        for (unsigned a = 1;; ++a) {
            const double num = d[pa], den = d[prev];
            if (den > 0)
                lambda = std::max(lambda, num / den);
            else if (num > 0)
                lambda = std::numeric_limits<double>::infinity();
            if ((den == 0 && num > 0) || (lambda_given && exceeds(num, *lambda_given * den)))
                sink.add({p, a});
            if (pa > limit / p)
                break;
            prev = pa;
            pa *= p;
        }
    }
    r.fitted_constants["lambda"] = lambda;
}

inline void check_hr0(std::span<const double> d, const PrimeTable& table, const ConditionParams& params,
                      ConditionReport& r) {
    WitnessSink sink(r);
    const std::uint64_t limit = d.size() - 1;
    const auto growth = tail_growth(d, table);
    const double lambda2 = param(params, "lambda2").value_or(growth.rate);
    if (lambda2 >= 2.0) {
        if (param(params, "lambda2"))
            throw invalid_argument("hr0: supplied lambda2 must be < 2");
        sink.add({growth.p, growth.J});
    }
    const auto lambda1_given = param(params, "lambda1");
    double lambda1 = 0.0;
    for (auto p : table.primes()) {
        if (p > limit)
            break;
        std::uint64_t pm = p;
        for (unsigned m = 1;; ++m) {
            const double bound = std::pow(lambda2, static_cast<double>(m));
            lambda1 = std::max(lambda1, d[pm] / bound);
            if (lambda1_given && exceeds(d[pm], *lambda1_given * bound))
                sink.add({p, m});
            if (pm > limit / p)
                break;
            pm *= p;
        }
    }
    r.fitted_constants["lambda1"] = lambda1;
    r.fitted_constants["lambda2"] = lambda2;
}

inline void check_extra_b(std::span<const double> d, const ConditionParams& params, ConditionReport& r) {
    WitnessSink sink(r);
    const auto prof = characteristic_profile(d);
    const double C = param(params, "C").value_or(1.0);
    const auto b_given = param(params, "b");
    double b_fit = 0.0;
    for (std::size_t M = 2; M < d.size(); ++M) {
        const double Dt = prof.D2_tilde[M];
        if (Dt > C)
            b_fit = std::max(b_fit, std::log(Dt / C) / std::log(static_cast<double>(M)));
        if (b_given && exceeds(Dt, C * std::pow(static_cast<double>(M), *b_given)))
            sink.add({M});
    }
    const double threshold = 1.0 / (std::sqrt(5.0) + 1.0);
    if (b_fit >= threshold && !b_given)
        sink.add({d.size() - 1});
    r.fitted_constants["C"] = C;
    r.fitted_constants["b"] = b_given.value_or(b_fit);
    r.fitted_constants["b_fit"] = b_fit;
    r.fitted_constants["b_threshold"] = threshold;
}

} // namespace detail

// Exhaustive check of one structural condition over every applicable tuple
// with all components <= limit. Constants present in params are verified;
// absent ones are fitted as exact maxima over the range.
//
//   submult  d(nm) <= d(n) d(m), (n, m) = 1                      fits max_ratio
//   pest     d(n) <= C d(n/p) and d(p^j) <= C1 lambda^j,
//            lambda < sqrt 2                                      params C, C1, lambda
//   basic_d  d(k p^j) <= C d(k) j^H                               params C (2), H (1)
//   basic_n  d(p^a) / d(p^{a-1}) <= lambda                        param lambda
//   hr0      d(p^m) <= lambda1 lambda2^m, lambda2 < 2             params lambda1, lambda2
//   extra_b  D2~(M) <= C M^b, b < 1/(sqrt 5 + 1)                  params C (1), b
//
// A fitted lambda (pest) or lambda2 (hr0) is the tail growth rate
// max_p (d(p^J)/d(p))^{1/(J-1)} over primes with J >= 4 powers in range.
inline ConditionReport check_condition(const WeightSpec& spec, ConditionId id, std::uint64_t limit,
                                       const ConditionParams& params, const PrimeTable& table) {
    if (limit < 2)
        throw invalid_argument("check_condition: limit must be >= 2");
    if (limit > table.limit())
        throw table_too_small("check_condition: limit beyond table");
    const auto d = weight_values(spec, limit, table);
    ConditionReport r;
    r.condition_id = id;
    r.checked_range = limit;
    switch (id) {
    case ConditionId::submult: detail::check_submult(d, r); break;
    case ConditionId::pest: detail::check_pest(d, table, params, r); break;
    case ConditionId::basic_d: detail::check_basic_d(d, table, params, r); break;
    case ConditionId::basic_n: detail::check_basic_n(d, table, params, r); break;
    case ConditionId::hr0: detail::check_hr0(d, table, params, r); break;
    case ConditionId::extra_b: detail::check_extra_b(d, params, r); break;
    }
    r.holds = r.witness_count == 0;
    return r;
}

} // namespace dirsup
