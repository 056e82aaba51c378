#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "dirsup/bounds.hpp"

using namespace dirsup;

namespace {

const PrimeTable& table() {
    static const PrimeTable t(1000000);
    return t;
}

void expect_components_multiply(const BoundEnvelope& e) {
    double prod = 1;
    for (const auto& [name, v] : e.components) {
        EXPECT_TRUE(std::isfinite(v)) << name;
        EXPECT_GE(v, 0.0) << name;
        prod *= v;
    }
    EXPECT_NEAR(e.value, prod, 1e-12 * std::abs(prod));
}

std::vector<double> log_grid(double lo, double hi, int count) {
    std::vector<double> out;
    for (int i = 0; i < count; ++i)
        out.push_back(std::round(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (count - 1))));
    return out;
}

} // namespace

TEST(Regime, Examples) {
    EXPECT_EQ(classify_regime(1e4, 1229).case_id, RegimeCase::large_tau);
    EXPECT_EQ(classify_regime(1e4, 5).case_id, RegimeCase::small_tau);
    const auto r = classify_regime(1e4, 1);
    EXPECT_EQ(classify_regime(1e4, r.b_high).case_id, RegimeCase::large_tau);
    EXPECT_EQ(classify_regime(1e4, r.b_low).case_id, RegimeCase::mid_tau);
    EXPECT_EQ(classify_regime(1e4, 0.5 * (r.b_low + r.b_high)).case_id, RegimeCase::mid_tau);
    EXPECT_THROW(classify_regime(15, 2), invalid_argument);
    EXPECT_THROW(classify_regime(100, 0), invalid_argument);
}

TEST(Regime, BoundariesOrdered) {
    for (double N = 16; N < 1e12; N *= 3) {
        const auto r = classify_regime(N, 1);
        EXPECT_LT(r.b_low, r.b_high) << N;
        const double L = std::log(N);
        EXPECT_NEAR(r.b_low * r.b_low * L * std::log(L), N, 1e-9 * N);
        EXPECT_NEAR(r.b_high * r.b_high * L / std::log(L), N, 1e-9 * N);
    }
}

TEST(TauFreeEnvelope, Examples) {
    const auto& t = table();
    const auto e = envelope_theorem1(std::numbers::e, 0.0, 1.0);
    EXPECT_NEAR(e.value, std::numbers::e, 1e-12);
    EXPECT_EQ(e.constant_symbol, "C_{sigma,d}");

    const auto one = envelope_theorem1(1000, 0.25, WeightSpec::one(), t, false);
    const auto one_extra = envelope_theorem1(1000, 0.25, WeightSpec::one(), t, true);
    EXPECT_NEAR(one.value, one_extra.value, 1e-12 * one.value);
    EXPECT_EQ(one_extra.components.count("D2_tilde(N)"), 0u);

    const auto div = envelope_theorem1(10000, 0.25, WeightSpec::divisor(), t, false);
    expect_components_multiply(div);
    EXPECT_NEAR(div.components.at("N^{1-sigma}"), 1000.0, 1e-9);
    EXPECT_NEAR(div.components.at("D2_tilde(N)"), characteristic_sums(WeightSpec::divisor(), 10000, t).D2_tilde, 1e-12);
    EXPECT_THROW(envelope_theorem1(10000, 0.25, WeightSpec::divisor(), t, true), condition_violated);
    EXPECT_THROW(envelope_theorem1(1, 0.25, WeightSpec::one(), t, false), invalid_argument);
    EXPECT_THROW(envelope_theorem1(10.0, 0.6, 1.0), invalid_argument);
}

TEST(TauEnvelope, ConstantWeightReduction) {
    const auto& t = table();
    const double N = 1e4, sigma = 0.25;
    const double L = std::log(N);
    const auto large = envelope_theorem2(10000, sigma, 1229, WeightSpec::one(), t);
    EXPECT_NEAR(large.value, std::pow(N, 0.25) * std::sqrt(1229.0 / L), 1e-9);
    const auto r = classify_regime(N, 1);
    const std::size_t mid_tau = static_cast<std::size_t>(std::ceil(r.b_low));
    const auto mid = envelope_theorem2(10000, sigma, mid_tau, WeightSpec::one(), t);
    EXPECT_NEAR(mid.value, std::pow(N, 0.5) * std::pow(std::log(L), 0.25) * std::pow(L, -0.75), 1e-9);
    const auto small = envelope_theorem2(10000, sigma, 10, WeightSpec::one(), t);
    EXPECT_NEAR(small.value, std::pow(N, 0.25) * std::sqrt(10 * std::log(std::log(10.0)) / std::log(10.0)), 1e-9);
    EXPECT_THROW(envelope_theorem2(10000, sigma, 2, WeightSpec::one(), t), invalid_argument);
    EXPECT_THROW(envelope_theorem2(10000, 0.5, 10, WeightSpec::one(), t), invalid_argument);
}

TEST(TauEnvelope, MidCaseImprovement) {
    for (double N = 1e3; N <= 1e12; N *= 10) {
        const double L = std::log(N);
        EXPECT_LT(std::pow(std::log(L), 0.25) * std::pow(L, -0.75), std::pow(L, -0.5)) << N;
    }
}

// The tau envelope over the tau-free one is (tau log N / N)^{1/2} in the
// large case, so it sits below up to the factor (pi(N) log N / N)^{1/2},
// which tends to 1 from above. The mid and small cases are strictly below.
TEST(TauEnvelope, DominanceOverTauFreeEnvelope) {
    const auto& t = table();
    for (double N : {1e3, 1e4, 1e5, 1e6}) {
        const auto Nu = static_cast<std::uint64_t>(N);
        const std::size_t piN = t.pi(N);
        for (double sigma : {0.1, 0.25, 0.4}) {
            const double e1 = envelope_theorem1(N, sigma, 1.0).value;
            for (std::size_t tau = 3; tau <= piN; tau += (tau < 200 ? 1 : 97)) {
                const auto reg = classify_regime(N, static_cast<double>(tau));
                const double e2 = envelope_theorem2(N, sigma, static_cast<double>(tau), 1.0).value;
                if (reg.case_id == RegimeCase::large_tau) {
                    ASSERT_NEAR(e2 / e1, std::sqrt(tau * std::log(N) / N), 1e-12) << Nu << " " << tau;
                    ASSERT_LE(e2 / e1, std::sqrt(piN * std::log(N) / N) * (1 + 1e-12));
                } else {
                    ASSERT_LT(e2, e1) << Nu << " " << tau << " " << sigma;
                }
            }
            const double at_top = envelope_theorem2(N, sigma, static_cast<double>(piN), 1.0).value;
            EXPECT_LT(at_top / e1, 1.1) << Nu;
        }
    }
}

TEST(TauEnvelope, RegimeContinuity) {
    for (double N : {1e3, 1e4, 1e5, 1e6, 1e8}) {
        const auto r = classify_regime(N, 1);
        for (double sigma : {0.1, 0.25, 0.4}) {
            const auto hi = envelope_theorem2(N, sigma, r.b_high, 1.0);
            const auto below_hi = envelope_theorem2(N, sigma, std::nextafter(r.b_high, 0.0), 1.0);
            EXPECT_NEAR(hi.value / below_hi.value, 1.0, 1e-9);
            if (r.b_low >= 3) {
                const auto lo = envelope_theorem2(N, sigma, r.b_low, 1.0);
                const auto below_lo = envelope_theorem2(N, sigma, std::nextafter(r.b_low, 0.0), 1.0);
                const double ratio = lo.value / below_lo.value;
                EXPECT_GT(ratio, 0.25) << N;
                EXPECT_LT(ratio, 4.0) << N;
            }
        }
    }
}

TEST(SmallTau, Examples) {
    const auto& t = table();
    const auto half = envelope_smalltau(16, 0.5, t);
    EXPECT_NEAR(half.lower.value, 4.0, 1e-12);
    EXPECT_NEAR(half.upper.value, 4.0 * std::sqrt(std::log(std::log(16.0))), 1e-12);
    EXPECT_THROW(envelope_smalltau(15, 0.5, t), invalid_argument);
    EXPECT_THROW(envelope_smalltau(2, 0.25, t), invalid_argument);
    EXPECT_THROW(envelope_smalltau(10, 0.0, t), invalid_argument);

    const auto q = envelope_smalltau(100, 0.25, t);
    expect_components_multiply(q.lower);
    expect_components_multiply(q.upper);
    // upper / lower = tau^{1/2 - sigma} (log tau)^{-sigma}
    EXPECT_NEAR(q.upper.value / q.lower.value, std::pow(100.0, 0.25) * std::pow(std::log(100.0), -0.25), 1e-12);
}

TEST(SmallTau, ContinuityTowardHalf) {
    const auto& t = table();
    const double tau = 100, sigma = 0.499;
    const auto e = envelope_smalltau(100, sigma, t);
    const double root_pi = e.lower.components.at("Pi_sigma(tau)^{1/2}");
    const double direct = root_pi * std::sqrt(tau) / std::sqrt(std::log(tau));
    EXPECT_NEAR(e.lower.value / direct, 1.0, 0.05);
}

TEST(SmallTau, LowerBelowUpperAwayFromHalf) {
    // The ratio tau^{1/2-sigma} (log tau)^{-sigma} is >= 1 only while
    // (1/2 - sigma) log tau >= sigma loglog tau; check that region.
    const auto& t = table();
    for (double sigma : {0.05, 0.1, 0.2, 0.25, 0.3, 0.4}) {
        for (double tau : log_grid(16, 1e4, 25)) {
            const double lt = std::log(tau);
            if ((0.5 - sigma) * lt < sigma * std::log(lt))
                continue;
            const auto e = envelope_smalltau(static_cast<std::size_t>(tau), sigma, t);
            EXPECT_LE(e.lower.value, e.upper.value * (1 + 1e-12)) << sigma << " " << tau;
        }
    }
    for (double tau : log_grid(16, 1e4, 25)) {
        const auto e = envelope_smalltau(static_cast<std::size_t>(tau), 0.5, t);
        EXPECT_LE(e.lower.value, e.upper.value);
    }
}

TEST(CoprimeEnvelope, Examples) {
    const auto& t = table();
    const std::vector<std::size_t> none, first_two{1, 2};
    EXPECT_EQ(envelope_theorem3(1000, 0.25, 2, first_two, t).value, 0.0);
    const double expect = std::pow(1000.0, 0.25) * std::sqrt(std::max(1.0, 0.5 + 1.0 / 3)) *
                          (1 / std::sqrt(2.0) + 1 / std::sqrt(3.0));
    EXPECT_NEAR(envelope_theorem3(1000, 0.25, 2, none, t).value, expect, 1e-12);

    const double limit = classify_regime(1000, 1).b_low;
    EXPECT_THROW(envelope_theorem3(1000, 0.25, static_cast<std::size_t>(limit) + 1, none, t), condition_violated);
    EXPECT_THROW(envelope_theorem3(1000, 0.25, 0, none, t), condition_violated);
    EXPECT_THROW(envelope_theorem3(1000, 0.5, 2, none, t), invalid_argument);
}

TEST(CoprimeEnvelope, GrowsInNuLikeSmallTauOrder) {
    const auto& t = table();
    const std::vector<std::size_t> none;
    double prev = 0;
    for (std::size_t nu = 3; nu <= 100; ++nu) {
        const auto e = envelope_theorem3(1000000, 0.25, nu, none, t);
        EXPECT_GT(e.value, prev);
        prev = e.value;
        // Same order as N^{1/2-sigma} (nu / log nu)^{1/2} up to loglog factors.
        const double ln = std::log(static_cast<double>(nu));
        const double ratio = e.value / (std::pow(1e6, 0.25) * std::sqrt(nu / ln));
        EXPECT_GT(ratio, 0.5 / std::log(ln + 2));
        EXPECT_LT(ratio, 4.0 * std::log(ln + 2));
    }
}

TEST(MomentRatio, Examples) {
    const auto& t = table();
    // d == 1: sum m^{-2 sigma} / M^{1-2 sigma} tends to 1/(1-2 sigma) and is 1 at sigma -> 0.
    const double r0 = lemma21_ratio(10000, 10000, 1e-9, WeightSpec::one(), t, AbelForm::abel0);
    EXPECT_NEAR(r0, 1.0, 1e-6);
    const double r = lemma21_ratio(10000, 10000, 0.25, WeightSpec::one(), t, AbelForm::abel0);
    EXPECT_NEAR(r, 2.0, 0.05);
    EXPECT_EQ(r, lemma21_ratio(10000, 10000, 0.25, WeightSpec::one(), t, AbelForm::abel2));

    const double d3 = lemma21_ratio(1000, 10000, 0.25, WeightSpec::divisor(), t, AbelForm::abel0);
    const double d4 = lemma21_ratio(10000, 10000, 0.25, WeightSpec::divisor(), t, AbelForm::abel0);
    EXPECT_GT(d3, 0.0);
    EXPECT_LT(std::max(d3, d4) / std::min(d3, d4), 1.5);

    const double a1 = lemma21_ratio(100, 10000, 0.25, WeightSpec::one(), t, AbelForm::abel1);
    EXPECT_TRUE(std::isfinite(a1));
    EXPECT_GT(a1, 0.0);
    EXPECT_THROW(lemma21_ratio(6000, 10000, 0.25, WeightSpec::one(), t, AbelForm::abel1), invalid_argument);
    EXPECT_THROW(lemma21_ratio(100, 50, 0.25, WeightSpec::one(), t, AbelForm::abel0), invalid_argument);
    EXPECT_THROW(lemma21_ratio(10, 50, 0.5, WeightSpec::one(), t, AbelForm::abel0), invalid_argument);
    EXPECT_EQ(parse_abel_form("abel1"), AbelForm::abel1);
    EXPECT_THROW(parse_abel_form("abel3"), invalid_argument);
}

TEST(NuOptimal, ExamplesAndBalance) {
    // 100 / (log 1e4 * loglog 1e4)^{1/2} = 100 / (9.2103 * 2.2203)^{1/2} = 22.11
    EXPECT_EQ(nu_optimal(1e4), 22u);
    EXPECT_EQ(nu_optimal(16), 2u);
    EXPECT_THROW(nu_optimal(10), invalid_argument);
    std::uint64_t prev = 0;
    for (double N : log_grid(1e3, 1e8, 40)) {
        const auto nu = nu_optimal(N);
        EXPECT_GE(nu, prev);
        prev = nu;
        const auto [a, b] = nu_balance_terms(N, static_cast<double>(nu));
        EXPECT_LT(std::max(a, b) / std::min(a, b), 3.0) << N;
    }
    EXPECT_THROW(nu_balance_terms(1e4, 2), invalid_argument);
}

TEST(Abel, Examples) {
    const auto& t = table();
    std::vector<double> ones(1001, 1.0);
    const auto c1 = abel_transform_check(ones, [](double) { return 1.0; }, [](double) { return 0.0; }, 100.5);
    EXPECT_EQ(c1.direct, 100.0);
    EXPECT_NEAR(c1.transformed, 100.0, 1e-12);

    auto inv = [](double x) { return 1.0 / x; };
    auto dinv = [](double x) { return -1.0 / (x * x); };
    const auto h = abel_transform_check(ones, inv, dinv, 100);
    double H100 = 0;
    for (int n = 1; n <= 100; ++n)
        H100 += 1.0 / n;
    EXPECT_NEAR(h.direct, H100, 1e-12);
    EXPECT_NEAR(h.transformed, H100, 1e-6);

    std::vector<double> primes(1001, 0.0);
    for (std::uint64_t n = 2; n <= 1000; ++n)
        primes[n] = t.is_prime(n) ? 1.0 : 0.0;
    const auto m = abel_transform_check(primes, inv, dinv, 1000);
    EXPECT_NEAR(m.direct, mertens_prime_sum(1000, t).sum, 1e-12);
    EXPECT_NEAR(m.transformed, mertens_prime_sum(1000, t).sum, 1e-6);
    EXPECT_LT(m.difference(), abel_quadrature_tol * 10);

    EXPECT_THROW(abel_transform_check(primes, inv, dinv, 2000), invalid_argument);
    EXPECT_THROW(abel_transform_check(primes, inv, dinv, 0.5), invalid_argument);
}

TEST(Envelopes, ComponentsPositiveAndJson) {
    const auto& t = table();
    const std::vector<std::size_t> none;
    std::vector<BoundEnvelope> all{
        envelope_theorem1(5000, 0.3, WeightSpec::divisor(), t, false),
        envelope_theorem2(5000, 0.3, 600, WeightSpec::divisor(), t),
        envelope_theorem2(5000, 0.3, 20, WeightSpec::divisor(), t),
        envelope_theorem2(5000, 0.3, 5, WeightSpec::divisor(), t),
        envelope_smalltau(40, 0.3, t).lower,
        envelope_smalltau(40, 0.3, t).upper,
        envelope_theorem3(5000, 0.3, 10, none, t),
    };
    for (const auto& e : all) {
        expect_components_multiply(e);
        for (const auto& [name, v] : e.components)
            EXPECT_GT(v, 0.0) << name;
        const auto j = to_json(e);
        EXPECT_EQ(j.at("value").get<double>(), e.value);
        EXPECT_EQ(j.at("constant_symbol").get<std::string>(), e.constant_symbol);
    }
    EXPECT_EQ(to_json(classify_regime(5000, 600)).at("case"), "large_tau");
}
