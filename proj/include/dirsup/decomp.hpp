#pragma once

// Largest-prime-factor cell decomposition of {2..N} and the index sets built
// on it: E_j, H_d, tau_d, F_nu / F^nu, the lower-bound blocks L_j, the sign
// patterns Z and the prime-index set of K_tau.
//
// Throughout, "tau/2" means floor(tau/2): the upper indices are
// floor(tau/2) < j <= tau and L_j uses the smoothness cutoff p_{floor(tau/2)}.

#include <cstdint>
#include <iterator>
#include <string>
#include <vector>

#include "dirsup/arith.hpp"
#include "dirsup/errors.hpp"
#include "dirsup/weights.hpp"

namespace dirsup {

struct CellDecomposition {
    std::uint64_t N = 0;
    std::size_t tau_max = 0;                  // pi(N)
    std::vector<std::vector<std::uint64_t>> cells;  // cells[j-1] = E_j, ascending
    std::vector<std::size_t> H_d;             // ascending
    std::size_t tau_d = 0;                    // max H_d, 0 when H_d is empty

    const std::vector<std::uint64_t>& cell(std::size_t j) const {
        if (j == 0 || j > cells.size())
            throw invalid_argument("cell index " + std::to_string(j) + " out of range");
        return cells[j - 1];
    }
};

// P+(n) for every 0 <= n <= N (P+(0) = 0, P+(1) = 1).
inline std::vector<std::uint64_t> largest_prime_factors(std::uint64_t N, const PrimeTable& table) {
    if (N > table.limit())
        throw table_too_small("largest_prime_factors: N beyond table limit");
    std::vector<std::uint64_t> lpf(N + 1, 0);
    if (N >= 1)
        lpf[1] = 1;
    for (auto p : table.primes()) {
        if (p > N)
            break;
        for (std::uint64_t m = p; m <= N; m += p)
            lpf[m] = p;
    }
    return lpf;
}

inline CellDecomposition build_cells(std::uint64_t N, const WeightSpec& spec, const PrimeTable& table) {
    if (N < 2)
        throw invalid_argument("build_cells: N must be >= 2");
    const auto lpf = largest_prime_factors(N, table);
    CellDecomposition dec;
    dec.N = N;
    dec.tau_max = table.pi(static_cast<double>(N));
    dec.cells.resize(dec.tau_max);
    for (std::uint64_t n = 2; n <= N; ++n)
        dec.cells[*table.index_of(lpf[n]) - 1].push_back(n);
    for (std::size_t j = 1; j <= dec.tau_max; ++j) {
        for (auto n : dec.cells[j - 1]) {
            if (eval_weight(spec, n, table) != 0.0) {
                dec.H_d.push_back(j);
                break;
            }
        }
    }
    dec.tau_d = dec.H_d.empty() ? 0 : dec.H_d.back();
    return dec;
}

struct FnuSplit {
    std::vector<std::uint64_t> F_nu;      // cells j <= nu
    std::vector<std::uint64_t> F_sup_nu;  // cells nu < j <= tau_max
};

// nu may exceed tau_max, in which case F_nu is all of {2..N}.
inline FnuSplit f_nu_split(const CellDecomposition& dec, std::size_t nu) {
    if (nu < 1)
        throw invalid_argument("f_nu_split: nu must be >= 1");
    FnuSplit out;
    for (std::size_t j = 1; j <= dec.tau_max; ++j) {
        auto& dst = j <= nu ? out.F_nu : out.F_sup_nu;
        dst.insert(dst.end(), dec.cells[j - 1].begin(), dec.cells[j - 1].end());
    }
    std::sort(out.F_nu.begin(), out.F_nu.end());
    std::sort(out.F_sup_nu.begin(), out.F_sup_nu.end());
    return out;
}

struct LowerBoundSets {
    std::uint64_t N = 0;
    std::size_t tau = 0;
    std::size_t floor_half = 0;     // floor(tau/2)
    std::size_t upper_count = 0;    // tau - floor(tau/2)
    // blocks[i] = L_j with j = floor_half + 1 + i, ascending.
    std::vector<std::vector<std::uint64_t>> blocks;

    const std::vector<std::uint64_t>& L(std::size_t j) const {
        if (j <= floor_half || j > tau)
            throw invalid_argument("L_j defined only for floor(tau/2) < j <= tau");
        return blocks[j - floor_half - 1];
    }
};

// L_j = { p_j m : m <= N/p_j, P+(m) <= p_{floor(tau/2)} }.
inline LowerBoundSets build_Lj(std::uint64_t N, std::size_t tau, const PrimeTable& table) {
    if (tau < 2)
        throw invalid_argument("build_Lj: tau must be >= 2");
    if (tau > table.pi(static_cast<double>(N)))
        throw invalid_argument("build_Lj: tau must be <= pi(N)");
    LowerBoundSets out;
    out.N = N;
    out.tau = tau;
    out.floor_half = tau / 2;
    out.upper_count = tau - out.floor_half;
    const double cutoff = static_cast<double>(table.prime(out.floor_half));
    for (std::size_t j = out.floor_half + 1; j <= tau; ++j) {
        const std::uint64_t pj = table.prime(j);
        auto block = enumerate_smooth(static_cast<double>(N / pj), cutoff, table);
        for (auto& m : block)
            m *= pj;
        out.blocks.push_back(std::move(block));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sign patterns
// ---------------------------------------------------------------------------

// A point of Z: z_j = 0 for j <= floor(tau/2), z_j in {0, 1/2} above.
// Bit (j-1) of mask set <=> z_j = 1/2.
struct SignPattern {
    std::size_t tau = 0;
    std::uint64_t mask = 0;

    bool half_at(std::size_t j) const { return j >= 1 && j <= 64 && ((mask >> (j - 1)) & 1u); }
    std::vector<double> to_point() const {
        std::vector<double> z(tau, 0.0);
        for (std::size_t j = 1; j <= tau; ++j)
            if (half_at(j))
                z[j - 1] = 0.5;
        return z;
    }
    bool operator==(const SignPattern&) const = default;
};

inline constexpr std::uint64_t default_z_cap = std::uint64_t{1} << 24;

// Every pattern of Z once, in lexicographic order of the upper bits read as a
// binary counter (lowest upper index is the least significant bit).
class SignPatternRange {
public:
    class iterator {
    public:
        using iterator_category = std::input_iterator_tag;
        using value_type = SignPattern;
        using difference_type = std::ptrdiff_t;
        using pointer = const SignPattern*;
        using reference = SignPattern;

        iterator(const SignPatternRange* r, std::uint64_t k) : r_(r), k_(k) {}
        SignPattern operator*() const { return {r_->tau_, k_ << r_->floor_half_}; }
        iterator& operator++() {
            ++k_;
            return *this;
        }
        iterator operator++(int) {
            auto t = *this;
            ++k_;
            return t;
        }
        bool operator==(const iterator& o) const { return k_ == o.k_; }

    private:
        const SignPatternRange* r_;
        std::uint64_t k_;
    };

    SignPatternRange(std::size_t tau, std::uint64_t cap) : tau_(tau), floor_half_(tau / 2) {
        if (tau < 2)
            throw invalid_argument("enumerate_Z: tau must be >= 2");
        const std::size_t upper = tau - floor_half_;
        if (tau > 64 || upper >= 63 || (std::uint64_t{1} << upper) > cap)
            throw resource_limit("enumerate_Z: 2^" + std::to_string(upper) + " patterns exceed cap");
        count_ = std::uint64_t{1} << upper;
    }

    iterator begin() const { return {this, 0}; }
    iterator end() const { return {this, count_}; }
    std::uint64_t size() const { return count_; }

private:
    std::size_t tau_;
    std::size_t floor_half_;
    std::uint64_t count_ = 0;
};

inline SignPatternRange enumerate_Z(std::size_t tau, std::uint64_t cap = default_z_cap) {
    return SignPatternRange(tau, cap);
}

// Prime indices {tau+1, ..., pi(N)} of K_tau; empty when tau = pi(N).
inline std::vector<std::size_t> k_tau(std::uint64_t N, std::size_t tau, const PrimeTable& table) {
    const std::size_t piN = table.pi(static_cast<double>(N));
    if (tau < 1 || tau > piN)
        throw invalid_argument("k_tau: need 1 <= tau <= pi(N)");
    std::vector<std::size_t> out;
    for (std::size_t j = tau + 1; j <= piN; ++j)
        out.push_back(j);
    return out;
}

} // namespace dirsup
