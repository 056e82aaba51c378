#pragma once

// Stochastic side: supremum search on the torus, the exact supremum over the
// sign set Z of the lower-bound polynomial Q', the Khintchine lower bound, the
// Bohr prime sum, and Monte-Carlo estimation of E sup_t |D(sigma + i t)|.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "dirsup/arith.hpp"
#include "dirsup/decomp.hpp"
#include "dirsup/dirichlet.hpp"
#include "dirsup/noise.hpp"
#include "dirsup/random.hpp"
#include "dirsup/weights.hpp"

namespace dirsup {

// ---------------------------------------------------------------------------
// Torus supremum search
// ---------------------------------------------------------------------------

struct SupEstimate {
    double certified_lower = 0;  // |Q(best_point)|, a true lower bound of sup |Q|
    double trivial_upper = 0;    // sum |amplitudes|
    std::vector<double> best_point;
    std::uint64_t evaluations_used = 0;  // coordinate updates performed
    std::string method;
};

struct SearchOptions {
    std::uint64_t budget = 1000;  // coordinate updates over all restarts
    std::uint64_t restarts = 1;
    std::uint64_t seed = 0;
    // Start of restart 0; uniform random when empty. Later restarts are random.
    std::optional<std::vector<double>> first_start;
};

namespace detail {

inline constexpr int search_grid = 64;
inline constexpr int golden_iters = 40;

// Coordinate ascent for |Q| on T^tau. For coordinate j the polynomial is
//   Q(z) = S_0 + sum_{k>=1} S_k e^{2 pi i k z_j},
// with S_k collecting the terms whose p_j-valuation is k; only those terms
// are touched, so a sweep costs about sum_j #{n : p_j | n}.
class CoordinateAscent {
public:
    explicit CoordinateAscent(const TorusPoly& tp) : tp_(tp), by_coord_(tp.tau), max_exp_(tp.tau, 0) {
        for (std::size_t t = 0; t < tp.terms.size(); ++t)
            for (const auto& f : tp.terms[t].freq) {
                by_coord_[f.index - 1].push_back({t, f.exponent});
                max_exp_[f.index - 1] = std::max(max_exp_[f.index - 1], f.exponent);
            }
        values_.resize(tp.terms.size());
    }

    void reset(std::vector<double> z) {
        z_ = std::move(z);
        refresh();
    }

    // Exact recomputation of every term value and of Q.
    void refresh() {
        total_ = 0.0;
        for (std::size_t t = 0; t < tp_.terms.size(); ++t) {
            values_[t] = tp_.terms[t].amplitude * unit_phase(torus_phase(tp_.terms[t], z_));
            total_ += values_[t];
        }
    }

    const std::vector<double>& point() const { return z_; }

    void optimize(std::size_t j) {
        const auto& touched = by_coord_[j];
        if (touched.empty())
            return;
        const unsigned K = max_exp_[j];
        std::vector<cplx> S(K + 1, 0.0);
        cplx moving = 0.0;
        for (const auto& [t, k] : touched) {
            moving += values_[t];
            S[k] += values_[t];
        }
        const double zj = z_[j];
        for (unsigned k = 1; k <= K; ++k)
            S[k] *= unit_phase(-frac(static_cast<long double>(k) * zj));
        S[0] = total_ - moving;
        auto f = [&](double theta) {
            cplx acc = S[0];
            for (unsigned k = 1; k <= K; ++k)
                acc += S[k] * unit_phase(frac(static_cast<long double>(k) * theta));
            return std::abs(acc);
        };
        double best_theta = zj, best_val = f(zj);
        int best_g = -1;
        double grid_val = -1;
        for (int g = 0; g < search_grid; ++g) {
            const double th = static_cast<double>(g) / search_grid;
            const double v = f(th);
            if (v > grid_val) {
                grid_val = v;
                best_g = g;
            }
        }
        // Golden-section refinement around the best grid node.
        constexpr double inv_phi = 0.6180339887498948482;
        double a = (best_g - 1.0) / search_grid, b = (best_g + 1.0) / search_grid;
        double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
        double fc = f(c), fd = f(d);
        for (int it = 0; it < golden_iters; ++it) {
            if (fc >= fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = f(d);
            }
        }
        for (auto [th, v] : {std::pair{static_cast<double>(best_g) / search_grid, grid_val}, std::pair{c, fc},
                             std::pair{d, fd}}) {
            if (v > best_val) {
                best_val = v;
                best_theta = th;
            }
        }
        best_theta = frac(best_theta);
        if (best_theta == zj)
            return;
        const double delta = best_theta - zj;
        for (const auto& [t, k] : touched) {
            const cplx nv = values_[t] * unit_phase(frac(static_cast<long double>(k) * delta));
            total_ += nv - values_[t];
            values_[t] = nv;
        }
        z_[j] = best_theta;
    }

private:
    struct Touch {
        std::size_t term;
        unsigned exponent;
    };
    const TorusPoly& tp_;
    std::vector<std::vector<Touch>> by_coord_;
    std::vector<unsigned> max_exp_;
    std::vector<cplx> values_;
    std::vector<double> z_;
    cplx total_ = 0.0;
};

} // namespace detail

// Coordinate ascent from `restarts` starting points, sweeping j = 1..tau
// cyclically. Each coordinate step scans a 64-point grid and refines with
// golden-section search. The best point is re-evaluated exactly after every
// sweep, so certified_lower is always |eval_torus(best_point)|. For a fixed
// seed and restart count, a larger budget extends every restart's path, so
// the result never decreases with budget.
inline SupEstimate sup_torus_search(const TorusPoly& tp, const SearchOptions& opt) {
    if (opt.restarts < 1 || opt.budget < opt.restarts)
        throw invalid_argument("sup_torus_search: need budget >= restarts >= 1");
    SupEstimate est;
    est.trivial_upper = tp.trivial_upper();
    est.method = "coordinate-ascent(grid=" + std::to_string(detail::search_grid) +
                 ",golden=" + std::to_string(detail::golden_iters) + ",restarts=" + std::to_string(opt.restarts) + ")";
    est.best_point.assign(tp.tau, 0.0);
    est.certified_lower = -1.0;
    detail::CoordinateAscent ascent(tp);
    for (std::uint64_t r = 0; r < opt.restarts; ++r) {
        const std::uint64_t steps = opt.budget / opt.restarts + (r < opt.budget % opt.restarts ? 1 : 0);
        std::vector<double> start;
        if (r == 0 && opt.first_start) {
            if (opt.first_start->size() != tp.tau)
                throw invalid_argument("sup_torus_search: start point has wrong dimension");
            start = *opt.first_start;
        } else {
            Rng rng(derive_seed(opt.seed, r));
            start.resize(tp.tau);
            for (auto& zj : start)
                zj = rng.uniform();
        }
        ascent.reset(std::move(start));
        auto consider = [&]() {
            const double v = std::abs(eval_torus(tp, ascent.point()));
            if (v > est.certified_lower) {
                est.certified_lower = v;
                est.best_point = ascent.point();
            }
            return v;
        };
        double last = consider();
        if (tp.tau == 0)
            continue;
        std::uint64_t used = 0;
        while (used < steps) {
            const std::uint64_t sweep = std::min<std::uint64_t>(tp.tau, steps - used);
            for (std::size_t j = 0; j < sweep; ++j)
                ascent.optimize(j);
            used += sweep;
            ascent.refresh();
            const double v = consider();
            if (sweep == tp.tau && v <= last * (1.0 + 1e-14))
                break;  // converged; deterministic, so independent of budget
            last = v;
        }
        est.evaluations_used += used;
    }
    return est;
}

inline SupEstimate sup_torus_search(const TorusPoly& tp, std::uint64_t budget, std::uint64_t restarts,
                                    std::uint64_t seed) {
    return sup_torus_search(tp, SearchOptions{budget, restarts, seed, std::nullopt});
}

// ---------------------------------------------------------------------------
// Exact supremum over Z and the Khintchine lower bound
// ---------------------------------------------------------------------------

struct ExactZ {
    double value = 0;                 // sum_j |B_j|
    std::vector<double> block_sums;   // B_j = sum_{n in L_j} c_n n^{-sigma}
    std::vector<double> maximizer;    // point of Z: z_j = 1/2 exactly where B_j < 0
};

// On Z every n in L_j sees only the phase (-1)^{2 z_j}, so
//   Q'(z) = sum_j (-1)^{2 z_j} B_j   and   sup_Z |Q'| = sum_j |B_j|.
inline ExactZ sup_exact_Z(const DirichletPoly& poly, const LowerBoundSets& lbs) {
    ExactZ out;
    out.maximizer.assign(lbs.tau, 0.0);
    CompensatedSum total;
    for (std::size_t i = 0; i < lbs.blocks.size(); ++i) {
        CompensatedSum b;
        for (auto n : lbs.blocks[i])
            b.add(poly.coefficient(n) * std::pow(static_cast<double>(n), -poly.sigma));
        const double B = b.value();
        out.block_sums.push_back(B);
        total.add(std::abs(B));
        if (B < 0)
            out.maximizer[lbs.floor_half + i] = 0.5;
    }
    out.value = total.value();
    return out;
}

// Sharp constant of the L1-L2 Khintchine inequality for Rademacher sums.
inline const double khintchine_constant = 1.0 / std::numbers::sqrt2;

inline double khintchine_lower(const WeightSpec& spec, double sigma, const LowerBoundSets& lbs,
                               const PrimeTable& table) {
    CompensatedSum total;
    for (const auto& block : lbs.blocks) {
        CompensatedSum l2;
        for (auto n : block) {
            const double d = eval_weight(spec, n, table);
            l2.add(d * d * std::pow(static_cast<double>(n), -2.0 * sigma));
        }
        total.add(std::sqrt(l2.value()));
    }
    return khintchine_constant * total.value();
}

// c sum_{floor(tau/2) < j <= tau} (sum_{n in L_j} d(n)^2 n^{-2 sigma})^{1/2}, c = 2^{-1/2}.
inline double khintchine_lower(const WeightSpec& spec, std::uint64_t N, double sigma, std::size_t tau,
                               const PrimeTable& table) {
    return khintchine_lower(spec, sigma, build_Lj(N, tau, table), table);
}

// sum_{p <= N, p not in K} p^{-sigma}; the accompanying constant is unspecified.
inline double bohr_lower_sum(std::span<const std::size_t> K, std::uint64_t N, double sigma, const PrimeTable& table) {
    std::vector<std::size_t> sorted(K.begin(), K.end());
    std::sort(sorted.begin(), sorted.end());
    CompensatedSum s;
    const std::size_t piN = table.pi(static_cast<double>(N));
    for (std::size_t j = 1; j <= piN; ++j)
        if (!std::binary_search(sorted.begin(), sorted.end(), j))
            s.add(std::pow(static_cast<double>(table.prime(j)), -sigma));
    return s.value();
}

// ---------------------------------------------------------------------------
// Monte-Carlo estimation
// ---------------------------------------------------------------------------

// Runs body(r) for r in [0, count) on up to `threads` workers (0 = hardware
// concurrency). Results are stored by index, so output order never depends
// on scheduling.
template <class T, class Body>
std::vector<T> run_indexed(std::size_t count, unsigned threads, Body body) {
    std::vector<T> out(count);
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            out[i] = body(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < count;) {
                    try {
                        out[i] = body(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure)
                            failure = std::current_exception();
                    }
                }
            });
    }
    if (failure)
        std::rethrow_exception(failure);
    return out;
}

struct MeanStderr {
    double mean = 0;
    double stderr_ = 0;
};

inline MeanStderr mean_stderr(std::span<const double> xs) {
    MeanStderr m;
    if (xs.empty())
        return m;
    CompensatedSum s;
    for (double x : xs)
        s.add(x);
    m.mean = s.value() / static_cast<double>(xs.size());
    if (xs.size() < 2)
        return m;
    CompensatedSum ss;
    for (double x : xs)
        ss.add((x - m.mean) * (x - m.mean));
    const double var = ss.value() / static_cast<double>(xs.size() - 1);
    m.stderr_ = std::sqrt(var / static_cast<double>(xs.size()));
    return m;
}

struct MCConfig {
    WeightSpec spec = WeightSpec::one();
    std::uint64_t N = 1;
    double sigma = 0.25;
    std::size_t tau = 0;  // must be <= pi(N); support restricted to P+(n) <= p_tau
    NoiseKind noise_kind = NoiseKind::rademacher;
    std::uint64_t replicas = 2;
    std::uint64_t budget = 1000;
    std::uint64_t restarts = 2;
    std::uint64_t master_seed = 0;
    unsigned threads = 0;
};

struct ReplicaSummary {
    std::uint64_t index = 0;
    std::uint64_t seed = 0;
    double value = 0;              // max(search, z_star_value)
    double search_lower = 0;       // torus search certified lower bound
    double exact_z = 0;            // sup_Z |Q'| closed form (L_j terms only)
    double z_star_value = 0;       // |Q(z*)| for the full draw at the Q'-maximizing sign pattern
    double trivial_upper = 0;
    std::uint64_t evaluations_used = 0;
};

struct MCResult {
    double mean = 0;
    double stderr_ = 0;
    std::uint64_t replicas = 0;
    std::vector<ReplicaSummary> per_replica;
    std::uint64_t master_seed = 0;
    std::string generator_id;
    std::string bias;
};

inline constexpr std::string_view mc_bias_note =
    "downward: each replica value is a certified lower bound of that draw's supremum";

// One replica: draw noise with seed derive_seed(master_seed, r), build the
// polynomial (restricted to p_tau-smooth n), evaluate the full draw at the
// sign pattern maximizing Q', then run the torus search starting from it.
inline ReplicaSummary mc_replica(const MCConfig& cfg, std::uint64_t r, const std::optional<LowerBoundSets>& lbs,
                                 const PrimeTable& table) {
    ReplicaSummary rep;
    rep.index = r;
    rep.seed = derive_seed(cfg.master_seed, r);
    const auto noise = draw_noise(cfg.noise_kind, rep.seed, cfg.N);
    auto poly = build_poly(cfg.N, cfg.sigma, cfg.spec, table, &noise);
    if (cfg.tau < table.pi(static_cast<double>(cfg.N)))
        poly = restrict_to_smooth(std::move(poly), cfg.tau == 0 ? 1 : table.prime(cfg.tau), table);
    const auto tp = to_torus(poly, cfg.tau, table);
    SearchOptions opt{cfg.budget, cfg.restarts, derive_seed(rep.seed, 0x5EA4C4ull), std::nullopt};
    if (lbs) {
        const auto ez = sup_exact_Z(poly, *lbs);
        rep.exact_z = ez.value;
        auto zstar = ez.maximizer;
        rep.z_star_value = std::abs(eval_torus(tp, zstar));
        opt.first_start = std::move(zstar);
    }
    const auto est = sup_torus_search(tp, opt);
    rep.search_lower = est.certified_lower;
    rep.trivial_upper = est.trivial_upper;
    rep.evaluations_used = est.evaluations_used;
    rep.value = std::max(rep.search_lower, rep.z_star_value);
    return rep;
}

inline MCResult mc_esup(const MCConfig& cfg, const PrimeTable& table) {
    if (cfg.replicas < 2)
        throw invalid_argument("mc_esup: replicas must be >= 2");
    if (cfg.N > table.limit())
        throw table_too_small("mc_esup: N beyond table limit");
    if (cfg.tau > table.pi(static_cast<double>(cfg.N)))
        throw invalid_argument("mc_esup: tau must be <= pi(N)");
    std::optional<LowerBoundSets> lbs;
    if (cfg.tau >= 2)
        lbs = build_Lj(cfg.N, cfg.tau, table);
    MCResult res;
    res.replicas = cfg.replicas;
    res.master_seed = cfg.master_seed;
    res.generator_id = generator_id;
    res.bias = mc_bias_note;
    res.per_replica = run_indexed<ReplicaSummary>(
        cfg.replicas, cfg.threads, [&](std::size_t r) { return mc_replica(cfg, r, lbs, table); });
    std::vector<double> values;
    for (const auto& rep : res.per_replica)
        values.push_back(rep.value);
    const auto ms = mean_stderr(values);
    res.mean = ms.mean;
    res.stderr_ = ms.stderr_;
    return res;
}

inline nlohmann::json to_json(const SupEstimate& e) {
    return {{"certified_lower", e.certified_lower}, {"trivial_upper", e.trivial_upper},
            {"best_point", e.best_point},           {"evaluations_used", e.evaluations_used},
            {"method", e.method}};
}

inline nlohmann::json to_json(const MCResult& m, bool with_replicas = true) {
    nlohmann::json j{{"mean", m.mean},         {"stderr", m.stderr_},           {"replicas", m.replicas},
                     {"master_seed", m.master_seed}, {"generator_id", m.generator_id}, {"bias", m.bias}};
    if (with_replicas) {
        auto& reps = j["per_replica"] = nlohmann::json::array();
        for (const auto& r : m.per_replica)
            reps.push_back({{"index", r.index},
                            {"seed", r.seed},
                            {"value", r.value},
                            {"search_lower", r.search_lower},
                            {"exact_z", r.exact_z},
                            {"z_star_value", r.z_star_value},
                            {"trivial_upper", r.trivial_upper},
                            {"evaluations_used", r.evaluations_used}});
    }
    return j;
}

} // namespace dirsup
