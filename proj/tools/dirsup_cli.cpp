// dirsup: command-line front end for the experiment library.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dirsup/arith.hpp"
#include "dirsup/bounds.hpp"
#include "dirsup/estimate.hpp"
#include "dirsup/experiment.hpp"
#include "dirsup/weights.hpp"

using namespace dirsup;
using nlohmann::json;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed, replicas, budget;
    std::string output;
    unsigned threads = 0;
};

void add_common(CLI::App* sub, Common& c, bool stochastic) {
    sub->add_option("--output,-o", c.output, "Write the result here instead of stdout");
    if (!stochastic)
        return;
    sub->add_option("--config,-c", c.config, "Experiment config file (key = value)")->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "Master seed (overrides config)");
    sub->add_option("--replicas", c.replicas, "Monte-Carlo replicas (overrides config)");
    sub->add_option("--budget", c.budget, "Coordinate updates per replica (overrides config)");
    sub->add_option("--threads", c.threads, "Worker threads, 0 = all cores");
}

void emit(const Common& c, const json& j) {
    if (c.output.empty()) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream out(c.output);
    if (!out)
        throw invalid_argument("cannot open " + c.output);
    out << j.dump(2) << "\n";
}

json report_json(const ConditionReport& r) {
    return {{"condition", std::string(condition_name(r.condition_id))},
            {"checked_range", r.checked_range},
            {"holds", r.holds},
            {"witness_count", r.witness_count},
            {"witnesses", r.witnesses},
            {"fitted_constants", r.fitted_constants}};
}

ExperimentConfig config_with_overrides(const Common& c) {
    ExperimentConfig cfg;
    if (!c.config.empty())
        cfg = load_config(c.config);
    if (c.seed)
        cfg.master_seed = *c.seed;
    if (c.replicas)
        cfg.replicas = *c.replicas;
    if (c.budget)
        cfg.budget = *c.budget;
    return cfg;
}

PrimeTable table_for(std::uint64_t n) { return PrimeTable(std::max<std::uint64_t>(n, 100)); }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random Dirichlet polynomial supremum experiments"};
    app.require_subcommand(1);

    // sieve
    Common sieve_c;
    std::uint64_t sieve_limit = 100;
    bool sieve_dump = false;
    auto* sieve = app.add_subcommand("sieve", "Prime table summary");
    sieve->add_option("limit", sieve_limit, "Sieve limit")->required();
    sieve->add_flag("--dump", sieve_dump, "List every prime");
    add_common(sieve, sieve_c, false);

    // check-weight
    Common cw_c;
    std::string cw_weight = "one";
    std::uint64_t cw_limit = 10000;
    std::vector<std::string> cw_conditions, cw_params;
    auto* cw = app.add_subcommand("check-weight", "Exhaustive structural condition checks");
    cw->add_option("--weight,-w", cw_weight, "Weight spec, e.g. truncated_divisor(50)");
    cw->add_option("--limit", cw_limit, "Check every tuple up to this bound");
    cw->add_option("--condition", cw_conditions, "submult|pest|basic_d|basic_n|hr0|extra_b (default: all)");
    cw->add_option("--param", cw_params, "Constant as name=value, e.g. C=2");
    add_common(cw, cw_c, false);

    // bounds
    Common b_c;
    std::string b_weight = "one";
    std::uint64_t b_N = 10000;
    std::optional<std::size_t> b_tau, b_nu;
    double b_sigma = 0.25;
    auto* bnd = app.add_subcommand("bounds", "Envelopes and regime for one (N, tau, sigma)");
    bnd->add_option("--N", b_N, "Length N")->required();
    bnd->add_option("--tau", b_tau, "Cell count tau (default pi(N))");
    bnd->add_option("--sigma", b_sigma, "Real part sigma");
    bnd->add_option("--weight,-w", b_weight, "Weight spec");
    bnd->add_option("--nu", b_nu, "nu for the coprime-indicator envelope");
    add_common(bnd, b_c, false);

    // estimate
    Common e_c;
    std::optional<std::string> e_weight, e_noise;
    std::optional<std::uint64_t> e_N, e_tau, e_restarts;
    std::optional<double> e_sigma;
    auto* est = app.add_subcommand("estimate", "Monte-Carlo estimate of E sup |D| for one N");
    est->add_option("--N", e_N, "Length N (default: last of the config's N_list)");
    est->add_option("--tau", e_tau, "Restrict to P+(n) <= p_tau (default from tau_rule)");
    est->add_option("--sigma", e_sigma, "Real part sigma");
    est->add_option("--weight,-w", e_weight, "Weight spec");
    est->add_option("--noise", e_noise, "rademacher|gaussian");
    est->add_option("--restarts", e_restarts, "Search restarts per replica");
    add_common(est, e_c, true);

    // scan
    Common s_c;
    auto* scan = app.add_subcommand("scan", "Run a config over its N_list, appending JSON-lines records");
    add_common(scan, s_c, true);
    scan->get_option("--config")->required();

    // fit
    Common f_c;
    std::string f_records, f_field = "mc.mean";
    double f_detrend = 0.0;
    auto* fit = app.add_subcommand("fit", "Least-squares growth exponent of a record field");
    fit->add_option("records", f_records, "JSON-lines records file")->required()->check(CLI::ExistingFile);
    fit->add_option("--field", f_field, "Dotted field path, e.g. envelopes.theorem1.value");
    fit->add_option("--detrend", f_detrend, "Multiply values by (log N)^p before fitting");
    add_common(fit, f_c, false);

    // csv
    Common x_c;
    std::string x_records;
    std::vector<std::string> x_columns{"N", "tau", "mc.mean", "mc.stderr", "khintchine_lower"};
    auto* csv = app.add_subcommand("csv", "Export record fields as CSV");
    csv->add_option("records", x_records, "JSON-lines records file")->required()->check(CLI::ExistingFile);
    csv->add_option("--columns", x_columns, "Dotted field paths")->delimiter(',');
    add_common(csv, x_c, false);

    // smooth
    Common sm_c;
    double sm_x = 1e5, sm_y = 20;
    std::vector<double> sm_betas{1.0};
    auto* smooth = app.add_subcommand("smooth", "Psi(x, y), smooth harmonic sums and Dickman rho");
    smooth->add_option("--x", sm_x, "Upper bound x")->required();
    smooth->add_option("--y", sm_y, "Smoothness bound y")->required();
    smooth->add_option("--beta", sm_betas, "Exponents for sum n^{-beta}")->delimiter(',');
    add_common(smooth, sm_c, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sieve) {
            const PrimeTable table(sieve_limit);
            if (sieve_dump) {
                if (sieve_c.output.empty()) {
                    table.dump(std::cout);
                } else {
                    std::ofstream out(sieve_c.output);
                    table.dump(out);
                }
            } else {
                json j{{"limit", table.limit()}, {"pi", table.size()}};
                if (table.size())
                    j["largest_prime"] = table.primes().back();
                emit(sieve_c, j);
            }
        } else if (*cw) {
            const auto spec = parse_weight(cw_weight);
            const PrimeTable table(std::max<std::uint64_t>(cw_limit, 2));
            ConditionParams params;
            for (const auto& p : cw_params) {
                const auto eq = p.find('=');
                if (eq == std::string::npos)
                    throw invalid_argument("--param expects name=value");
                params[p.substr(0, eq)] = std::stod(p.substr(eq + 1));
            }
            std::vector<ConditionId> ids;
            for (const auto& c : cw_conditions)
                ids.push_back(parse_condition(c));
            if (ids.empty())
                ids = {ConditionId::submult, ConditionId::pest, ConditionId::basic_d,
                       ConditionId::basic_n, ConditionId::hr0,  ConditionId::extra_b};
            json out{{"weight", format_weight(spec)}, {"reports", json::array()}};
            for (auto id : ids)
                out["reports"].push_back(report_json(check_condition(spec, id, cw_limit, params, table)));
            emit(cw_c, out);
        } else if (*bnd) {
            const auto spec = parse_weight(b_weight);
            const auto table = table_for(b_N);
            const std::size_t tau = b_tau.value_or(table.pi(static_cast<double>(b_N)));
            if (tau > table.pi(static_cast<double>(b_N)))
                throw invalid_argument("tau exceeds pi(N)");
            json out{{"N", b_N}, {"tau", tau}, {"sigma", b_sigma}, {"weight", format_weight(spec)}};
            out.update(analytic_fields(spec, b_N, tau, b_sigma, table));
            if (b_nu) {
                const auto* ci = std::get_if<weight::CoprimeIndicator>(&spec.family);
                const std::vector<std::size_t> K = ci ? ci->K : std::vector<std::size_t>{};
                out["envelopes"]["theorem3"] = to_json(envelope_theorem3(b_N, b_sigma, *b_nu, K, table));
                out["envelopes"]["theorem3"]["nu"] = *b_nu;
            }
            if (b_N >= 16)
                out["nu_optimal"] = nu_optimal(static_cast<double>(b_N));
            emit(b_c, out);
        } else if (*est) {
            auto cfg = config_with_overrides(e_c);
            if (e_weight)
                cfg.weight = *e_weight;
            if (e_sigma)
                cfg.sigma = *e_sigma;
            if (e_noise)
                cfg.noise_kind = parse_noise_kind(*e_noise);
            if (e_restarts)
                cfg.restarts = *e_restarts;
            if (e_tau)
                cfg.tau_rule = {TauRuleKind::fixed, static_cast<std::size_t>(*e_tau)};
            if (e_N)
                cfg.N_list = {*e_N};
            if (cfg.N_list.empty())
                throw invalid_argument("estimate: give --N or a config with N_list");
            cfg.N_list = {cfg.N_list.back()};
            validate_config(cfg);
            const auto table = table_for(cfg.N_list.back());
            const auto rec = scan_one(cfg, config_echo(cfg), cfg.N_list.back(), table, e_c.threads);
            emit(e_c, rec);
            if (rec.contains("error"))
                return 1;
        } else if (*scan) {
            auto cfg = config_with_overrides(s_c);
            if (!s_c.output.empty())
                cfg.output_path = s_c.output;
            validate_config(cfg);
            const auto table = table_for(cfg.N_list.back());
            const auto res = run_scan(cfg, table, s_c.threads);
            std::size_t errors = 0;
            for (const auto& r : res.records)
                errors += r.contains("error");
            json summary{{"records", res.records.size()},
                         {"errors", errors},
                         {"integrity_ok", res.integrity.ok()},
                         {"integrity_problems", res.integrity.problems},
                         {"output_path", cfg.output_path}};
            std::cout << summary.dump(2) << "\n";
            if (cfg.output_path.empty())
                for (const auto& r : res.records)
                    std::cout << r.dump() << "\n";
            return res.integrity.ok() ? 0 : 2;
        } else if (*fit) {
            const auto records = read_records(f_records);
            const auto r = fit_growth_exponent(records, f_field, f_detrend);
            for (const auto& w : r.warnings)
                std::cerr << "warning: " << w << "\n";
            emit(f_c, to_json(r));
        } else if (*csv) {
            const auto records = read_records(x_records);
            if (x_c.output.empty()) {
                emit_csv(records, x_columns, std::cout);
            } else {
                std::ofstream out(x_c.output, std::ios::binary);
                emit_csv(records, x_columns, out);
            }
        } else if (*smooth) {
            const PrimeTable table(std::max<std::uint64_t>(static_cast<std::uint64_t>(sm_y) + 1, 100));
            const auto st = smooth_stats(sm_x, sm_y, sm_betas, table);
            json sums = json::array();
            for (const auto& [beta, s] : st.harmonic_sums)
                sums.push_back({{"beta", beta}, {"sum", s}});
            json out{{"x", st.x},
                     {"y", st.y},
                     {"u", st.u},
                     {"psi", st.count},
                     {"psi_over_x", static_cast<double>(st.count) / sm_x},
                     {"dickman_rho_u", dickman_rho(st.u)},
                     {"harmonic_sums", sums}};
            emit(sm_c, out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
