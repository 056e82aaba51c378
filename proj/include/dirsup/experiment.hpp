#pragma once

// Config-driven scans over N: one JSON record per N with the Monte-Carlo
// estimate, the Khintchine lower bound and the applicable envelopes, plus
// exponent fitting and CSV export over stored records.
//
// Config file: one `key = value` per line, '#' starts a comment.
//
//   format_version = 1
//   weight      = one                  # weight grammar, see parse_weight
//   sigma       = 0.25
//   N_list      = 256, 512, 2^10       # ascending; 2^k accepted
//   tau_rule    = full_pi_N            # | fixed:<tau> | nu_optimal
//   noise_kind  = rademacher           # | gaussian
//   replicas    = 32
//   budget      = 20000                # coordinate updates per replica
//   restarts    = 4
//   master_seed = 1
//   output_path = records.jsonl        # empty: no file

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "dirsup/arith.hpp"
#include "dirsup/bounds.hpp"
#include "dirsup/decomp.hpp"
#include "dirsup/errors.hpp"
#include "dirsup/estimate.hpp"
#include "dirsup/weights.hpp"

namespace dirsup {

inline constexpr int config_format_version = 1;
inline constexpr int record_format_version = 1;

enum class TauRuleKind { full_pi_N, fixed, nu_optimal };

struct TauRule {
    TauRuleKind kind = TauRuleKind::full_pi_N;
    std::size_t fixed_tau = 0;
};

inline std::string format_tau_rule(const TauRule& r) {
    switch (r.kind) {
    case TauRuleKind::full_pi_N: return "full_pi_N";
    case TauRuleKind::fixed: return "fixed:" + std::to_string(r.fixed_tau);
    case TauRuleKind::nu_optimal: return "nu_optimal";
    }
    return "?";
}

inline TauRule parse_tau_rule(std::string_view s) {
    if (s == "full_pi_N")
        return {TauRuleKind::full_pi_N, 0};
    if (s == "nu_optimal")
        return {TauRuleKind::nu_optimal, 0};
    if (s.starts_with("fixed:")) {
        const auto t = detail::parse_uint(s.substr(6));
        if (t < 1)
            throw invalid_argument("tau_rule fixed:<tau> needs tau >= 1");
        return {TauRuleKind::fixed, static_cast<std::size_t>(t)};
    }
    throw invalid_argument("unknown tau_rule: " + std::string(s));
}

struct ExperimentConfig {
    std::string weight = "one";
    double sigma = 0.25;
    std::vector<std::uint64_t> N_list;
    TauRule tau_rule;
    NoiseKind noise_kind = NoiseKind::rademacher;
    std::uint64_t replicas = 32;
    std::uint64_t budget = 20000;
    std::uint64_t restarts = 4;
    std::uint64_t master_seed = 1;
    std::string output_path;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

inline std::uint64_t parse_n_value(std::string_view s) {
    s = trim(s);
    if (auto caret = s.find('^'); caret != std::string_view::npos) {
        const auto base = parse_uint(trim(s.substr(0, caret)));
        const auto e = parse_uint(trim(s.substr(caret + 1)));
        std::uint64_t v = 1;
        for (std::uint64_t i = 0; i < e; ++i) {
            if (v > UINT64_MAX / std::max<std::uint64_t>(base, 1))
                throw invalid_argument("N value overflows: " + std::string(s));
            v *= base;
        }
        return v;
    }
    return parse_uint(s);
}

} // namespace detail

inline std::vector<std::uint64_t> parse_n_list(std::string_view s) {
    std::vector<std::uint64_t> out;
    for (auto part : detail::split_top(s, ','))
        if (!detail::trim(part).empty())
            out.push_back(detail::parse_n_value(part));
    return out;
}

// Sets one field from its text form; unknown keys are rejected.
inline void apply_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
    value = detail::trim(value);
    if (key == "format_version") {
        if (detail::parse_uint(value) != config_format_version)
            throw invalid_argument("config: unsupported format_version " + std::string(value));
    } else if (key == "weight") {
        cfg.weight = std::string(value);
    } else if (key == "sigma") {
        cfg.sigma = detail::parse_double(value);
    } else if (key == "N_list") {
        cfg.N_list = parse_n_list(value);
    } else if (key == "tau_rule") {
        cfg.tau_rule = parse_tau_rule(value);
    } else if (key == "noise_kind") {
        cfg.noise_kind = parse_noise_kind(value);
    } else if (key == "replicas") {
        cfg.replicas = detail::parse_uint(value);
    } else if (key == "budget") {
        cfg.budget = detail::parse_uint(value);
    } else if (key == "restarts") {
        cfg.restarts = detail::parse_uint(value);
    } else if (key == "master_seed") {
        cfg.master_seed = detail::parse_uint(value);
    } else if (key == "output_path") {
        cfg.output_path = std::string(value);
    } else {
        throw invalid_argument("config: unknown key '" + std::string(key) + "'");
    }
}

inline ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        std::string_view s = line;
        if (auto hash = s.find('#'); hash != std::string_view::npos)
            s = s.substr(0, hash);
        s = detail::trim(s);
        if (s.empty())
            continue;
        const auto eq = s.find('=');
        if (eq == std::string_view::npos)
            throw invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        try {
            apply_config_value(cfg, detail::trim(s.substr(0, eq)), s.substr(eq + 1));
        } catch (const invalid_argument& e) {
            throw invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

inline ExperimentConfig parse_config(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_config(in);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw invalid_argument("cannot open config file " + path);
    return parse_config(in);
}

inline std::string format_config(const ExperimentConfig& cfg) {
    std::string n_list;
    for (std::size_t i = 0; i < cfg.N_list.size(); ++i)
        n_list += (i ? ", " : "") + std::to_string(cfg.N_list[i]);
    std::ostringstream out;
    out << "format_version = " << config_format_version << "\n"
        << "weight = " << cfg.weight << "\n"
        << "sigma = " << detail::format_double(cfg.sigma) << "\n"
        << "N_list = " << n_list << "\n"
        << "tau_rule = " << format_tau_rule(cfg.tau_rule) << "\n"
        << "noise_kind = " << noise_name(cfg.noise_kind) << "\n"
        << "replicas = " << cfg.replicas << "\n"
        << "budget = " << cfg.budget << "\n"
        << "restarts = " << cfg.restarts << "\n"
        << "master_seed = " << cfg.master_seed << "\n"
        << "output_path = " << cfg.output_path << "\n";
    return out.str();
}

inline nlohmann::json config_echo(const ExperimentConfig& cfg) {
    return {{"format_version", config_format_version},
            {"weight", format_weight(parse_weight(cfg.weight))},
            {"sigma", cfg.sigma},
            {"N_list", cfg.N_list},
            {"tau_rule", format_tau_rule(cfg.tau_rule)},
            {"noise_kind", std::string(noise_name(cfg.noise_kind))},
            {"replicas", cfg.replicas},
            {"budget", cfg.budget},
            {"restarts", cfg.restarts},
            {"master_seed", cfg.master_seed},
            {"output_path", cfg.output_path}};
}

// Every config-level precondition, checked before anything runs. Conditions
// that depend on a particular N (tau rule vs pi(N), regime) are reported per
// record instead.
inline void validate_config(const ExperimentConfig& cfg) {
    std::vector<std::string> problems;
    try {
        parse_weight(cfg.weight);
    } catch (const std::exception& e) {
        problems.push_back(std::string("weight: ") + e.what());
    }
    if (!(cfg.sigma >= 0.0 && cfg.sigma <= 0.5))
        problems.push_back("sigma must lie in [0, 1/2]");
    if (cfg.N_list.empty())
        problems.push_back("N_list is empty");
    for (std::size_t i = 0; i < cfg.N_list.size(); ++i) {
        if (cfg.N_list[i] < 1)
            problems.push_back("N_list entries must be >= 1");
        if (i && cfg.N_list[i] <= cfg.N_list[i - 1])
            problems.push_back("N_list must be strictly ascending");
    }
    if (!cfg.N_list.empty() && cfg.N_list.back() > 100'000'000)
        problems.push_back("N above 10^8 is not supported");
    if (cfg.replicas < 2)
        problems.push_back("replicas must be >= 2");
    if (cfg.restarts < 1 || cfg.budget < cfg.restarts)
        problems.push_back("need budget >= restarts >= 1");
    if (!problems.empty()) {
        std::string msg = "invalid config:";
        for (const auto& p : problems)
            msg += "\n  " + p;
        throw invalid_argument(msg);
    }
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

inline std::size_t resolve_tau(const TauRule& rule, std::uint64_t N, const PrimeTable& table) {
    const std::size_t piN = table.pi(static_cast<double>(N));
    std::size_t tau = piN;
    if (rule.kind == TauRuleKind::fixed)
        tau = rule.fixed_tau;
    else if (rule.kind == TauRuleKind::nu_optimal)
        tau = static_cast<std::size_t>(nu_optimal(static_cast<double>(N)));
    if (tau > piN)
        throw invalid_argument("tau = " + std::to_string(tau) + " exceeds pi(N) = " + std::to_string(piN));
    return tau;
}

// The deterministic part of a record that depends only on (N, tau, sigma,
// weight): regime, Khintchine bound, Bohr sum and envelopes. The integrity
// pass recomputes it from the stored fields.
inline nlohmann::json analytic_fields(const WeightSpec& spec, std::uint64_t N, std::size_t tau, double sigma,
                                      const PrimeTable& table) {
    nlohmann::json j;
    const double Nd = static_cast<double>(N);
    j["regime"] = nullptr;
    if (N >= 16 && tau >= 1)
        j["regime"] = to_json(classify_regime(Nd, static_cast<double>(tau)));
    j["khintchine_lower"] = nullptr;
    if (tau >= 2)
        j["khintchine_lower"] = khintchine_lower(spec, N, sigma, tau, table);
    auto& env = j["envelopes"] = nlohmann::json::object();
    if (N >= 2) {
        const double D2 = characteristic_sums(spec, N, table).D2_tilde;
        env["theorem1"] = to_json(envelope_theorem1(Nd, sigma, D2));
        if (N >= 16 && tau >= 1 && sigma < 0.5) {
            const auto reg = classify_regime(Nd, static_cast<double>(tau));
            if (reg.case_id != RegimeCase::small_tau || tau >= 3)
                env["theorem2"] = to_json(envelope_theorem2(Nd, sigma, static_cast<double>(tau), D2));
            if (reg.case_id == RegimeCase::small_tau && sigma > 0 && tau >= 3 && (sigma < 0.5 || tau >= 16)) {
                const auto st = envelope_smalltau(tau, sigma, table);
                env["smalltau"] = {{"lower", to_json(st.lower)}, {"upper", to_json(st.upper)}};
            }
        }
    }
    j["bohr_sum"] = nullptr;
    if (const auto* ci = std::get_if<weight::CoprimeIndicator>(&spec.family)) {
        j["bohr_sum"] = bohr_lower_sum(ci->K, N, sigma, table);
        if (N >= 16 && sigma > 0 && sigma < 0.5) {
            const auto nu = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(regime_b_low(Nd))));
            env["theorem3"] = to_json(envelope_theorem3(N, sigma, nu, ci->K, table));
            env["theorem3"]["nu"] = nu;
        }
    }
    return j;
}

// One record for one N. Per-N failures land in the "error" field.
inline nlohmann::json scan_one(const ExperimentConfig& cfg, const nlohmann::json& echo, std::uint64_t N,
                               const PrimeTable& table, unsigned threads) {
    const auto start = std::chrono::steady_clock::now();
    nlohmann::json rec;
    rec["format_version"] = record_format_version;
    rec["config"] = echo;
    rec["N"] = N;
    try {
        const auto spec = parse_weight(cfg.weight);
        const std::size_t tau = resolve_tau(cfg.tau_rule, N, table);
        rec["tau"] = tau;
        rec.update(analytic_fields(spec, N, tau, cfg.sigma, table));
        MCConfig mc{spec,         N,           cfg.sigma, tau, cfg.noise_kind, cfg.replicas, cfg.budget,
                    cfg.restarts, derive_seed(cfg.master_seed, N), threads};
        rec["mc"] = to_json(mc_esup(mc, table));
    } catch (const std::exception& e) {
        rec["error"] = e.what();
    }
    rec["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

struct IntegrityReport {
    std::size_t expected = 0;
    std::size_t found = 0;
    std::size_t mismatched = 0;  // records whose analytic fields do not recompute
    std::vector<std::string> problems;
    bool ok() const { return problems.empty(); }
};

// Re-derives the analytic fields of every error-free record from its stored
// (N, tau, sigma, weight) and compares them exactly.
inline IntegrityReport verify_records(const std::vector<nlohmann::json>& records, std::size_t expected,
                                      const PrimeTable& table) {
    IntegrityReport rep;
    rep.expected = expected;
    rep.found = records.size();
    if (rep.found != expected)
        rep.problems.push_back("expected " + std::to_string(expected) + " records, found " +
                               std::to_string(rep.found));
    for (const auto& r : records) {
        if (r.contains("error"))
            continue;
        const auto spec = parse_weight(r.at("config").at("weight").get<std::string>());
        const auto fresh = analytic_fields(spec, r.at("N").get<std::uint64_t>(), r.at("tau").get<std::size_t>(),
                                           r.at("config").at("sigma").get<double>(), table);
        for (const auto& [key, val] : fresh.items()) {
            if (r.value(key, nlohmann::json()) != val) {
                ++rep.mismatched;
                rep.problems.push_back("N = " + r.at("N").dump() + ": field '" + key + "' does not recompute");
            }
        }
        const auto& mc = r.at("mc");
        for (const auto& rep_json : mc.at("per_replica"))
            if (rep_json.at("value").get<double>() > rep_json.at("trivial_upper").get<double>() * (1 + 1e-12))
                rep.problems.push_back("N = " + r.at("N").dump() + ": estimate above trivial upper bound");
    }
    return rep;
}

inline std::vector<nlohmann::json> read_records(std::istream& in) {
    std::vector<nlohmann::json> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty())
            out.push_back(nlohmann::json::parse(line));
    return out;
}

inline std::vector<nlohmann::json> read_records(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw invalid_argument("cannot open records file " + path);
    return read_records(in);
}

struct ScanResult {
    std::vector<nlohmann::json> records;
    IntegrityReport integrity;
};

// Runs every N in order. With an output path, each record is appended as
// one JSON line as soon as it is complete; the integrity pass then re-reads
// exactly the lines written by this run.
inline ScanResult run_scan(const ExperimentConfig& cfg, const PrimeTable& table, unsigned threads = 0) {
    validate_config(cfg);
    if (cfg.N_list.back() > table.limit())
        throw table_too_small("run_scan: largest N exceeds prime table limit");
    const auto echo = config_echo(cfg);
    std::optional<std::ofstream> out;
    std::streamoff offset = 0;
    if (!cfg.output_path.empty()) {
        out.emplace(cfg.output_path, std::ios::app | std::ios::binary);
        if (!*out)
            throw invalid_argument("cannot open output file " + cfg.output_path);
        out->seekp(0, std::ios::end);
        offset = out->tellp();
    }
    ScanResult res;
    for (auto N : cfg.N_list) {
        auto rec = scan_one(cfg, echo, N, table, threads);
        if (out) {
            *out << rec.dump() << '\n';
            out->flush();
        }
        res.records.push_back(std::move(rec));
    }
    if (out) {
        out->close();
        std::ifstream in(cfg.output_path, std::ios::binary);
        in.seekg(offset);
        res.integrity = verify_records(read_records(in), cfg.N_list.size(), table);
    } else {
        res.integrity = verify_records(res.records, cfg.N_list.size(), table);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Field selection, fitting and CSV
// ---------------------------------------------------------------------------

// Dotted path into a record, e.g. "mc.mean" or "envelopes.theorem1.value".
inline const nlohmann::json* select_field(const nlohmann::json& rec, std::string_view path) {
    const nlohmann::json* cur = &rec;
    while (!path.empty()) {
        const auto dot = path.find('.');
        const std::string key(path.substr(0, dot));
        if (!cur->is_object() || !cur->contains(key))
            return nullptr;
        cur = &(*cur)[key];
        path = dot == std::string_view::npos ? std::string_view{} : path.substr(dot + 1);
    }
    return cur;
}

struct FitPoint {
    double log_N;
    double log_value;
};

struct FitResult {
    double slope = 0;      // of the detrended series
    double intercept = 0;
    double r2 = 1;
    double raw_slope = 0;  // of log(value) without detrending
    double detrend_log_power = 0;
    std::vector<FitPoint> points;  // detrended
    std::vector<std::string> warnings;
};

struct LineFit {
    double slope, intercept, r2;
};

// Ordinary least squares; r2 = 1 when the response has no variance.
inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0)
        throw invalid_argument("least_squares: all x values coincide");
    const double slope = sxy / sxx;
    double r2 = 1.0;
    if (syy > 0)
        r2 = std::clamp(slope * sxy / syy, 0.0, 1.0);
    return {slope, my - slope * mx, r2};
}

// Fits log(value (log N)^p) against log N, where p = detrend_log_power
// (p = 1 removes a 1/log N factor). The raw slope (p = 0) is always reported.
inline FitResult fit_growth_exponent(const std::vector<nlohmann::json>& records, std::string_view selector,
                                     double detrend_log_power = 0.0) {
    FitResult fit;
    fit.detrend_log_power = detrend_log_power;
    std::vector<double> xs, raw, detrended;
    for (const auto& r : records) {
        const auto* v = select_field(r, selector);
        const auto* n = select_field(r, "N");
        if (!v || !v->is_number() || !n) {
            fit.warnings.push_back("record without numeric '" + std::string(selector) + "' skipped");
            continue;
        }
        const double value = v->get<double>();
        const double N = n->get<double>();
        if (!(value > 0) || !(N > 1)) {
            fit.warnings.push_back("N = " + n->dump() + ": non-positive value skipped");
            continue;
        }
        const double lN = std::log(N);
        xs.push_back(lN);
        raw.push_back(std::log(value));
        detrended.push_back(std::log(value) + detrend_log_power * std::log(lN));
        fit.points.push_back({xs.back(), detrended.back()});
    }
    if (xs.size() < 3)
        throw invalid_argument("fit_growth_exponent: need at least 3 usable records");
    fit.raw_slope = least_squares(xs, raw).slope;
    const auto lf = least_squares(xs, detrended);
    fit.slope = lf.slope;
    fit.intercept = lf.intercept;
    fit.r2 = lf.r2;
    return fit;
}

inline nlohmann::json to_json(const FitResult& f) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : f.points)
        pts.push_back({p.log_N, p.log_value});
    return {{"slope", f.slope},         {"intercept", f.intercept}, {"r2", f.r2},
            {"raw_slope", f.raw_slope}, {"detrend_log_power", f.detrend_log_power},
            {"points", pts},            {"warnings", f.warnings}};
}

inline const std::vector<std::string>& record_top_fields() {
    static const std::vector<std::string> fields{"format_version", "config",   "N",       "tau",
                                                 "regime",         "mc",       "khintchine_lower",
                                                 "bohr_sum",       "envelopes", "wall_time", "error"};
    return fields;
}

namespace detail {

inline std::string csv_cell(const nlohmann::json* v) {
    if (!v || v->is_null())
        return "";
    std::string s;
    if (v->is_number_integer() || v->is_number_unsigned()) {
        s = v->dump();
    } else if (v->is_number_float()) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.12g", v->get<double>());
        s = buf;
    } else if (v->is_string()) {
        s = v->get<std::string>();
    } else {
        s = v->dump();
    }
    if (s.find_first_of(",\"\r\n") != std::string::npos) {
        std::string q = "\"";
        for (char c : s) {
            if (c == '"')
                q += '"';
            q += c;
        }
        return q + '"';
    }
    return s;
}

} // namespace detail

// Header row plus one row per record, CRLF line ends; floats carry 12
// significant digits. A column must start with a known record field; a
// missing nested value gives an empty cell.
inline void emit_csv(const std::vector<nlohmann::json>& records, const std::vector<std::string>& columns,
                     std::ostream& out) {
    const auto& known = record_top_fields();
    for (const auto& c : columns) {
        const auto head = c.substr(0, c.find('.'));
        if (std::find(known.begin(), known.end(), head) == known.end())
            throw invalid_argument("emit_csv: unknown column '" + c + "'");
    }
    for (std::size_t i = 0; i < columns.size(); ++i) {
        const nlohmann::json name = columns[i];
        out << (i ? "," : "") << detail::csv_cell(&name);
    }
    out << "\r\n";
    for (const auto& r : records) {
        for (std::size_t i = 0; i < columns.size(); ++i)
            out << (i ? "," : "") << detail::csv_cell(select_field(r, columns[i]));
        out << "\r\n";
    }
}

// Minimal RFC-4180 reader, the inverse of emit_csv.
inline std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false, any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    cell += '"';
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(cell));
            cell.clear();
        } else if (c == '\r') {
            continue;
        } else if (c == '\n') {
            row.push_back(std::move(cell));
            cell.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            cell += c;
        }
    }
    if (any) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace dirsup
