#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gsplit/hier.hpp"
#include "gsplit/io.hpp"
#include "gsplit/problems.hpp"
#include "gsplit/sampler.hpp"

namespace gsplit {

/// Flat key=value run configuration. Optional [section] headers prefix the
/// keys that follow ("[sampler]" + "K = 10" reads as "sampler.K"); the
/// section prefixes are cosmetic and stripped during parsing.
struct RunConfig {
    std::string problem = "scalar";
    Strategy strategy = Strategy::auto_select;
    SolverKind solver = SolverKind::direct;
    std::size_t krylov_steps = 50;
    double krylov_tol = 1e-10;
    std::size_t K = 100;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    std::size_t workers = 1;
    std::vector<std::size_t> bench_sizes;
    std::size_t gibbs_iterations = 1000;
    std::size_t gibbs_burn_in = 0;
    std::size_t thin = 0;  // 0 disables x snapshots in chain output

    SolverChoice solver_choice() const {
        SolverChoice c;
        c.kind = solver;
        c.krylov.max_steps = krylov_steps;
        c.krylov.tol = krylov_tol;
        return c;
    }
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1,
                               diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "problem",     "strategy",   "solver",       "krylov_steps", "krylov_tol",
        "K",           "seed",       "output_dir",   "workers",      "bench_sizes",
        "gibbs_iterations", "gibbs_burn_in", "thin"};
    return keys;
}

inline void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    try {
        if (key == "problem") cfg.problem = value;
        else if (key == "strategy") {
            if (value == "auto") cfg.strategy = Strategy::auto_select;
            else if (value == "normal") cfg.strategy = Strategy::normal;
            else if (value == "adjoint") cfg.strategy = Strategy::adjoint;
            else if (value == "direct") cfg.strategy = Strategy::direct_factor;
            else throw ConfigError("strategy must be auto|normal|adjoint|direct, got '" + value + "'");
        } else if (key == "solver") {
            if (value == "direct") cfg.solver = SolverKind::direct;
            else if (value == "krylov") cfg.solver = SolverKind::krylov;
            else throw ConfigError("solver must be direct|krylov, got '" + value + "'");
        } else if (key == "krylov_steps") cfg.krylov_steps = std::stoul(value);
        else if (key == "krylov_tol") cfg.krylov_tol = std::stod(value);
        else if (key == "K") cfg.K = std::stoul(value);
        else if (key == "seed") cfg.seed = std::stoull(value);
        else if (key == "output_dir") cfg.output_dir = value;
        else if (key == "workers") cfg.workers = std::stoul(value);
        else if (key == "bench_sizes") {
            cfg.bench_sizes.clear();
            std::stringstream ss(value);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                tok = trim(tok);
                if (!tok.empty()) cfg.bench_sizes.push_back(std::stoul(tok));
            }
        } else if (key == "gibbs_iterations") cfg.gibbs_iterations = std::stoul(value);
        else if (key == "gibbs_burn_in") cfg.gibbs_burn_in = std::stoul(value);
        else if (key == "thin") cfg.thin = std::stoul(value);
        else {
            std::string nearest;
            std::size_t best = SIZE_MAX;
            for (const std::string& k : config_keys()) {
                std::size_t d = edit_distance(key, k);
                if (d < best) {
                    best = d;
                    nearest = k;
                }
            }
            throw ConfigError("unknown key '" + key + "' (did you mean '" + nearest + "'?)");
        }
    } catch (const std::invalid_argument&) {
        throw ConfigError("bad value '" + value + "' for key '" + key + "'");
    } catch (const std::out_of_range&) {
        throw ConfigError("value '" + value + "' out of range for key '" + key + "'");
    }
}

}  // namespace detail

inline RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') continue;  // section header
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value, got '" + line + "'");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        std::size_t dot = key.rfind('.');
        if (dot != std::string::npos) key.erase(0, dot + 1);
        detail::apply_key(cfg, key, value);
    }
    if (cfg.K < 1) throw ConfigError("K must be >= 1");
    // environment overrides
    if (const char* dir = std::getenv("GSPLIT_OUT_DIR")) cfg.output_dir = dir;
    if (const char* w = std::getenv("GSPLIT_WORKERS")) cfg.workers = std::stoul(w);
    return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

inline std::uint64_t fnv1a_hash(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string schema_text() {
    std::ostringstream os;
    os << "gsplit run configuration (flat key = value lines; optional [section]\n"
          "headers are cosmetic; '#' starts a comment)\n\n"
          "  problem          preset name; one of:";
    for (const std::string& p : preset_names()) os << ' ' << p;
    os << "\n"
          "  strategy         auto | normal | adjoint | direct   (default auto)\n"
          "  solver           direct | krylov                    (default direct)\n"
          "  krylov_steps     max Krylov iterations              (default 50)\n"
          "  krylov_tol       relative residual tolerance        (default 1e-10)\n"
          "  K                number of posterior draws          (default 100)\n"
          "  seed             RNG seed                           (default 1)\n"
          "  output_dir       artifact directory                 (default out)\n"
          "  workers          sampling worker threads            (default 1)\n"
          "  bench_sizes      comma-separated K list for bench\n"
          "  gibbs_iterations chain length for block models      (default 1000)\n"
          "  gibbs_burn_in    discarded leading sweeps           (default 0)\n"
          "  thin             x-snapshot stride in chain CSV, 0 = off\n\n"
          "environment overrides: GSPLIT_OUT_DIR, GSPLIT_WORKERS\n\n"
          "subcommands:\n"
          "  run <config>     sample and write samples/summary/stats CSVs\n"
          "  bench <config>   time normal vs adjoint direct samplers per K\n"
          "  schema           print this text\n";
    return os.str();
}

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    double pos = q * double(sorted.size() - 1);
    std::size_t lo = std::size_t(pos);
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = pos - double(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

inline void write_summary_csv(const DenseMatrix& draws, const std::string& path) {
    std::ofstream f(path);
    f << "coordinate,mean,std,q25,q50,q75\n";
    const std::size_t n = draws.rows, K = draws.cols;
    std::vector<double> vals(K);
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < K; ++j) {
            vals[j] = draws(i, j);
            mean += vals[j];
        }
        mean /= double(K);
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        double sd = K > 1 ? std::sqrt(var / double(K - 1)) : 0.0;
        std::sort(vals.begin(), vals.end());
        f << i << ',' << format_full(mean) << ',' << format_full(sd) << ','
          << format_full(quantile_sorted(vals, 0.25)) << ','
          << format_full(quantile_sorted(vals, 0.50)) << ','
          << format_full(quantile_sorted(vals, 0.75)) << '\n';
    }
}

inline void write_samples_csv(const DenseMatrix& draws, const std::string& path) {
    // one draw per row, coordinates across columns
    std::ofstream f(path);
    f << "draw";
    for (std::size_t i = 0; i < draws.rows; ++i) f << ",x" << i;
    f << '\n';
    for (std::size_t j = 0; j < draws.cols; ++j) {
        f << j;
        for (std::size_t i = 0; i < draws.rows; ++i) f << ',' << format_full(draws(i, j));
        f << '\n';
    }
}

inline void write_stats_csv(const std::vector<DrawStats>& stats, const std::string& path) {
    std::ofstream f(path);
    f << "draw,strategy,solver_steps,residual,converged\n";
    for (const DrawStats& s : stats)
        f << s.index << ',' << strategy_name(s.strategy) << ',' << s.solver_steps << ','
          << format_full(s.residual) << ',' << (s.converged ? 1 : 0) << '\n';
}

inline void write_chain_csv(const std::vector<HierState>& chain, std::size_t burn_in,
                            std::size_t thin, const std::string& path) {
    std::ofstream f(path);
    f << "iteration";
    if (!chain.empty())
        for (std::size_t l = 0; l < chain.front().theta.size(); ++l) f << ",theta" << l;
    f << '\n';
    for (std::size_t t = burn_in; t < chain.size(); ++t) {
        f << t;
        for (double th : chain[t].theta) f << ',' << format_full(th);
        f << '\n';
    }
    if (thin > 0) {
        std::ofstream fx(path + ".x");
        for (std::size_t t = burn_in; t < chain.size(); t += thin) {
            fx << t;
            for (double v : chain[t].x) fx << ',' << format_full(v);
            fx << '\n';
        }
    }
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Executes a sampling (or Gibbs) job and writes the artifact files into the
/// configured output directory. Returns the directory used.
inline std::string run_job(const RunConfig& cfg, const std::string& config_text) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    AssembledProblem problem = build_preset(cfg.problem);
    auto t0 = std::chrono::steady_clock::now();

    std::ostringstream manifest;
    manifest << "problem " << cfg.problem << "\n"
             << "seed " << cfg.seed << "\n"
             << "config_hash " << fnv1a_hash(config_text) << "\n"
             << "workers " << cfg.workers << "\n";

    if (problem.hier_model) {
        auto chain = gibbs_sample(*problem.hier_model, cfg.gibbs_iterations, cfg.seed);
        detail::write_chain_csv(chain, cfg.gibbs_burn_in, cfg.thin,
                                cfg.output_dir + "/chain.csv");
        DenseMatrix draws(problem.hier_model->n(), chain.size() - cfg.gibbs_burn_in);
        for (std::size_t t = cfg.gibbs_burn_in; t < chain.size(); ++t)
            draws.set_col(t - cfg.gibbs_burn_in, chain[t].x);
        detail::write_summary_csv(draws, cfg.output_dir + "/summary.csv");
        manifest << "mode gibbs\niterations " << cfg.gibbs_iterations << "\n";
    } else {
        SampleBatch batch = sample(problem.model, cfg.K, cfg.seed, cfg.strategy,
                                   cfg.solver_choice(), cfg.workers);
        DenseMatrix xs = batch.draws;
        if (problem.model.back_transform) {
            xs = DenseMatrix(problem.model.n(), cfg.K);
            for (std::size_t j = 0; j < cfg.K; ++j)
                xs.set_col(j, problem.model.to_original(batch.draws.col(j)));
        }
        detail::write_samples_csv(xs, cfg.output_dir + "/samples.csv");
        detail::write_summary_csv(xs, cfg.output_dir + "/summary.csv");
        detail::write_stats_csv(batch.per_draw_stats, cfg.output_dir + "/stats.csv");
        manifest << "mode sample\nK " << cfg.K << "\nstrategy "
                 << strategy_name(cfg.strategy) << "\n";
    }
    manifest << "elapsed_seconds " << format_full(detail::seconds_since(t0)) << "\n";
    std::ofstream mf(cfg.output_dir + "/manifest.txt");
    mf << manifest.str();
    return cfg.output_dir;
}

struct BenchmarkRow {
    std::size_t K = 0;
    double t_normal = 0.0;
    double t_adjoint = 0.0;
    double ratio_pct = 0.0;
};

/// Times the normal-equation and adjoint-splitting direct samplers on the
/// configured problem for each requested K, asserting draw-by-draw output
/// equivalence before any timing is reported. Timing includes the dense
/// factorization (amortized across the K solves) but not problem assembly.
inline std::vector<BenchmarkRow> run_benchmark(const RunConfig& cfg) {
    AssembledProblem problem = build_preset(cfg.problem);
    if (problem.hier_model)
        throw ConfigError("bench: preset '" + cfg.problem + "' is not a Gaussian model");
    const StandardFormModel& model = problem.model;
    if (model.m() >= model.n())
        throw ConfigError("bench: requires an underdetermined problem (m < n)");
    std::vector<std::size_t> sizes = cfg.bench_sizes;
    if (sizes.empty()) sizes = {100, 1000, 10000};

    // output equivalence gate at the smallest size
    {
        std::size_t k0 = *std::min_element(sizes.begin(), sizes.end());
        SampleBatch bn = sample(model, k0, cfg.seed, Strategy::normal);
        SampleBatch ba = sample(model, k0, cfg.seed, Strategy::adjoint);
        for (std::size_t j = 0; j < k0; ++j) {
            Vector xn = bn.draws.col(j), xa = ba.draws.col(j);
            if (norm2(sub(xa, xn)) > 1e-10 * std::max(norm2(xn), 1.0))
                throw std::runtime_error("bench: normal/adjoint outputs disagree at draw " +
                                         std::to_string(j));
        }
    }

    // median of three repetitions per size so machine noise cannot flip the trend
    auto time_strategy = [&](std::size_t K, Strategy s) {
        std::array<double, 3> reps;
        for (double& t : reps) {
            auto t0 = std::chrono::steady_clock::now();
            sample(model, K, cfg.seed, s, SolverChoice{}, cfg.workers);
            t = detail::seconds_since(t0);
        }
        std::sort(reps.begin(), reps.end());
        return reps[1];
    };

    std::vector<BenchmarkRow> rows;
    for (std::size_t K : sizes) {
        BenchmarkRow row;
        row.K = K;
        row.t_normal = time_strategy(K, Strategy::normal);
        row.t_adjoint = time_strategy(K, Strategy::adjoint);
        row.ratio_pct = 100.0 * row.t_adjoint / row.t_normal;
        rows.push_back(row);
    }
    return rows;
}

inline void write_benchmark_csv(const std::vector<BenchmarkRow>& rows, const std::string& path) {
    std::ofstream f(path);
    f << "K,t_normal_s,t_adjoint_s,ratio_pct\n";
    for (const BenchmarkRow& r : rows)
        f << r.K << ',' << format_full(r.t_normal) << ',' << format_full(r.t_adjoint) << ','
          << format_full(r.ratio_pct) << '\n';
}

}  // namespace gsplit
