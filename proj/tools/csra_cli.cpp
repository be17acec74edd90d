// Experiment runner for the csra library: single runs, parameter sweeps,
// closed-form analysis, and the Monte-Carlo-vs-formula oracle checks.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "csra/analytics.hpp"
#include "csra/engine.hpp"
#include "csra/mc.hpp"
#include "csra/sweep.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;  // runtime failures, failed checks
constexpr int kExitConfig = 2;   // missing or invalid configuration

struct CommonOpts {
    std::optional<std::uint64_t> seed;
    std::optional<long> horizon;
    std::string out_dir = ".";
    int workers = 0;
    bool event_log = false;
    bool save_nets = false;
};

csra::SimConfig load_run_config(const std::string& path, const CommonOpts& opts) {
    if (!fs::exists(path)) {
        std::cerr << "error: config file not found: " << path << "\n";
        std::exit(kExitConfig);
    }
    csra::SimConfig cfg = csra::parse_config_file(path);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.horizon) cfg.horizon = *opts.horizon;
    auto errors = csra::validate_config(cfg);
    if (!errors.empty()) {
        std::cerr << "error: invalid config " << path << ":\n";
        for (const auto& e : errors) std::cerr << "  " << e << "\n";
        std::exit(kExitConfig);
    }
    return cfg;
}

int cmd_run(const std::string& config_path, const CommonOpts& opts) {
    const csra::SimConfig cfg = load_run_config(config_path, opts);
    fs::create_directories(opts.out_dir);

    std::ofstream event_file;
    std::optional<csra::EventLogger> logger;
    if (opts.event_log) {
        event_file.open(fs::path(opts.out_dir) / "events.csv");
        if (!event_file) {
            std::cerr << "error: cannot write event log in " << opts.out_dir << "\n";
            return kExitFailure;
        }
        logger.emplace(event_file);
    }

    csra::Engine engine(cfg);
    const csra::RunMetrics metrics = engine.run(logger ? &*logger : nullptr);

    const fs::path metrics_path = fs::path(opts.out_dir) / "metrics.csv";
    std::ofstream out(metrics_path);
    if (!out) {
        std::cerr << "error: cannot write " << metrics_path.string() << "\n";
        return kExitFailure;
    }
    out << "# csra-metrics-v1\n" << csra::metrics_csv_header() << '\n'
        << csra::metrics_csv_row(engine.config(), metrics) << '\n';

    std::cout << csra::metrics_csv_header() << '\n'
              << csra::metrics_csv_row(engine.config(), metrics) << '\n';

    if (opts.save_nets && cfg.policy == csra::PolicyKind::Dnn) {
        for (int n = 0; n < cfg.K; ++n) {
            const auto* dnn = dynamic_cast<const csra::DnnPolicy*>(&engine.policy_of(n));
            if (!dnn) continue;
            std::ofstream net_out(fs::path(opts.out_dir) / ("lap" + std::to_string(n) + ".net"));
            csra::save_mlp(net_out, dnn->net());
        }
    }
    return kExitOk;
}

int cmd_sweep(const std::string& sweep_path, const CommonOpts& opts) {
    if (!fs::exists(sweep_path)) {
        std::cerr << "error: sweep file not found: " << sweep_path << "\n";
        return kExitConfig;
    }
    csra::SweepSpec spec;
    try {
        spec = csra::parse_sweep_file(sweep_path);
    } catch (const csra::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    if (opts.seed) spec.base.seed = *opts.seed;
    if (opts.horizon) spec.base.horizon = *opts.horizon;

    int workers = opts.workers;
    if (workers <= 0) workers = std::max(1u, std::thread::hardware_concurrency());
    try {
        csra::run_sweep(spec, workers, opts.out_dir, &std::cerr);
    } catch (const csra::SweepError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    std::cout << "raw: " << (fs::path(opts.out_dir) / "raw.csv").string() << "\n"
              << "aggregated: " << (fs::path(opts.out_dir) / "aggregated.csv").string() << "\n";
    return kExitOk;
}

void print_queue_analysis(double p_arr, double lambda, int D, int tmax) {
    const csra::QueueSteadyState st = csra::queue_steady_state(p_arr, lambda);
    std::cout << "rho = " << st.rho << "\n";
    std::cout << "q0 = " << st.q0 << "\n";
    std::cout << "q1 = " << st.q1 << "\n";
    for (int t = 1; t <= tmax; ++t)
        std::cout << "f_T(" << t << ") = " << csra::delay_pmf(p_arr, lambda, t) << "\n";
    std::cout << "p_deadline_violation = " << csra::deadline_violation(p_arr, lambda, D) << "\n";
    std::cout << "p_timely = " << csra::timely_prob(p_arr, lambda, D) << "\n";
}

int cmd_analyze(std::optional<double> p_arr, std::optional<double> lambda,
                std::optional<int> D, int tmax, std::optional<int> K, std::optional<int> M,
                std::optional<double> p_act, const std::string& psi_path) {
    std::cout << std::setprecision(10);
    try {
        double lam = 0.0;
        bool have_lambda = false;
        if (!psi_path.empty()) {
            if (!K || !M || !p_act) {
                std::cerr << "error: --psi requires --K, --M and --p-act\n";
                return kExitConfig;
            }
            if (!fs::exists(psi_path)) {
                std::cerr << "error: Psi file not found: " << psi_path << "\n";
                return kExitConfig;
            }
            const csra::PsiMatrix psi = csra::load_psi_csv_file(psi_path, *M);
            if (psi.lap_count() != *K) {
                std::cerr << "error: Psi file has " << psi.lap_count() << " rows, expected K=" << *K
                          << "\n";
                return kExitConfig;
            }
            lam = csra::success_prob(psi, *p_act);
            have_lambda = true;
            std::cout << "lambda = " << lam << "\n";
        } else if (lambda) {
            lam = *lambda;
            have_lambda = true;
        }
        if (p_arr && D) {
            if (!have_lambda) {
                std::cerr << "error: provide --lambda or a Psi file\n";
                return kExitConfig;
            }
            print_queue_analysis(*p_arr, lam, *D, tmax);
        } else if (!have_lambda) {
            std::cerr << "error: nothing to analyze; see `analyze --help`\n";
            return kExitConfig;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}

struct CheckReport {
    int failures = 0;

    void report(const std::string& name, bool pass, const std::string& detail) {
        std::cout << (pass ? "PASS" : "FAIL") << " " << name << ": " << detail << "\n";
        if (!pass) ++failures;
    }
};

int cmd_oracle(std::uint64_t seed, long slots, int instances, long queue_updates,
               std::optional<int> brute_k, std::optional<int> brute_m) {
    CheckReport rep;
    std::cout << std::setprecision(8);

    if (brute_k || brute_m) {
        const int K = brute_k.value_or(2), M = brute_m.value_or(2);
        try {
            const auto best = csra::brute_force_optimal_psi(K, M, 1.0);
            rep.report("brute_force(K=" + std::to_string(K) + ",M=" + std::to_string(M) + ")",
                       true, "lambda_star = " + std::to_string(best.lambda_star));
        } catch (const csra::EnumerationInfeasible& e) {
            std::cout << "SKIP brute_force: " << e.what() << "\n";
        }
        return rep.failures == 0 ? kExitOk : kExitFailure;
    }

    // Collision-channel equivalence on random instances.
    auto inst_rng = csra::make_stream(seed, csra::Stream::Placement);
    std::uniform_int_distribution<int> pick_k(1, 4), pick_m(1, 3);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
        const int K = pick_k(inst_rng), M = pick_m(inst_rng);
        const double p_act = 0.1 + 0.8 * u01(inst_rng);
        csra::PsiMatrix psi(K, M);
        for (int n = 0; n < K; ++n) {
            double sum = 0.0;
            std::vector<double> row(csra::num_configs(M));
            for (auto& x : row) {
                x = u01(inst_rng) + 1e-3;
                sum += x;
            }
            for (csra::ConfigIndex c = 0; c < csra::num_configs(M); ++c)
                psi.at(n, c) = row[c] / sum;
        }
        const double formula = csra::success_prob(psi, p_act);
        auto mc_rng = csra::make_stream(seed + 1000 + static_cast<std::uint64_t>(i),
                                        csra::Stream::Noise);
        const double mc = csra::mc_success_prob(psi, p_act, slots, mc_rng);
        worst = std::max(worst, std::abs(formula - mc));
    }
    {
        std::ostringstream os;
        os << std::setprecision(6) << "max |formula - mc| = " << worst << " over " << instances
           << " instances, " << slots << " slots each (tol 0.01)";
        rep.report("collision_channel_equivalence", worst <= 0.01, os.str());
    }

    // Queueing formulas against the single-queue simulation.
    for (double p_arr : {0.1, 0.2}) {
        for (double lam : {0.4, 0.6}) {
            const int D = 20;
            auto rng = csra::make_stream(seed ^ csra::fnv1a64("queue"), csra::Stream::Arrivals);
            const auto sim = csra::mc_queue_sim(p_arr, lam, D, queue_updates, rng);
            const double pd = csra::deadline_violation(p_arr, lam, D);
            const auto st = csra::queue_steady_state(p_arr, lam);
            const double d_pd = std::abs(sim.p_violation - pd);
            const double d_q0 = std::abs(sim.q0_frac - st.q0);
            const double d_q1 = std::abs(sim.q1_frac - st.q1);
            std::ostringstream os;
            os << std::setprecision(6) << "p_arr=" << p_arr << " lambda=" << lam
               << ": |dP_D|=" << d_pd << " (tol 0.02), |dQ0|=" << d_q0 << " |dQ1|=" << d_q1
               << " (tol 0.01)";
            rep.report("queueing_formulas", d_pd <= 0.02 && d_q0 <= 0.01 && d_q1 <= 0.01,
                       os.str());
        }
    }

    // Brute-force optimizer checks.
    try {
        const auto best = csra::brute_force_optimal_psi(2, 2, 1.0);
        rep.report("brute_force(K=2,M=2,p_act=1)", std::abs(best.lambda_star - 1.0) < 1e-12,
                   "lambda_star = " + std::to_string(best.lambda_star));
        const auto best3 = csra::brute_force_optimal_psi(3, 2, 1.0);
        const double mc = csra::mc_success_prob_seeded(best3.psi, 1.0, slots, seed + 7);
        std::ostringstream os;
        os << std::setprecision(6) << "lambda_star = " << best3.lambda_star << ", mc = " << mc
           << " (tol 0.01)";
        rep.report("brute_force(K=3,M=2,p_act=1) vs monte carlo",
                   std::abs(best3.lambda_star - mc) <= 0.01, os.str());
    } catch (const std::exception& e) {
        rep.report("brute_force", false, e.what());
    }

    std::cout << (rep.failures == 0 ? "all checks passed" : "some checks FAILED") << "\n";
    return rep.failures == 0 ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"csra: simulator and analysis tool for deadline-constrained random access"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto* run_cmd = app.add_subcommand("run", "run one simulation from a config file");
    std::string run_config;
    run_cmd->add_option("config", run_config, "run config file")->required();
    run_cmd->add_option("--seed", opts.seed, "override the config seed");
    run_cmd->add_option("--horizon", opts.horizon, "override the horizon (slots)");
    run_cmd->add_option("--out-dir", opts.out_dir, "output directory (metrics.csv, events.csv)");
    run_cmd->add_flag("--event-log", opts.event_log, "write a per-slot protocol event log");
    run_cmd->add_flag("--save-nets", opts.save_nets, "save DNN checkpoints (dnn policy only)");

    auto* sweep_cmd = app.add_subcommand("sweep", "sweep K, M or p_act over all three policies");
    std::string sweep_config;
    sweep_cmd->add_option("config", sweep_config, "sweep config file")->required();
    sweep_cmd->add_option("--seed", opts.seed, "override the base seed");
    sweep_cmd->add_option("--horizon", opts.horizon, "override the horizon (slots)");
    sweep_cmd->add_option("--out-dir", opts.out_dir, "output directory");
    sweep_cmd->add_option("--workers", opts.workers, "worker threads (default: hardware)");

    auto* analyze_cmd = app.add_subcommand("analyze", "evaluate the closed-form model");
    std::optional<double> an_p_arr, an_lambda, an_p_act;
    std::optional<int> an_d, an_k, an_m;
    int an_tmax = 3;
    std::string an_psi;
    analyze_cmd->add_option("--p-arr", an_p_arr, "arrival probability p_a");
    analyze_cmd->add_option("--lambda", an_lambda, "success probability");
    analyze_cmd->add_option("--D", an_d, "deadline (slots)");
    analyze_cmd->add_option("--tmax", an_tmax, "print f_T(1..tmax)");
    analyze_cmd->add_option("--K", an_k, "LAP count (with --psi)");
    analyze_cmd->add_option("--M", an_m, "channel count (with --psi)");
    analyze_cmd->add_option("--p-act", an_p_act, "activation probability (with --psi)");
    analyze_cmd->add_option("--psi", an_psi, "Psi CSV: one row per LAP, 2^M columns");

    auto* oracle_cmd = app.add_subcommand("oracle", "run Monte-Carlo-vs-formula cross checks");
    std::uint64_t or_seed = 1;
    long or_slots = 1000000;
    int or_instances = 20;
    long or_updates = 200000;
    std::optional<int> or_brute_k, or_brute_m;
    oracle_cmd->add_option("--seed", or_seed, "oracle RNG seed");
    oracle_cmd->add_option("--slots", or_slots, "Monte Carlo slots per instance");
    oracle_cmd->add_option("--instances", or_instances, "random instances to check");
    oracle_cmd->add_option("--queue-updates", or_updates, "updates per queue-sim check");
    oracle_cmd->add_option("--brute-k", or_brute_k, "run only the brute-force check at this K");
    oracle_cmd->add_option("--brute-m", or_brute_m, "run only the brute-force check at this M");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return cmd_run(run_config, opts);
        if (*sweep_cmd) return cmd_sweep(sweep_config, opts);
        if (*analyze_cmd)
            return cmd_analyze(an_p_arr, an_lambda, an_d, an_tmax, an_k, an_m, an_p_act, an_psi);
        if (*oracle_cmd)
            return cmd_oracle(or_seed, or_slots, or_instances, or_updates, or_brute_k, or_brute_m);
    } catch (const csra::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}
