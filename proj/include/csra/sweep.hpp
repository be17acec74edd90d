#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "csra/config.hpp"
#include "csra/engine.hpp"
#include "csra/rng.hpp"

namespace csra {

// Sweep over one key of the run config, every point run for all three
// access policies with `replications` independently seeded repetitions.
struct SweepSpec {
    SimConfig base;
    std::string key;  // K | M | p_act
    std::vector<double> values;
    int replications = 1;
};

inline SweepSpec parse_sweep(std::istream& in, const std::string& origin = "<sweep>") {
    auto kv = detail::parse_kv_lines(in, origin);
    SweepSpec spec;
    bool have_key = false, have_values = false;
    std::vector<std::string> unknown;
    for (const auto& [key, val] : kv) {
        if (key == "sweep_key") {
            if (val != "K" && val != "M" && val != "p_act")
                throw ConfigError(origin + ": sweep_key must be K, M or p_act");
            spec.key = val;
            have_key = true;
        } else if (key == "sweep_values") {
            std::istringstream iss(val);
            double v = 0.0;
            while (iss >> v) spec.values.push_back(v);
            if (!iss.eof()) throw ConfigError(origin + ": cannot parse sweep_values `" + val + "`");
            have_values = true;
        } else if (key == "replications") {
            spec.replications = detail::parse_number<int>(key, val);
        } else if (!apply_config_key(spec.base, key, val)) {
            unknown.push_back(key);
        }
    }
    if (!unknown.empty()) {
        std::string msg = origin + ": unknown key(s):";
        for (const auto& k : unknown) msg += " `" + k + "`";
        throw ConfigError(msg);
    }
    if (!have_key) throw ConfigError(origin + ": missing sweep_key");
    if (!have_values || spec.values.empty()) throw ConfigError(origin + ": missing sweep_values");
    if (spec.replications < 1) throw ConfigError(origin + ": replications < 1");
    return spec;
}

inline SweepSpec parse_sweep_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open sweep file: " + path);
    return parse_sweep(in, path);
}

inline std::string format_swept_value(const std::string& key, double value) {
    if (key == "K" || key == "M") return std::to_string(static_cast<long>(value));
    std::ostringstream os;
    os << std::setprecision(17) << value;
    return os.str();
}

// Replication seeds: statistically independent across points but
// individually reproducible from the base seed.
inline std::uint64_t derive_sweep_seed(std::uint64_t base_seed, const std::string& key,
                                       double value, PolicyKind policy, int rep) {
    const std::string tag = key + "=" + format_swept_value(key, value) +
                            ";policy=" + to_string(policy) + ";rep=" + std::to_string(rep);
    return base_seed ^ fnv1a64(tag);
}

inline SimConfig config_for_point(const SweepSpec& spec, double value, PolicyKind policy,
                                  int rep) {
    SimConfig cfg = spec.base;
    if (spec.key == "K") cfg.K = static_cast<int>(value);
    else if (spec.key == "M") cfg.M = static_cast<int>(value);
    else cfg.p_act = value;
    cfg.policy = policy;
    cfg.seed = derive_sweep_seed(spec.base.seed, spec.key, value, policy, rep);
    return cfg;
}

struct SweepRow {
    double value = 0.0;
    PolicyKind policy = PolicyKind::Rch;
    int rep = 0;
    SimConfig cfg;
    RunMetrics metrics;
    bool failed = false;
    std::string error;
};

struct SweepError : std::runtime_error {
    explicit SweepError(const std::string& what) : std::runtime_error(what) {}
};

inline std::string sweep_raw_header() {
    return "sweep_key,value,rep," + metrics_csv_header();
}

inline std::string sweep_raw_row(const SweepSpec& spec, const SweepRow& row) {
    std::ostringstream os;
    os << spec.key << ',' << format_swept_value(spec.key, row.value) << ',' << row.rep << ','
       << metrics_csv_row(row.cfg, row.metrics);
    return os.str();
}

struct AggregatePoint {
    double value = 0.0;
    PolicyKind policy = PolicyKind::Rch;
    int n = 0;
    double p_timely_mean = 0.0, p_timely_ci95 = 0.0;
    double mean_delay_mean = 0.0, mean_delay_ci95 = 0.0;
    double collision_rate_mean = 0.0, collision_rate_ci95 = 0.0;
};

namespace detail {

inline void mean_ci(const std::vector<double>& xs, double& mean, double& ci95) {
    const auto n = static_cast<double>(xs.size());
    mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    if (xs.size() < 2) {
        ci95 = 0.0;
        return;
    }
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    ci95 = 1.96 * sd / std::sqrt(n);
}

}  // namespace detail

// Sample mean and normal-approximation 95% interval per (value, policy).
inline std::vector<AggregatePoint> aggregate_sweep(const SweepSpec& spec,
                                                   const std::vector<SweepRow>& rows) {
    std::vector<AggregatePoint> out;
    for (double value : spec.values) {
        for (PolicyKind policy : {PolicyKind::Dnn, PolicyKind::Mab, PolicyKind::Rch}) {
            std::vector<double> pt, md, cr;
            for (const auto& row : rows) {
                if (row.failed || row.policy != policy || row.value != value) continue;
                pt.push_back(row.metrics.p_timely);
                md.push_back(row.metrics.mean_delay);
                cr.push_back(row.metrics.collision_rate);
            }
            if (pt.empty()) continue;
            AggregatePoint agg;
            agg.value = value;
            agg.policy = policy;
            agg.n = static_cast<int>(pt.size());
            detail::mean_ci(pt, agg.p_timely_mean, agg.p_timely_ci95);
            detail::mean_ci(md, agg.mean_delay_mean, agg.mean_delay_ci95);
            detail::mean_ci(cr, agg.collision_rate_mean, agg.collision_rate_ci95);
            out.push_back(agg);
        }
    }
    return out;
}

inline std::string sweep_agg_header() {
    return "sweep_key,value,policy,n,p_timely_mean,p_timely_ci95,mean_delay_mean,"
           "mean_delay_ci95,collision_rate_mean,collision_rate_ci95";
}

inline std::string sweep_agg_row(const SweepSpec& spec, const AggregatePoint& a) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << spec.key << ',' << format_swept_value(spec.key, a.value) << ',' << to_string(a.policy)
       << ',' << a.n << ',' << a.p_timely_mean << ',' << a.p_timely_ci95 << ','
       << a.mean_delay_mean << ',' << a.mean_delay_ci95 << ',' << a.collision_rate_mean << ','
       << a.collision_rate_ci95;
    return os.str();
}

// Runs every (value, policy, replication) point on a small worker pool.
// Each completed point is persisted to its own file first, so a late
// failure cannot destroy finished work; the coordinator merges the rows
// into raw and aggregated CSVs and removes the per-point files on success.
// On any point failure an error manifest is written and SweepError thrown.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, int workers,
                                       const std::string& out_dir,
                                       std::ostream* progress = nullptr) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    std::vector<SweepRow> rows;
    for (double value : spec.values)
        for (PolicyKind policy : {PolicyKind::Dnn, PolicyKind::Mab, PolicyKind::Rch})
            for (int rep = 0; rep < spec.replications; ++rep) {
                SweepRow row;
                row.value = value;
                row.policy = policy;
                row.rep = rep;
                rows.push_back(row);
            }

    std::atomic<std::size_t> next{0};
    std::mutex io_mutex;
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= rows.size()) return;
            SweepRow& row = rows[i];
            try {
                row.cfg = config_for_point(spec, row.value, row.policy, row.rep);
                Engine engine(row.cfg);
                row.cfg = engine.config();  // defaults filled in
                row.metrics = engine.run();
                std::ofstream point(fs::path(out_dir) /
                                    ("point_" + std::to_string(i) + ".csv"));
                point << "# csra-sweep-raw-v1\n" << sweep_raw_header() << '\n'
                      << sweep_raw_row(spec, row) << '\n';
            } catch (const std::exception& e) {
                row.failed = true;
                row.error = e.what();
            }
            if (progress) {
                std::lock_guard<std::mutex> lock(io_mutex);
                *progress << "point " << (i + 1) << "/" << rows.size() << " "
                          << spec.key << "=" << format_swept_value(spec.key, row.value)
                          << " policy=" << to_string(row.policy) << " rep=" << row.rep
                          << (row.failed ? " FAILED" : "") << "\n";
            }
        }
    };

    const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(rows.size())));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    std::vector<std::string> failures;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].failed)
            failures.push_back("point " + std::to_string(i) + " (" + spec.key + "=" +
                               format_swept_value(spec.key, rows[i].value) + ", policy=" +
                               to_string(rows[i].policy) + ", rep=" +
                               std::to_string(rows[i].rep) + "): " + rows[i].error);

    {
        std::ofstream raw(fs::path(out_dir) / "raw.csv");
        raw << "# csra-sweep-raw-v1\n" << sweep_raw_header() << '\n';
        for (const auto& row : rows)
            if (!row.failed) raw << sweep_raw_row(spec, row) << '\n';
    }
    {
        std::ofstream agg(fs::path(out_dir) / "aggregated.csv");
        agg << "# csra-sweep-agg-v1\n" << sweep_agg_header() << '\n';
        for (const auto& a : aggregate_sweep(spec, rows)) agg << sweep_agg_row(spec, a) << '\n';
    }

    if (!failures.empty()) {
        std::ofstream manifest(fs::path(out_dir) / "error_manifest.txt");
        for (const auto& f : failures) manifest << f << '\n';
        throw SweepError("sweep: " + std::to_string(failures.size()) +
                         " point(s) failed; partial results kept in " + out_dir);
    }
    for (std::size_t i = 0; i < rows.size(); ++i)
        fs::remove(fs::path(out_dir) / ("point_" + std::to_string(i) + ".csv"));
    return rows;
}

}  // namespace csra
