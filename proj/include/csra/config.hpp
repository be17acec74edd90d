#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "csra/access_config.hpp"

namespace csra {

enum class PolicyKind { Dnn, Mab, Rch, Fixed };

inline std::string to_string(PolicyKind p) {
    switch (p) {
        case PolicyKind::Dnn: return "dnn";
        case PolicyKind::Mab: return "mab";
        case PolicyKind::Rch: return "rch";
        case PolicyKind::Fixed: return "fixed";
    }
    return "?";
}

// Full parameterization of one simulation run. Field names double as the
// keys of the flat `key = value` config file format.
struct SimConfig {
    int K = 10;               // subnetworks
    int M = 3;                // channels
    double p_act = 0.4;       // per-slot activation probability of a normal-state LAP
    double p_arr = 0.1;       // per-slot update arrival probability while in alarm state
    int D = 20;               // deadline, slots
    double slot_ms = 3.0;     // slot duration
    double area_w = 20.0;     // deployment rectangle, meters
    double area_h = 20.0;
    double r_sub = 2.0;       // subnetwork radius, meters
    double v = 2.0;           // subnetwork speed, m/s
    double snr_db = 133.0;    // pilot/CS power scaling vs. unit noise, dB
    int q = 32;               // hidden layer width
    int S = 0;                // replay capacity; 0 = default 10*batch
    int batch = 0;            // mini-batch size; 0 = default 2^M * 30
    std::uint64_t seed = 1;
    PolicyKind policy = PolicyKind::Rch;
    ConfigIndex fixed_config = 0;  // used by policy = fixed only
    double eps_start = 1.0;
    double eps_floor = 0.1;
    double eps_step = 0.005;
    double lr_start = 0.01;
    double lr_decay = 0.015;
    // Propagation model.
    double alpha = 2.2;
    double beta = 32.4;
    double gamma = 2.0;
    double sigma_s = 4.0;     // shadowing std dev, dB
    double d_corr = 10.0;     // shadowing decorrelation distance, m
    double fc_ghz = 6.0;      // carrier frequency
    double min_sep = 1.5;     // minimum subnetwork separation, m
    long horizon = 200000;    // slots

    double snr_linear() const { return std::pow(10.0, snr_db / 10.0); }
    double slot_seconds() const { return slot_ms / 1000.0; }
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Checks invariants and fills the defaults that depend on other keys.
// Returns the list of violated constraints; empty means cfg is usable.
inline std::vector<std::string> validate_config(SimConfig& cfg) {
    std::vector<std::string> errors;
    auto bad = [&errors](const std::string& msg) { errors.push_back(msg); };

    if (cfg.K < 1) bad("K < 1");
    if (cfg.M < 1) bad("M < 1");
    if (cfg.M > 12) bad("M > 12 (2^M action space too large)");
    if (cfg.p_act < 0.0 || cfg.p_act > 1.0) bad("p_act \xE2\x88\x89 [0,1]");
    if (cfg.p_arr < 0.0 || cfg.p_arr > 1.0) bad("p_arr \xE2\x88\x89 [0,1]");
    if (cfg.D < 1) bad("D < 1");
    if (cfg.slot_ms <= 0.0) bad("slot_ms <= 0");
    if (cfg.area_w <= 0.0 || cfg.area_h <= 0.0) bad("area dimensions <= 0");
    if (cfg.r_sub < 0.0) bad("r_sub < 0");
    if (cfg.v < 0.0) bad("v < 0");
    if (cfg.q < 1) bad("q < 1");
    if (cfg.eps_start < 0.0 || cfg.eps_start > 1.0) bad("eps_start \xE2\x88\x89 [0,1]");
    if (cfg.eps_floor < 0.0 || cfg.eps_floor > cfg.eps_start) bad("eps_floor \xE2\x88\x89 [0,eps_start]");
    if (cfg.eps_step < 0.0) bad("eps_step < 0");
    if (cfg.lr_start <= 0.0) bad("lr_start <= 0");
    if (cfg.lr_decay < 0.0 || cfg.lr_decay >= 1.0) bad("lr_decay \xE2\x88\x89 [0,1)");
    if (cfg.sigma_s < 0.0) bad("sigma_s < 0");
    if (cfg.d_corr <= 0.0) bad("d_corr <= 0");
    if (cfg.fc_ghz <= 0.0) bad("fc_ghz <= 0");
    if (cfg.min_sep < 0.0) bad("min_sep < 0");
    if (cfg.horizon < 1) bad("horizon < 1");
    if (cfg.M >= 1 && cfg.M <= 12 && cfg.fixed_config >= num_configs(cfg.M))
        bad("fixed_config >= 2^M");

    if (cfg.M >= 1 && cfg.M <= 12) {
        if (cfg.batch == 0) cfg.batch = static_cast<int>(num_configs(cfg.M)) * 30;
        if (cfg.batch < 1) bad("batch < 1");
        if (cfg.S == 0) cfg.S = 10 * cfg.batch;
        if (cfg.S < 1) bad("S < 1");
        if (cfg.batch > 0 && cfg.S > 0 && cfg.batch > cfg.S) bad("batch > S");
    }
    return errors;
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// `key = value` lines; '#' starts a comment; blank lines ignored.
inline std::map<std::string, std::string> parse_kv_lines(std::istream& in,
                                                         const std::string& origin) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    std::vector<std::string> errors;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back(origin + ":" + std::to_string(lineno) + ": expected `key = value`");
            continue;
        }
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty()) {
            errors.push_back(origin + ":" + std::to_string(lineno) + ": empty key");
            continue;
        }
        if (kv.count(key))
            errors.push_back(origin + ":" + std::to_string(lineno) + ": duplicate key `" + key + "`");
        kv[key] = val;
    }
    if (!errors.empty()) {
        std::string msg;
        for (const auto& e : errors) msg += e + "\n";
        throw ConfigError(msg);
    }
    return kv;
}

template <typename T>
inline T parse_number(const std::string& key, const std::string& val) {
    std::istringstream iss(val);
    T out{};
    iss >> out;
    std::string rest;
    if (iss.fail() || (iss >> rest && !rest.empty()))
        throw ConfigError("key `" + key + "`: cannot parse `" + val + "`");
    return out;
}

}  // namespace detail

// Applies one config key to cfg. Returns false when the key is unknown.
inline bool apply_config_key(SimConfig& cfg, const std::string& key, const std::string& val) {
    using detail::parse_number;
    if (key == "K") cfg.K = parse_number<int>(key, val);
    else if (key == "M") cfg.M = parse_number<int>(key, val);
    else if (key == "p_act") cfg.p_act = parse_number<double>(key, val);
    else if (key == "p_arr") cfg.p_arr = parse_number<double>(key, val);
    else if (key == "D") cfg.D = parse_number<int>(key, val);
    else if (key == "slot_ms") cfg.slot_ms = parse_number<double>(key, val);
    else if (key == "area") {
        std::istringstream iss(val);
        double w = 0.0, h = 0.0;
        if (!(iss >> w)) throw ConfigError("key `area`: cannot parse `" + val + "`");
        if (!(iss >> h)) h = w;  // one number means a square
        std::string rest;
        if (iss >> rest && !rest.empty()) throw ConfigError("key `area`: trailing junk in `" + val + "`");
        cfg.area_w = w;
        cfg.area_h = h;
    }
    else if (key == "r_sub") cfg.r_sub = parse_number<double>(key, val);
    else if (key == "v") cfg.v = parse_number<double>(key, val);
    else if (key == "snr_db") cfg.snr_db = parse_number<double>(key, val);
    else if (key == "q") cfg.q = parse_number<int>(key, val);
    else if (key == "S") cfg.S = parse_number<int>(key, val);
    else if (key == "batch") cfg.batch = parse_number<int>(key, val);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, val);
    else if (key == "policy") {
        if (val == "dnn") cfg.policy = PolicyKind::Dnn;
        else if (val == "mab") cfg.policy = PolicyKind::Mab;
        else if (val == "rch") cfg.policy = PolicyKind::Rch;
        else if (val == "fixed") cfg.policy = PolicyKind::Fixed;
        else throw ConfigError("key `policy`: expected dnn|mab|rch|fixed, got `" + val + "`");
    }
    else if (key == "fixed_config") cfg.fixed_config = parse_number<ConfigIndex>(key, val);
    else if (key == "eps_start") cfg.eps_start = parse_number<double>(key, val);
    else if (key == "eps_floor") cfg.eps_floor = parse_number<double>(key, val);
    else if (key == "eps_step") cfg.eps_step = parse_number<double>(key, val);
    else if (key == "lr_start") cfg.lr_start = parse_number<double>(key, val);
    else if (key == "lr_decay") cfg.lr_decay = parse_number<double>(key, val);
    else if (key == "alpha") cfg.alpha = parse_number<double>(key, val);
    else if (key == "beta") cfg.beta = parse_number<double>(key, val);
    else if (key == "gamma") cfg.gamma = parse_number<double>(key, val);
    else if (key == "sigma_s") cfg.sigma_s = parse_number<double>(key, val);
    else if (key == "d_corr") cfg.d_corr = parse_number<double>(key, val);
    else if (key == "fc_ghz") cfg.fc_ghz = parse_number<double>(key, val);
    else if (key == "min_sep") cfg.min_sep = parse_number<double>(key, val);
    else if (key == "horizon") cfg.horizon = parse_number<long>(key, val);
    else return false;
    return true;
}

// Parses a run config. Unknown keys are an error, never a silent default.
inline SimConfig parse_config(std::istream& in, const std::string& origin = "<config>") {
    auto kv = detail::parse_kv_lines(in, origin);
    SimConfig cfg;
    std::vector<std::string> unknown;
    for (const auto& [key, val] : kv)
        if (!apply_config_key(cfg, key, val)) unknown.push_back(key);
    if (!unknown.empty()) {
        std::string msg = origin + ": unknown key(s):";
        for (const auto& k : unknown) msg += " `" + k + "`";
        throw ConfigError(msg);
    }
    return cfg;
}

inline SimConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in, path);
}

}  // namespace csra
