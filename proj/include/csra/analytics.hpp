#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "csra/access_config.hpp"

namespace csra {

struct EnumerationInfeasible : std::domain_error {
    explicit EnumerationInfeasible(const std::string& what) : std::domain_error(what) {}
};

struct InstabilityError : std::domain_error {
    explicit InstabilityError(const std::string& what) : std::domain_error(what) {}
};

// Row-stochastic matrix of per-LAP access-configuration probabilities:
// K rows, 2^M columns. Row n is LAP n's distribution over configurations.
class PsiMatrix {
public:
    PsiMatrix(int K, int M)
        : K_(K), M_(M), cols_(static_cast<std::size_t>(num_configs(M))),
          p_(static_cast<std::size_t>(K) * cols_, 0.0) {
        if (K < 1) throw std::invalid_argument("PsiMatrix: K < 1");
        if (M < 1 || M > 12) throw std::invalid_argument("PsiMatrix: M out of range");
    }

    int lap_count() const { return K_; }
    int channel_count() const { return M_; }
    int config_count() const { return static_cast<int>(cols_); }

    double& at(int n, ConfigIndex i) { return p_[idx(n, i)]; }
    double at(int n, ConfigIndex i) const { return p_[idx(n, i)]; }

    // Row sums must be 1 within tol and entries must be probabilities.
    void validate(double tol = 1e-9) const {
        for (int n = 0; n < K_; ++n) {
            double sum = 0.0;
            for (std::size_t i = 0; i < cols_; ++i) {
                const double v = p_[idx(n, static_cast<ConfigIndex>(i))];
                if (!(v >= 0.0 && v <= 1.0 + tol))
                    throw std::invalid_argument("PsiMatrix: entry out of [0,1] in row " +
                                                std::to_string(n));
                sum += v;
            }
            if (std::abs(sum - 1.0) > tol)
                throw std::invalid_argument("PsiMatrix: row " + std::to_string(n) +
                                            " sums to " + std::to_string(sum));
        }
    }

    // Point mass on one configuration per LAP.
    static PsiMatrix deterministic(int M, const std::vector<ConfigIndex>& assignment) {
        PsiMatrix psi(static_cast<int>(assignment.size()), M);
        for (int n = 0; n < psi.K_; ++n) {
            if (assignment[static_cast<std::size_t>(n)] >= num_configs(M))
                throw std::invalid_argument("PsiMatrix::deterministic: config index out of range");
            psi.at(n, assignment[static_cast<std::size_t>(n)]) = 1.0;
        }
        return psi;
    }

    // Distribution of the random channel hopping baseline: uniform over the
    // M single-channel configurations.
    static PsiMatrix rch(int K, int M) {
        PsiMatrix psi(K, M);
        for (int n = 0; n < K; ++n)
            for (int m = 0; m < M; ++m)
                psi.at(n, ConfigIndex{1} << m) = 1.0 / M;
        return psi;
    }

private:
    std::size_t idx(int n, ConfigIndex i) const {
        if (n < 0 || n >= K_ || i >= cols_) throw std::out_of_range("PsiMatrix::at");
        return static_cast<std::size_t>(n) * cols_ + i;
    }

    int K_;
    int M_;
    std::size_t cols_;
    std::vector<double> p_;
};

namespace detail {

// P(every channel in `subset` ends the slot with exactly one transmitter),
// over independent activation and configuration draws. Dynamic program over
// LAPs; the state is the per-channel transmitter count capped at 2, base-3
// encoded over the channels of `subset`.
inline double all_singletons_prob(const PsiMatrix& psi, double p_act, ConfigIndex subset) {
    const int M = psi.channel_count();
    std::vector<int> channels;
    for (int m = 0; m < M; ++m)
        if ((subset >> m) & 1u) channels.push_back(m);
    const int t = static_cast<int>(channels.size());
    std::size_t states = 1;
    for (int i = 0; i < t; ++i) states *= 3;

    std::vector<double> cur(states, 0.0), next(states, 0.0);
    cur[0] = 1.0;
    const ConfigIndex n_cfg = num_configs(M);
    // Precompute each config's count increment in base-3 state space, with
    // saturation handled during the transition.
    std::vector<std::vector<int>> bits_of(n_cfg);
    for (ConfigIndex c = 0; c < n_cfg; ++c)
        for (int i = 0; i < t; ++i)
            if ((c >> channels[static_cast<std::size_t>(i)]) & 1u)
                bits_of[c].push_back(i);
    std::vector<std::size_t> pow3(static_cast<std::size_t>(t) + 1, 1);
    for (int i = 1; i <= t; ++i) pow3[static_cast<std::size_t>(i)] = pow3[static_cast<std::size_t>(i - 1)] * 3;

    for (int n = 0; n < psi.lap_count(); ++n) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t s = 0; s < states; ++s) {
            const double ps = cur[s];
            if (ps == 0.0) continue;
            next[s] += ps * (1.0 - p_act);  // inactive this slot
            for (ConfigIndex c = 0; c < n_cfg; ++c) {
                const double pc = p_act * psi.at(n, c);
                if (pc == 0.0) continue;
                std::size_t s2 = s;
                for (int i : bits_of[c]) {
                    const int digit = static_cast<int>((s2 / pow3[static_cast<std::size_t>(i)]) % 3);
                    if (digit < 2) s2 += pow3[static_cast<std::size_t>(i)];
                }
                next[s2] += ps * pc;
            }
        }
        cur.swap(next);
    }

    // Target state: digit 1 on every tracked channel.
    std::size_t target = 0;
    for (int i = 0; i < t; ++i) target += pow3[static_cast<std::size_t>(i)];
    return cur[target];
}

}  // namespace detail

// Network-level success probability: the chance that at least one channel
// carries exactly one transmitter, with each LAP independently active with
// probability p_act and drawing its configuration from its Psi row. The
// all-inactive slot never counts as a success. Computed exactly via
// inclusion-exclusion over channel subsets.
inline double success_prob(const PsiMatrix& psi, double p_act) {
    if (psi.lap_count() > 6 || psi.channel_count() > 4)
        throw EnumerationInfeasible("success_prob: enumeration infeasible (guard K<=6, M<=4)");
    if (p_act < 0.0 || p_act > 1.0) throw std::invalid_argument("success_prob: p_act out of [0,1]");
    psi.validate();

    const int M = psi.channel_count();
    double lambda = 0.0;
    for (ConfigIndex subset = 1; subset < num_configs(M); ++subset) {
        const double term = detail::all_singletons_prob(psi, p_act, subset);
        lambda += (config_popcount(subset) % 2 == 1) ? term : -term;
    }
    return lambda;
}

// Same quantity by direct enumeration of active subsets and joint
// configuration matrices. Exponential in K; kept as the secondary oracle.
inline double success_prob_naive(const PsiMatrix& psi, double p_act) {
    const int K = psi.lap_count();
    const int M = psi.channel_count();
    if (K > 3 || M > 4)
        throw EnumerationInfeasible("success_prob_naive: enumeration infeasible (guard K<=3, M<=4)");
    psi.validate();

    const ConfigIndex n_cfg = num_configs(M);
    double lambda = 0.0;
    for (std::uint32_t active = 0; active < (1u << K); ++active) {
        std::vector<int> members;
        for (int n = 0; n < K; ++n)
            if ((active >> n) & 1u) members.push_back(n);
        double weight = 1.0;
        for (int n = 0; n < K; ++n)
            weight *= ((active >> n) & 1u) ? p_act : (1.0 - p_act);
        if (weight == 0.0) continue;
        if (members.empty()) continue;  // delta(empty set) = 0

        // Odometer over the joint configuration choice of the active set.
        std::vector<ConfigIndex> choice(members.size(), 0);
        double inner = 0.0;
        while (true) {
            double prob = 1.0;
            ConfigIndex counts_once = 0, counts_twice = 0;
            for (std::size_t j = 0; j < members.size(); ++j) {
                prob *= psi.at(members[j], choice[j]);
                counts_twice |= counts_once & choice[j];
                counts_once |= choice[j];
            }
            const bool success = (counts_once & ~counts_twice) != 0;
            if (success) inner += prob;
            std::size_t d = 0;
            while (d < choice.size()) {
                if (++choice[d] < n_cfg) break;
                choice[d] = 0;
                ++d;
            }
            if (d == choice.size()) break;
        }
        lambda += weight * inner;
    }
    return lambda;
}

// Per-LAP success probability: LAP n transmits on some channel that ends
// the slot with exactly one transmitter. Direct enumeration, K <= 3.
inline double per_lap_success_prob(const PsiMatrix& psi, double p_act, int lap) {
    const int K = psi.lap_count();
    const int M = psi.channel_count();
    if (K > 3 || M > 4)
        throw EnumerationInfeasible("per_lap_success_prob: enumeration infeasible (guard K<=3, M<=4)");
    const ConfigIndex n_cfg = num_configs(M);

    double out = 0.0;
    for (std::uint32_t active = 0; active < (1u << K); ++active) {
        if (!((active >> lap) & 1u)) continue;
        std::vector<int> members;
        for (int n = 0; n < K; ++n)
            if ((active >> n) & 1u) members.push_back(n);
        double weight = 1.0;
        for (int n = 0; n < K; ++n)
            weight *= ((active >> n) & 1u) ? p_act : (1.0 - p_act);
        if (weight == 0.0) continue;

        std::vector<ConfigIndex> choice(members.size(), 0);
        double inner = 0.0;
        while (true) {
            double prob = 1.0;
            ConfigIndex counts_once = 0, counts_twice = 0, mine = 0;
            for (std::size_t j = 0; j < members.size(); ++j) {
                prob *= psi.at(members[j], choice[j]);
                if (members[j] == lap) mine = choice[j];
                counts_twice |= counts_once & choice[j];
                counts_once |= choice[j];
            }
            if ((mine & counts_once & ~counts_twice) != 0) inner += prob;
            std::size_t d = 0;
            while (d < choice.size()) {
                if (++choice[d] < n_cfg) break;
                choice[d] = 0;
                ++d;
            }
            if (d == choice.size()) break;
        }
        out += weight * inner;
    }
    return out;
}

// Steady state of the per-LAP queue: Bernoulli(p_arr) arrivals, per-slot
// HoL service success lambda. rho = p_arr(1-lambda) / (lambda(1-p_arr));
// Q_j = rho^(j-1) Q_1 for j >= 1.
struct QueueSteadyState {
    double rho = 0.0;
    double q0 = 1.0;
    double q1 = 0.0;

    double q_at(long j) const {
        if (j < 0) throw std::invalid_argument("QueueSteadyState::q_at: j < 0");
        if (j == 0) return q0;
        return q1 * std::pow(rho, static_cast<double>(j - 1));
    }
};

inline QueueSteadyState queue_steady_state(double p_arr, double lambda) {
    if (!(lambda > 0.0 && lambda <= 1.0))
        throw std::invalid_argument("queue_steady_state: lambda must be in (0,1]");
    if (p_arr < 0.0 || p_arr > 1.0)
        throw std::invalid_argument("queue_steady_state: p_arr out of [0,1]");
    QueueSteadyState st;
    if (p_arr == 0.0) return st;  // empty queue with probability 1

    const double r = p_arr * (1.0 - lambda);
    const double s = lambda * (1.0 - p_arr);
    if (s <= 0.0 || r / s >= 1.0)
        throw InstabilityError("queue_steady_state: rho >= 1 (unstable queue)");
    st.rho = r / s;
    st.q1 = p_arr * (1.0 - st.rho) / lambda;
    st.q0 = lambda * (1.0 - p_arr) / p_arr * st.q1;
    return st;
}

// Geometric delay law of an update through the queue above. The underlying
// derivation approximates the queue-position mixture by a single geometric,
// so agreement with simulation is approximate by construction.
inline double delay_pmf(double p_arr, double lambda, long t) {
    if (t < 1) throw std::invalid_argument("delay_pmf: t < 1");
    const QueueSteadyState st = queue_steady_state(p_arr, lambda);
    const double g = lambda * (1.0 - st.rho);
    return g * std::pow(1.0 - g, static_cast<double>(t - 1));
}

inline double deadline_violation(double p_arr, double lambda, int D) {
    if (D < 1) throw std::invalid_argument("deadline_violation: D < 1");
    const QueueSteadyState st = queue_steady_state(p_arr, lambda);
    const double g = lambda * (1.0 - st.rho);
    return std::pow(1.0 - g, static_cast<double>(D));
}

inline double timely_prob(double p_arr, double lambda, int D) {
    return 1.0 - deadline_violation(p_arr, lambda, D);
}

struct BruteForceResult {
    PsiMatrix psi;
    double lambda_star = 0.0;
};

namespace detail {

// All length-`parts` vectors of non-negative ints summing to `total`.
inline void compositions(int total, int parts, std::vector<int>& cur,
                         std::vector<std::vector<int>>& out) {
    if (parts == 1) {
        cur.push_back(total);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int k = 0; k <= total; ++k) {
        cur.push_back(k);
        compositions(total - k, parts - 1, cur, out);
        cur.pop_back();
    }
}

}  // namespace detail

// Exhaustive search for a success-probability maximizer (equivalently a
// deadline-violation minimizer, which is monotone in lambda). Always covers
// all deterministic per-LAP assignments; grid_resolution > 0 additionally
// sweeps per-LAP simplex grids with that denominator. Ties on lambda are
// broken toward the candidate with the largest total per-LAP success, so
// among equally good schedules the one serving the most LAPs wins.
inline BruteForceResult brute_force_optimal_psi(int K, int M, double p_act,
                                                int grid_resolution = 0) {
    if (K > 3 || M > 2)
        throw EnumerationInfeasible("brute_force_optimal_psi: enumeration infeasible (guard K<=3, M<=2)");
    if (K < 1 || M < 1) throw std::invalid_argument("brute_force_optimal_psi: K, M >= 1");

    const ConfigIndex n_cfg = num_configs(M);
    std::vector<std::vector<double>> rows;  // candidate per-LAP distributions
    for (ConfigIndex c = 0; c < n_cfg; ++c) {
        std::vector<double> row(n_cfg, 0.0);
        row[c] = 1.0;
        rows.push_back(std::move(row));
    }
    if (grid_resolution > 0) {
        std::vector<std::vector<int>> comps;
        std::vector<int> cur;
        detail::compositions(grid_resolution, static_cast<int>(n_cfg), cur, comps);
        for (const auto& comp : comps) {
            std::vector<double> row(n_cfg);
            bool deterministic = false;
            for (std::size_t i = 0; i < row.size(); ++i) {
                row[i] = static_cast<double>(comp[i]) / grid_resolution;
                if (comp[i] == grid_resolution) deterministic = true;
            }
            if (!deterministic) rows.push_back(std::move(row));
        }
    }

    double candidates = 1.0;
    for (int n = 0; n < K; ++n) candidates *= static_cast<double>(rows.size());
    if (candidates > 2e6)
        throw EnumerationInfeasible("brute_force_optimal_psi: candidate grid too large");

    const double tol = 1e-12;
    BruteForceResult best{PsiMatrix(K, M), -1.0};
    double best_fairness = -1.0;

    std::vector<std::size_t> choice(static_cast<std::size_t>(K), 0);
    while (true) {
        PsiMatrix psi(K, M);
        for (int n = 0; n < K; ++n)
            for (ConfigIndex c = 0; c < n_cfg; ++c)
                psi.at(n, c) = rows[choice[static_cast<std::size_t>(n)]][c];
        const double lambda = success_prob(psi, p_act);
        if (lambda > best.lambda_star + tol) {
            double fairness = 0.0;
            for (int n = 0; n < K; ++n) fairness += per_lap_success_prob(psi, p_act, n);
            best = BruteForceResult{psi, lambda};
            best_fairness = fairness;
        } else if (lambda > best.lambda_star - tol) {
            double fairness = 0.0;
            for (int n = 0; n < K; ++n) fairness += per_lap_success_prob(psi, p_act, n);
            if (fairness > best_fairness + tol) {
                best = BruteForceResult{psi, std::max(lambda, best.lambda_star)};
                best_fairness = fairness;
            }
        }
        std::size_t d = 0;
        while (d < choice.size()) {
            if (++choice[d] < rows.size()) break;
            choice[d] = 0;
            ++d;
        }
        if (d == choice.size()) break;
    }
    return best;
}

// Psi CSV: one row per LAP, 2^M comma-separated probabilities.
inline PsiMatrix load_psi_csv(std::istream& in, int M, const std::string& origin = "<psi>") {
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        bool blank = true;
        for (char ch : line)
            if (!std::isspace(static_cast<unsigned char>(ch))) { blank = false; break; }
        if (blank) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                            ": cannot parse `" + cell + "`");
            }
        }
        if (row.size() != static_cast<std::size_t>(num_configs(M)))
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": expected " +
                                        std::to_string(num_configs(M)) + " columns");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument(origin + ": empty Psi file");
    PsiMatrix psi(static_cast<int>(rows.size()), M);
    for (int n = 0; n < psi.lap_count(); ++n)
        for (ConfigIndex c = 0; c < num_configs(M); ++c)
            psi.at(n, c) = rows[static_cast<std::size_t>(n)][c];
    psi.validate();
    return psi;
}

inline PsiMatrix load_psi_csv_file(const std::string& path, int M) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open Psi file: " + path);
    return load_psi_csv(in, M, path);
}

}  // namespace csra
