#pragma once

#include <deque>
#include <random>
#include <stdexcept>
#include <vector>

#include "csra/analytics.hpp"
#include "csra/engine.hpp"
#include "csra/rng.hpp"

namespace csra {

// Empirical per-slot success frequency of the collision channel: every LAP
// is independently active with probability p_act and draws its access
// configuration from its Psi row; the slot counts as a success when some
// channel carries exactly one transmitter. Uses the simulator's collision
// resolution, so it is an implementation-independent check of the
// closed-form success probability.
inline double mc_success_prob(const PsiMatrix& psi, double p_act, long slots,
                              std::mt19937_64& rng) {
    if (slots < 1) throw std::invalid_argument("mc_success_prob: slots < 1");
    psi.validate();
    const int K = psi.lap_count();
    const int M = psi.channel_count();
    const int n_cfg = psi.config_count();

    // Per-LAP CDF over configurations for inverse sampling.
    std::vector<std::vector<double>> cdf(static_cast<std::size_t>(K));
    for (int n = 0; n < K; ++n) {
        auto& row = cdf[static_cast<std::size_t>(n)];
        row.resize(static_cast<std::size_t>(n_cfg));
        double acc = 0.0;
        for (int c = 0; c < n_cfg; ++c) {
            acc += psi.at(n, static_cast<ConfigIndex>(c));
            row[static_cast<std::size_t>(c)] = acc;
        }
        row.back() = 1.0;
    }

    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<Transmission> txs;
    long successes = 0;
    for (long t = 0; t < slots; ++t) {
        txs.clear();
        for (int n = 0; n < K; ++n) {
            if (u01(rng) >= p_act) continue;
            const double u = u01(rng);
            const auto& row = cdf[static_cast<std::size_t>(n)];
            int c = 0;
            while (row[static_cast<std::size_t>(c)] <= u && c + 1 < n_cfg) ++c;
            txs.push_back(Transmission{n, static_cast<ConfigIndex>(c)});
        }
        if (cap_resolve(txs, M).network_success) ++successes;
    }
    return static_cast<double>(successes) / static_cast<double>(slots);
}

// Single-queue simulation: Bernoulli(p_arr) arrivals, per-slot head-of-line
// service success lambda. Service precedes the arrival within a slot, so an
// update's delay is at least one slot. Runs until `target_updates` measured
// deliveries; returns the empirical deadline-violation fraction and the
// post-slot queue occupancy frequencies for sizes 0 and 1.
struct QueueSimResult {
    double p_violation = 0.0;
    double q0_frac = 0.0;
    double q1_frac = 0.0;
    long delivered = 0;
};

inline QueueSimResult mc_queue_sim(double p_arr, double lambda, int D, long target_updates,
                                   std::mt19937_64& rng, long warmup_slots = 10000) {
    if (!(lambda > 0.0 && lambda <= 1.0))
        throw std::invalid_argument("mc_queue_sim: lambda must be in (0,1]");
    if (p_arr <= 0.0 || p_arr > 1.0)
        throw std::invalid_argument("mc_queue_sim: p_arr must be in (0,1]");
    if (D < 1 || target_updates < 1) throw std::invalid_argument("mc_queue_sim: bad arguments");

    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::deque<long> queue;  // arrival slots
    QueueSimResult res;
    long violations = 0;
    long slots_observed = 0, q0 = 0, q1 = 0;

    for (long t = 0; res.delivered < target_updates; ++t) {
        if (!queue.empty() && u01(rng) < lambda) {
            const long arrival = queue.front();
            queue.pop_front();
            if (arrival >= warmup_slots) {
                ++res.delivered;
                if (t - arrival > D) ++violations;
            }
        }
        if (u01(rng) < p_arr) queue.push_back(t);
        if (t >= warmup_slots) {
            ++slots_observed;
            if (queue.empty()) ++q0;
            else if (queue.size() == 1) ++q1;
        }
    }
    res.p_violation = static_cast<double>(violations) / static_cast<double>(res.delivered);
    res.q0_frac = static_cast<double>(q0) / static_cast<double>(slots_observed);
    res.q1_frac = static_cast<double>(q1) / static_cast<double>(slots_observed);
    return res;
}

// Monte Carlo evaluation of a brute-force candidate: convenience wrapper
// used to cross-check the enumerated optimum with an independent estimate.
inline double mc_success_prob_seeded(const PsiMatrix& psi, double p_act, long slots,
                                     std::uint64_t seed) {
    auto rng = make_stream(seed, Stream::Exploration);
    return mc_success_prob(psi, p_act, slots, rng);
}

}  // namespace csra
