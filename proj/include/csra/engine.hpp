#pragma once

#include <cassert>
#include <cmath>
#include <functional>
#include <deque>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "csra/access_config.hpp"
#include "csra/channel.hpp"
#include "csra/config.hpp"
#include "csra/mobility.hpp"
#include "csra/policy.hpp"
#include "csra/rng.hpp"

namespace csra {

// ---------------------------------------------------------------------------
// Collision resolution

struct Transmission {
    int lap = 0;
    ConfigIndex config = 0;
};

struct SlotOutcome {
    std::vector<int> channel_count;      // transmitters per channel
    std::vector<std::uint8_t> success;   // parallel to the transmission list
    bool network_success = false;        // some channel carried exactly one transmitter
    int collided_channels = 0;           // channels with two or more transmitters
};

// A transmission succeeds iff at least one of its channels carried exactly
// one transmitter this slot. Collisions destroy every copy on the channel.
inline SlotOutcome cap_resolve(const std::vector<Transmission>& txs, int M) {
    SlotOutcome out;
    out.channel_count.assign(static_cast<std::size_t>(M), 0);
    for (const auto& tx : txs) {
        if (tx.config >= num_configs(M))
            throw std::invalid_argument("cap_resolve: config index out of range for M");
        for (int m = 0; m < M; ++m)
            if ((tx.config >> m) & 1u) ++out.channel_count[static_cast<std::size_t>(m)];
    }
    for (int m = 0; m < M; ++m) {
        if (out.channel_count[static_cast<std::size_t>(m)] == 1) out.network_success = true;
        if (out.channel_count[static_cast<std::size_t>(m)] >= 2) ++out.collided_channels;
    }
    out.success.resize(txs.size(), 0);
    for (std::size_t i = 0; i < txs.size(); ++i) {
        for (int m = 0; m < M; ++m) {
            if (((txs[i].config >> m) & 1u) && out.channel_count[static_cast<std::size_t>(m)] == 1) {
                out.success[i] = 1;
                break;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Event log

// One CSV row per protocol event. `channels` is the access mask as an
// M-character bit string, channel 1 first; filled for tx/ack rows only.
class EventLogger {
public:
    explicit EventLogger(std::ostream& out) : out_(out) {
        out_ << "# csra-events-v1\n";
        out_ << "slot,lap_id,event,config_index,channels\n";
    }

    void log(long slot, int lap, const char* event) {
        out_ << slot << ',' << lap << ',' << event << ",,\n";
    }

    void log_tx(long slot, int lap, const char* event, ConfigIndex config, int M) {
        out_ << slot << ',' << lap << ',' << event << ',' << config << ',';
        for (int m = 0; m < M; ++m) out_ << (((config >> m) & 1u) ? '1' : '0');
        out_ << '\n';
    }

private:
    std::ostream& out_;
};

// ---------------------------------------------------------------------------
// Metrics

struct RunMetrics {
    long horizon = 0;
    long warmup_slots = 0;

    // Whole-run counters; these satisfy the conservation identity
    // generated_total == delivered_total + dropped_deadline_total
    //                    + dropped_overflow_total + queued_at_end.
    long generated_total = 0;
    long delivered_total = 0;
    long dropped_deadline_total = 0;
    long dropped_overflow_total = 0;
    long queued_at_end = 0;

    // Measurement window: updates generated at or after warmup_slots.
    long generated = 0;
    long delivered_timely = 0;
    long dropped_deadline = 0;
    long dropped_overflow = 0;
    std::vector<long> delay_hist;  // delay (slots) -> deliveries, length D+1

    double p_timely = 0.0;
    double mean_delay = 0.0;
    double collision_rate = 0.0;  // collided channels per slot

    long events_closed = 0;   // alarm events the agent participated in
    long stale_closures = 0;  // updates expired before any transmission attempt
    long mobility_stalls = 0;
    long collided_channel_slots = 0;
    std::vector<signed char> reward_trace;  // rewards in event-closure order
};

inline std::string metrics_csv_header() {
    return "method,K,M,p_act,p_arr,D,seed,horizon,p_timely,mean_delay,collision_rate";
}

inline std::string metrics_csv_row(const SimConfig& cfg, const RunMetrics& m) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << to_string(cfg.policy) << ',' << cfg.K << ',' << cfg.M << ',' << cfg.p_act << ','
       << cfg.p_arr << ',' << cfg.D << ',' << cfg.seed << ',' << m.horizon << ','
       << m.p_timely << ',' << m.mean_delay << ',' << m.collision_rate;
    return os.str();
}

// ---------------------------------------------------------------------------
// Engine

// Slotted-time simulation of K LAPs contending for M channels under one CAP.
//
// Slot phases, in order:
//   1. mobility step
//   2. CS delivery for pilots sent in the previous slot
//   3. activation draws (normal LAPs) and arrival draws (alarm LAPs)
//   4. pilot aggregation and CS broadcast for newly opened events
//   5. transmission attempts of contending LAPs
//   6. collision resolution and ACKs
//   7. deadline expiry
//
// An alarm event is the delivery episode of one head-of-line update: pilot,
// CS, then transmit attempts until ACK or deadline. The CS observation and
// the fading draw are acquired at event start and held for the event.
class Engine {
public:
    static constexpr int kQueueCap = 100;
    static constexpr double kWarmupFraction = 0.1;
    static constexpr double kMinLinkDistance = 1.0;  // ABG model near-field clamp, meters

    using PolicyFactory =
        std::function<std::unique_ptr<AccessPolicy>(const SimConfig&, std::mt19937_64&)>;

    explicit Engine(const SimConfig& cfg, PolicyFactory factory = nullptr)
        : cfg_(cfg), factory_(std::move(factory)) {
        SimConfig checked = cfg;
        auto errors = validate_config(checked);
        if (!errors.empty()) {
            std::string msg = "Engine: invalid config:";
            for (const auto& e : errors) msg += " " + e + ";";
            throw ConfigError(msg);
        }
        cfg_ = checked;
    }

    const SimConfig& config() const { return cfg_; }

    RunMetrics run(EventLogger* log = nullptr) { return run(cfg_.horizon, log); }

    RunMetrics run(long horizon, EventLogger* log = nullptr) {
        init_run();
        RunMetrics metrics;
        metrics.horizon = horizon;
        metrics.warmup_slots = static_cast<long>(kWarmupFraction * static_cast<double>(horizon));
        metrics.delay_hist.assign(static_cast<std::size_t>(cfg_.D) + 1, 0);

        for (long t = 0; t < horizon; ++t) step(t, metrics, log);

        for (const auto& lap : laps_) metrics.queued_at_end += static_cast<long>(lap.queue.size());
        metrics.p_timely = metrics.generated > 0
                               ? static_cast<double>(metrics.delivered_timely) / metrics.generated
                               : 0.0;
        long delivered_measured = 0;
        long delay_sum = 0;
        for (std::size_t d = 0; d < metrics.delay_hist.size(); ++d) {
            delivered_measured += metrics.delay_hist[d];
            delay_sum += metrics.delay_hist[d] * static_cast<long>(d);
        }
        metrics.mean_delay = delivered_measured > 0
                                 ? static_cast<double>(delay_sum) / delivered_measured
                                 : 0.0;
        metrics.collision_rate = horizon > 0
                                     ? static_cast<double>(metrics.collided_channel_slots) / horizon
                                     : 0.0;
        return metrics;
    }

    // Positions after the last run step; exposed for diagnostics and tests.
    const std::vector<Pose>& poses() const { return poses_; }
    const AccessPolicy& policy_of(int lap) const { return *laps_[static_cast<std::size_t>(lap)].policy; }

private:
    enum class Mode { Normal, Alarm };
    enum class Phase { Idle, PilotPending, AwaitCs, Contend };

    struct Lap {
        Mode mode = Mode::Normal;
        Phase phase = Phase::Idle;
        std::deque<Update> queue;
        long cs_deliver_slot = -1;
        ComplexVec pending_cs;
        Eigen::VectorXd features;   // encoded CS of the open event
        bool has_features = false;
        long first_tx_slot = -1;
        ConfigIndex last_action = 0;
        bool attempted = false;
        std::vector<int> action_counts;  // per-config attempt counts of the open event
        ComplexVec h;               // block fading gains of the open event
        std::unique_ptr<AccessPolicy> policy;
    };

    void init_run() {
        rng_placement_ = make_stream(cfg_.seed, Stream::Placement);
        rng_mobility_ = make_stream(cfg_.seed, Stream::Mobility);
        rng_activation_ = make_stream(cfg_.seed, Stream::Activation);
        rng_arrivals_ = make_stream(cfg_.seed, Stream::Arrivals);
        rng_fading_ = make_stream(cfg_.seed, Stream::Fading);
        rng_noise_ = make_stream(cfg_.seed, Stream::Noise);
        rng_exploration_ = make_stream(cfg_.seed, Stream::Exploration);
        rng_replay_ = make_stream(cfg_.seed, Stream::Replay);
        auto rng_init = make_stream(cfg_.seed, Stream::Init);

        area_ = Rect{cfg_.area_w, cfg_.area_h};
        cap_x_ = cfg_.area_w / 2.0;
        cap_y_ = cfg_.area_h / 2.0;
        poses_ = place_snapshot(cfg_.K, area_, cfg_.min_sep, cfg_.v, rng_placement_);
        shadow_model_ = std::make_unique<ShadowingModel>(cfg_.area_w, cfg_.area_h, cfg_.sigma_s,
                                                         cfg_.d_corr);
        shadow_ = shadow_model_->sample(rng_placement_);

        laps_.clear();
        laps_.resize(static_cast<std::size_t>(cfg_.K));
        for (auto& lap : laps_) {
            lap.policy = factory_ ? factory_(cfg_, rng_init) : make_policy(cfg_, rng_init);
            lap.action_counts.assign(num_configs(cfg_.M), 0);
        }
        txs_.clear();
        tx_laps_.clear();
    }

    // Per-event channel draw: pathloss and shadowing from the current pose,
    // fresh Rayleigh fading per channel.
    ComplexVec draw_link_gains(int lap_id) {
        const Pose& p = poses_[static_cast<std::size_t>(lap_id)];
        const double d = std::max(std::hypot(p.x - cap_x_, p.y - cap_y_), kMinLinkDistance);
        const double pl = pathloss_db(d, cfg_.fc_ghz, cfg_.alpha, cfg_.beta, cfg_.gamma);
        const double sh = shadowing_at(p.x, p.y, cap_x_, cap_y_, shadow_);
        ComplexVec zeta = fading_vector(cfg_.M, rng_fading_);
        ComplexVec h(static_cast<std::size_t>(cfg_.M));
        for (int m = 0; m < cfg_.M; ++m)
            h[static_cast<std::size_t>(m)] = channel_gain(pl, sh, zeta[static_cast<std::size_t>(m)]);
        return h;
    }

    void step(long t, RunMetrics& metrics, EventLogger* log) {
        metrics.mobility_stalls +=
            mobility_step(poses_, cfg_.slot_seconds(), area_, cfg_.min_sep, rng_mobility_);

        // CS delivery from last slot's pilots.
        for (int n = 0; n < cfg_.K; ++n) {
            Lap& lap = laps_[static_cast<std::size_t>(n)];
            if (lap.phase == Phase::AwaitCs && lap.cs_deliver_slot == t) {
                lap.features = features_from_cs(lap.pending_cs);
                lap.has_features = true;
                lap.phase = Phase::Contend;
                lap.first_tx_slot = t + 1;
                if (log) log->log(t, n, "cs");
            }
        }

        // Activation opens alarm events; arrivals extend queues of LAPs that
        // entered the slot already in alarm state.
        for (int n = 0; n < cfg_.K; ++n) {
            Lap& lap = laps_[static_cast<std::size_t>(n)];
            if (lap.mode == Mode::Normal) {
                if (chance(cfg_.p_act, rng_activation_)) {
                    lap.mode = Mode::Alarm;
                    lap.phase = Phase::PilotPending;
                    lap.queue.push_back(Update{t, std::nullopt});
                    count_generated(t, metrics);
                    if (log) log->log(t, n, "activate");
                }
            } else if (chance(cfg_.p_arr, rng_arrivals_)) {
                if (static_cast<int>(lap.queue.size()) < kQueueCap) {
                    lap.queue.push_back(Update{t, std::nullopt});
                    count_generated(t, metrics);
                } else {
                    count_generated(t, metrics);
                    ++metrics.dropped_overflow_total;
                    if (t >= metrics.warmup_slots) ++metrics.dropped_overflow;
                    if (log) log->log(t, n, "overflow_drop");
                }
            }
        }

        // Pilot aggregation and CS broadcast for events opened this slot.
        pilot_senders_.clear();
        for (int n = 0; n < cfg_.K; ++n)
            if (laps_[static_cast<std::size_t>(n)].phase == Phase::PilotPending)
                pilot_senders_.push_back(n);
        if (!pilot_senders_.empty()) {
            std::vector<ComplexVec> gains;
            gains.reserve(pilot_senders_.size());
            for (int n : pilot_senders_) {
                laps_[static_cast<std::size_t>(n)].h = draw_link_gains(n);
                gains.push_back(laps_[static_cast<std::size_t>(n)].h);
            }
            const std::vector<ComplexVec> pilots(pilot_senders_.size(),
                                                 ComplexVec(static_cast<std::size_t>(cfg_.M),
                                                            Complex(1.0, 0.0)));
            const ComplexVec y =
                aggregate_pilot(gains, pilots, cfg_.snr_linear(), awgn(cfg_.M, rng_noise_));
            for (std::size_t i = 0; i < pilot_senders_.size(); ++i) {
                Lap& lap = laps_[static_cast<std::size_t>(pilot_senders_[i])];
                lap.pending_cs =
                    broadcast_cs(y, lap.h, cfg_.snr_linear(), awgn(cfg_.M, rng_noise_));
                lap.cs_deliver_slot = t + 1;
                lap.phase = Phase::AwaitCs;
                if (log) log->log(t, pilot_senders_[i], "pilot");
            }
        }

        // Transmission attempts. The action is re-selected on every attempt
        // from the event's cached CS.
        txs_.clear();
        tx_laps_.clear();
        for (int n = 0; n < cfg_.K; ++n) {
            Lap& lap = laps_[static_cast<std::size_t>(n)];
            if (lap.phase != Phase::Contend || t < lap.first_tx_slot) continue;
            assert(lap.mode == Mode::Alarm);
            const ConfigIndex a = lap.policy->select_action(lap.features, rng_exploration_);
            lap.last_action = a;
            lap.attempted = true;
            ++lap.action_counts[a];
            txs_.push_back(Transmission{n, a});
            tx_laps_.push_back(n);
            if (log) log->log_tx(t, n, "tx", a, cfg_.M);
        }
        const SlotOutcome outcome = cap_resolve(txs_, cfg_.M);
        metrics.collided_channel_slots += outcome.collided_channels;

        // ACKs close events with a success reward.
        for (std::size_t i = 0; i < txs_.size(); ++i) {
            if (!outcome.success[i]) continue;
            const int n = tx_laps_[i];
            Lap& lap = laps_[static_cast<std::size_t>(n)];
            Update& hol = lap.queue.front();
            hol.delivery_slot = t;
            const long delay = hol.delay();
            assert(delay <= cfg_.D);
            ++metrics.delivered_total;
            if (hol.generation_slot >= metrics.warmup_slots) {
                ++metrics.delivered_timely;
                ++metrics.delay_hist[static_cast<std::size_t>(delay)];
            }
            if (log) log->log_tx(t, n, "ack", lap.last_action, cfg_.M);
            close_event(n, reward_for(true), metrics);
        }

        // Deadline expiry; a closure can expose an already stale successor,
        // hence the inner loop.
        for (int n = 0; n < cfg_.K; ++n) {
            Lap& lap = laps_[static_cast<std::size_t>(n)];
            while (lap.mode == Mode::Alarm && lap.queue.front().generation_slot + cfg_.D <= t) {
                const Update& hol = lap.queue.front();
                ++metrics.dropped_deadline_total;
                if (hol.generation_slot >= metrics.warmup_slots) ++metrics.dropped_deadline;
                if (log) log->log(t, n, "deadline_drop");
                close_event(n, reward_for(false), metrics);
            }
        }
    }

    void count_generated(long t, RunMetrics& metrics) {
        ++metrics.generated_total;
        if (t >= metrics.warmup_slots) ++metrics.generated;
    }

    // The configuration credited with the event's reward is the one used on
    // most attempts (lowest index on ties): the agent's commitment for the
    // event, as opposed to a stray exploration draw on the closing slot.
    ConfigIndex modal_action(const Lap& lap) const {
        ConfigIndex best = 0;
        for (ConfigIndex c = 1; c < lap.action_counts.size(); ++c)
            if (lap.action_counts[c] > lap.action_counts[best]) best = c;
        return best;
    }

    void close_event(int n, int reward, RunMetrics& metrics) {
        Lap& lap = laps_[static_cast<std::size_t>(n)];
        lap.queue.pop_front();
        if (lap.attempted) {
            lap.policy->event_closed(lap.features, modal_action(lap), reward, rng_replay_);
            metrics.reward_trace.push_back(static_cast<signed char>(reward));
            ++metrics.events_closed;
            std::fill(lap.action_counts.begin(), lap.action_counts.end(), 0);
        } else {
            ++metrics.stale_closures;
        }
        lap.attempted = false;
        lap.has_features = false;
        lap.first_tx_slot = -1;
        lap.cs_deliver_slot = -1;
        if (lap.queue.empty()) {
            lap.mode = Mode::Normal;
            lap.phase = Phase::Idle;
        } else {
            lap.phase = Phase::PilotPending;  // next event's pilot goes out next slot
        }
    }

    SimConfig cfg_;
    PolicyFactory factory_;
    Rect area_;
    double cap_x_ = 0.0, cap_y_ = 0.0;
    std::vector<Pose> poses_;
    std::unique_ptr<ShadowingModel> shadow_model_;
    ShadowingField shadow_;
    std::vector<Lap> laps_;
    std::vector<Transmission> txs_;
    std::vector<int> tx_laps_;
    std::vector<int> pilot_senders_;

    std::mt19937_64 rng_placement_, rng_mobility_, rng_activation_, rng_arrivals_,
        rng_fading_, rng_noise_, rng_exploration_, rng_replay_;
};

}  // namespace csra
