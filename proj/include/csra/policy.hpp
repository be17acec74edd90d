#pragma once

#include <algorithm>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

#include "csra/access_config.hpp"
#include "csra/config.hpp"
#include "csra/mlp.hpp"
#include "csra/replay.hpp"
#include "csra/rng.hpp"

namespace csra {

// Exploration schedule: linear decay to a floor, one step per closed event.
inline double epsilon_at(long event_count, double start = 1.0, double floor = 0.1,
                         double step = 0.005) {
    if (event_count < 0) throw std::invalid_argument("epsilon_at: event_count < 0");
    return std::max(floor, start - step * static_cast<double>(event_count));
}

// Learning-rate schedule: multiplicative decay per closed event, floored.
inline double lr_at(long event_count, double lr0, double decay = 0.015, double floor = 1e-4) {
    if (event_count < 0) throw std::invalid_argument("lr_at: event_count < 0");
    return std::max(floor, lr0 * std::pow(1.0 - decay, static_cast<double>(event_count)));
}

inline int reward_for(bool delivered_within_deadline) {
    return delivered_within_deadline ? 1 : -1;
}

// Lowest index wins ties, so greedy selection is a pure function of the values.
inline ConfigIndex argmax_lowest(const Eigen::VectorXd& values) {
    ConfigIndex best = 0;
    for (Eigen::Index i = 1; i < values.size(); ++i)
        if (values(i) > values(best)) best = static_cast<ConfigIndex>(i);
    return best;
}

// Access decision maker of one LAP. select_action is called once per
// transmission attempt; event_closed once per finished alarm event, with
// the reward earned and the action of the final attempt.
class AccessPolicy {
public:
    virtual ~AccessPolicy() = default;
    virtual ConfigIndex select_action(const Eigen::VectorXd& cs_features,
                                      std::mt19937_64& explore_rng) = 0;
    virtual void event_closed(const Eigen::VectorXd& cs_features, ConfigIndex action,
                              int reward, std::mt19937_64& replay_rng) = 0;
    virtual long events() const { return 0; }
};

// Proposed protocol: epsilon-greedy over the action-value network fed with
// the CS observation, replay memory, one RMSProp step per closed event.
class DnnPolicy final : public AccessPolicy {
public:
    DnnPolicy(const SimConfig& cfg, std::mt19937_64& init_rng)
        : cfg_(cfg), n_actions_(num_configs(cfg.M)),
          net_(Mlp::init(2 * cfg.M, cfg.q, static_cast<int>(n_actions_), init_rng)),
          mem_(cfg.S), opt_(RmsPropState::init(net_)) {}

    ConfigIndex select_action(const Eigen::VectorXd& cs_features,
                              std::mt19937_64& explore_rng) override {
        const double eps = epsilon_at(events_, cfg_.eps_start, cfg_.eps_floor, cfg_.eps_step);
        if (chance(eps, explore_rng)) {
            std::uniform_int_distribution<ConfigIndex> u(0, n_actions_ - 1);
            return u(explore_rng);
        }
        return argmax_lowest(net_.forward(cs_features));
    }

    void event_closed(const Eigen::VectorXd& cs_features, ConfigIndex action, int reward,
                      std::mt19937_64& replay_rng) override {
        mem_.push(ReplayTuple{cs_features, action, static_cast<double>(reward)});
        const double lr = lr_at(events_, cfg_.lr_start, cfg_.lr_decay);
        train_step(net_, mem_, cfg_.batch, opt_, lr, replay_rng);
        ++events_;
    }

    long events() const override { return events_; }
    const Mlp& net() const { return net_; }
    Mlp& net() { return net_; }

private:
    SimConfig cfg_;
    ConfigIndex n_actions_;
    Mlp net_;
    ReplayMemory mem_;
    RmsPropState opt_;
    long events_ = 0;
};

// Context-free epsilon-greedy bandit over the 2^M configurations with a
// constant step size. Shares the exploration schedule of the DNN agent.
class MabPolicy final : public AccessPolicy {
public:
    MabPolicy(const SimConfig& cfg)
        : cfg_(cfg), values_(Eigen::VectorXd::Zero(num_configs(cfg.M))),
          counts_(num_configs(cfg.M), 0) {}

    static constexpr double kStepSize = 0.1;

    ConfigIndex select_action(const Eigen::VectorXd&, std::mt19937_64& explore_rng) override {
        const double eps = epsilon_at(events_, cfg_.eps_start, cfg_.eps_floor, cfg_.eps_step);
        if (chance(eps, explore_rng)) {
            std::uniform_int_distribution<ConfigIndex> u(
                0, static_cast<ConfigIndex>(values_.size()) - 1);
            return u(explore_rng);
        }
        return argmax_lowest(values_);
    }

    void event_closed(const Eigen::VectorXd&, ConfigIndex action, int reward,
                      std::mt19937_64&) override {
        update(action, reward);
        ++events_;
    }

    void update(ConfigIndex action, double reward) {
        if (action >= static_cast<ConfigIndex>(values_.size()))
            throw std::out_of_range("MabPolicy::update: action out of range");
        values_(static_cast<Eigen::Index>(action)) +=
            kStepSize * (reward - values_(static_cast<Eigen::Index>(action)));
        ++counts_[action];
    }

    long events() const override { return events_; }
    const Eigen::VectorXd& values() const { return values_; }
    Eigen::VectorXd& values() { return values_; }
    const std::vector<long>& counts() const { return counts_; }

private:
    SimConfig cfg_;
    Eigen::VectorXd values_;
    std::vector<long> counts_;
    long events_ = 0;
};

// Random channel hopping: a uniformly chosen single channel per attempt.
class RchPolicy final : public AccessPolicy {
public:
    explicit RchPolicy(int M) : M_(M) {
        if (M < 1) throw std::invalid_argument("RchPolicy: M < 1");
    }

    ConfigIndex select_action(const Eigen::VectorXd&, std::mt19937_64& explore_rng) override {
        std::uniform_int_distribution<int> u(0, M_ - 1);
        return ConfigIndex{1} << u(explore_rng);
    }

    void event_closed(const Eigen::VectorXd&, ConfigIndex, int, std::mt19937_64&) override {}

private:
    int M_;
};

// Always the same configuration; for controlled experiments and tests.
class FixedPolicy final : public AccessPolicy {
public:
    FixedPolicy(ConfigIndex config, int M) : config_(config) {
        if (config >= num_configs(M)) throw std::out_of_range("FixedPolicy: config >= 2^M");
    }

    ConfigIndex select_action(const Eigen::VectorXd&, std::mt19937_64&) override {
        return config_;
    }

    void event_closed(const Eigen::VectorXd&, ConfigIndex, int, std::mt19937_64&) override {}

private:
    ConfigIndex config_;
};

inline std::unique_ptr<AccessPolicy> make_policy(const SimConfig& cfg,
                                                 std::mt19937_64& init_rng) {
    switch (cfg.policy) {
        case PolicyKind::Dnn: return std::make_unique<DnnPolicy>(cfg, init_rng);
        case PolicyKind::Mab: return std::make_unique<MabPolicy>(cfg);
        case PolicyKind::Rch: return std::make_unique<RchPolicy>(cfg.M);
        case PolicyKind::Fixed: return std::make_unique<FixedPolicy>(cfg.fixed_config, cfg.M);
    }
    throw std::logic_error("make_policy: unreachable");
}

}  // namespace csra
