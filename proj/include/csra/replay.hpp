#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "csra/access_config.hpp"
#include "csra/channel.hpp"

namespace csra {

// One experience: the CS observation (already encoded as real features),
// the configuration the agent chose, and the reward it earned.
struct ReplayTuple {
    Eigen::VectorXd features;
    ConfigIndex action = 0;
    double reward = 0.0;
};

// CS encoding for the network input: real parts of all M channels, then
// imaginary parts. Lossless and fixed-size.
inline Eigen::VectorXd features_from_cs(const ComplexVec& cs) {
    const auto M = static_cast<Eigen::Index>(cs.size());
    Eigen::VectorXd f(2 * M);
    for (Eigen::Index m = 0; m < M; ++m) {
        f(m) = cs[static_cast<std::size_t>(m)].real();
        f(M + m) = cs[static_cast<std::size_t>(m)].imag();
    }
    return f;
}

// Bounded FIFO ring of experiences. When full, pushing evicts the oldest.
class ReplayMemory {
public:
    explicit ReplayMemory(int capacity) : capacity_(capacity) {
        if (capacity < 1) throw std::invalid_argument("ReplayMemory: capacity < 1");
        ring_.reserve(static_cast<std::size_t>(capacity));
    }

    int capacity() const { return capacity_; }
    int size() const { return static_cast<int>(ring_.size()); }

    void push(ReplayTuple t) {
        if (size() < capacity_) {
            ring_.push_back(std::move(t));
        } else {
            ring_[head_] = std::move(t);
            head_ = (head_ + 1) % static_cast<std::size_t>(capacity_);
        }
    }

    // Insertion order: 0 = oldest surviving tuple.
    const ReplayTuple& nth_oldest(int i) const {
        if (i < 0 || i >= size()) throw std::out_of_range("ReplayMemory::nth_oldest");
        return ring_[(head_ + static_cast<std::size_t>(i)) % ring_.size()];
    }

    // Uniform sample of `batch` distinct tuples, or nullopt when the memory
    // is not yet warm enough. Partial Fisher-Yates over an index scratch.
    std::optional<std::vector<const ReplayTuple*>> sample(int batch, std::mt19937_64& rng) const {
        if (batch < 1) throw std::invalid_argument("ReplayMemory::sample: batch < 1");
        if (size() < batch) return std::nullopt;
        scratch_.resize(ring_.size());
        for (std::size_t i = 0; i < ring_.size(); ++i) scratch_[i] = i;
        std::vector<const ReplayTuple*> out(static_cast<std::size_t>(batch));
        for (int j = 0; j < batch; ++j) {
            std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(j),
                                                            scratch_.size() - 1);
            std::swap(scratch_[static_cast<std::size_t>(j)], scratch_[pick(rng)]);
            out[static_cast<std::size_t>(j)] = &ring_[scratch_[static_cast<std::size_t>(j)]];
        }
        return out;
    }

private:
    int capacity_;
    std::size_t head_ = 0;  // index of the oldest element once the ring is full
    std::vector<ReplayTuple> ring_;
    mutable std::vector<std::size_t> scratch_;
};

}  // namespace csra
