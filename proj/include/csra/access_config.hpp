#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace csra {

// Index of an access configuration in the enumeration of all 2^M of them.
using ConfigIndex = std::uint32_t;

// One access configuration: per-channel transmit indicators. mask[m] == 1
// means "transmit on channel m+1". The index<->mask mapping is little
// endian: bit m of the index is channel m+1.
struct AccessConfig {
    std::vector<std::uint8_t> mask;

    int channels() const { return static_cast<int>(mask.size()); }

    bool operator==(const AccessConfig&) const = default;
};

inline ConfigIndex num_configs(int M) {
    return ConfigIndex{1} << M;
}

inline AccessConfig config_index_to_mask(ConfigIndex i, int M) {
    if (M < 1 || M > 20) throw std::out_of_range("config_index_to_mask: M out of range");
    if (i >= num_configs(M))
        throw std::out_of_range("config_index_to_mask: index " + std::to_string(i) +
                                " out of range for M=" + std::to_string(M));
    AccessConfig cfg;
    cfg.mask.resize(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) cfg.mask[static_cast<std::size_t>(m)] = (i >> m) & 1u;
    return cfg;
}

inline ConfigIndex mask_to_index(const AccessConfig& cfg) {
    ConfigIndex i = 0;
    for (int m = 0; m < cfg.channels(); ++m)
        if (cfg.mask[static_cast<std::size_t>(m)]) i |= ConfigIndex{1} << m;
    return i;
}

inline int config_popcount(ConfigIndex i) {
    int n = 0;
    for (; i; i >>= 1) n += static_cast<int>(i & 1u);
    return n;
}

// One critical update travelling from a LAP to the CAP. Delay is measured
// in whole slots from the slot it was generated in.
struct Update {
    long generation_slot = 0;
    std::optional<long> delivery_slot;

    long delay() const {
        if (!delivery_slot) throw std::logic_error("Update::delay: not delivered");
        return *delivery_slot - generation_slot;
    }

    bool timely(int deadline_slots) const {
        return delivery_slot && delay() <= deadline_slots;
    }
};

}  // namespace csra
