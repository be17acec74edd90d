#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace csra {

struct Rect {
    double w = 0.0;
    double h = 0.0;

    bool contains(double x, double y) const {
        return x >= 0.0 && x <= w && y >= 0.0 && y <= h;
    }
};

struct Pose {
    double x = 0.0;
    double y = 0.0;
    double direction = 0.0;  // radians
    double speed = 0.0;      // m/s
};

namespace detail {

inline bool separated(double x, double y, const std::vector<Pose>& poses,
                      std::size_t self, double min_sep) {
    for (std::size_t j = 0; j < poses.size(); ++j) {
        if (j == self) continue;
        if (std::hypot(x - poses[j].x, y - poses[j].y) < min_sep) return false;
    }
    return true;
}

}  // namespace detail

// Uniform placement in the rectangle with rejection sampling to keep every
// pair at least min_sep apart. Directions uniform in [0, 2*pi).
inline std::vector<Pose> place_snapshot(int K, Rect area, double min_sep, double speed,
                                        std::mt19937_64& rng) {
    if (K < 1) throw std::invalid_argument("place_snapshot: K < 1");
    if (K * std::numbers::pi * min_sep * min_sep >= 4.0 * area.w * area.h)
        throw std::invalid_argument("place_snapshot: area too small for K units at min_sep");
    std::uniform_real_distribution<double> ux(0.0, area.w), uy(0.0, area.h);
    std::uniform_real_distribution<double> udir(0.0, 2.0 * std::numbers::pi);

    std::vector<Pose> poses;
    poses.reserve(static_cast<std::size_t>(K));
    for (int n = 0; n < K; ++n) {
        bool placed = false;
        for (int attempt = 0; attempt < 10000; ++attempt) {
            const double x = ux(rng), y = uy(rng);
            if (detail::separated(x, y, poses, poses.size(), min_sep)) {
                poses.push_back(Pose{x, y, udir(rng), speed});
                placed = true;
                break;
            }
        }
        if (!placed)
            throw std::invalid_argument("place_snapshot: rejection sampling failed; area too crowded");
    }
    return poses;
}

// Constant-speed advance. A step that would leave the rectangle or bring
// two centers within min_sep triggers uniform direction resampling; if no
// valid direction is found within the retry budget the unit holds position
// for this step. Returns the number of units that stalled.
inline int mobility_step(std::vector<Pose>& poses, double dt, Rect area, double min_sep,
                         std::mt19937_64& rng) {
    if (dt <= 0.0) throw std::invalid_argument("mobility_step: dt <= 0");
    std::uniform_real_distribution<double> udir(0.0, 2.0 * std::numbers::pi);
    int stalled = 0;
    for (std::size_t i = 0; i < poses.size(); ++i) {
        Pose& p = poses[i];
        const double step = p.speed * dt;
        bool moved = false;
        for (int attempt = 0; attempt < 32; ++attempt) {
            const double nx = p.x + step * std::cos(p.direction);
            const double ny = p.y + step * std::sin(p.direction);
            if (area.contains(nx, ny) && detail::separated(nx, ny, poses, i, min_sep)) {
                p.x = nx;
                p.y = ny;
                moved = true;
                break;
            }
            p.direction = udir(rng);
        }
        if (!moved) ++stalled;
    }
    return stalled;
}

}  // namespace csra
