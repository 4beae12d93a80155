// Bottom model layer: a time-changing spatial cluster process. Group centers
// follow a reflected Gaussian random walk; nodes diffuse around their group
// center with mean reversion, so clustering stays stationary.
#pragma once

#include <cmath>
#include <vector>

#include "dynsamp/rng.hpp"
#include "dynsamp/world.hpp"

namespace dynsamp {

struct SpaceConfig {
    double region_side = 1.0;
    int n_groups = 20;
    double group_center_step_sd = 0.002;
    double node_reversion = 0.1;  // kappa in (0, 1]
    double node_step_sd = 0.01;

    void validate() const {
        if (region_side <= 0) throw ConfigError("space.region_side must be > 0");
        if (n_groups < 1) throw ConfigError("space.n_groups must be >= 1");
        if (node_reversion <= 0 || node_reversion > 1)
            throw ConfigError("space.node_reversion must be in (0, 1]");
        if (group_center_step_sd < 0 || node_step_sd < 0)
            throw ConfigError("space step standard deviations must be >= 0");
    }
};

// Fold a coordinate into [0, side] by reflection at the boundaries.
inline double reflect_into(double x, double side) {
    if (side <= 0) return 0.0;
    const double period = 2.0 * side;
    x = std::fmod(x, period);
    if (x < 0) x += period;
    return (x > side) ? period - x : x;
}

inline Vec2 reflect_into(Vec2 p, double side) {
    return {reflect_into(p.x, side), reflect_into(p.y, side)};
}

// Stationary per-coordinate sd of the node diffusion around its center.
inline double node_stationary_sd(const SpaceConfig& cfg) {
    const double keep = 1.0 - cfg.node_reversion;
    const double denom = 1.0 - keep * keep;
    if (denom <= 0) return 0.0;
    return cfg.node_step_sd / std::sqrt(denom);
}

// Centers drawn uniformly in the region; the population target is split as
// evenly as integer division allows (first pop % n groups get one extra).
inline std::vector<GroupState> init_groups(const SpaceConfig& cfg, int pop_target,
                                           RngStream& rng) {
    std::vector<GroupState> groups(static_cast<std::size_t>(cfg.n_groups));
    const int base = pop_target / cfg.n_groups;
    const int extra = pop_target % cfg.n_groups;
    for (int g = 0; g < cfg.n_groups; ++g) {
        groups[g].id = g;
        groups[g].center = {rng.uniform() * cfg.region_side, rng.uniform() * cfg.region_side};
        groups[g].target_size = base + (g < extra ? 1 : 0);
    }
    return groups;
}

inline void step_group_centers(std::vector<GroupState>& groups, const SpaceConfig& cfg,
                               RngStream& rng) {
    for (auto& g : groups) {
        const Vec2 eps{rng.normal(0.0, cfg.group_center_step_sd),
                       rng.normal(0.0, cfg.group_center_step_sd)};
        g.center = reflect_into(g.center + eps, cfg.region_side);
    }
}

// x <- c + (1 - kappa)(x - c) + eps, reflected into the region.
inline void step_node_positions(World& world, const SpaceConfig& cfg, RngStream& rng) {
    const double keep = 1.0 - cfg.node_reversion;
    for (auto& [id, node] : world.nodes) {
        const Vec2 c = world.groups[static_cast<std::size_t>(node.group)].center;
        Vec2 p{c.x + keep * (node.pos.x - c.x) + rng.normal(0.0, cfg.node_step_sd),
               c.y + keep * (node.pos.y - c.y) + rng.normal(0.0, cfg.node_step_sd)};
        node.pos = reflect_into(p, cfg.region_side);
    }
}

inline double distance(const Vec2& a, const Vec2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace dynsamp
