// Second model layer: links form probabilistically as a function of distance,
// sex mix, and current degree, and dissolve when the duration drawn at
// formation runs out (renewal process).
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dynsamp/effects.hpp"
#include "dynsamp/rng.hpp"
#include "dynsamp/social_space.hpp"
#include "dynsamp/world.hpp"

namespace dynsamp {

struct LinkParams {
    double base_prob = 0.06;       // formation probability at distance 0, neutral factors
    double kernel_scale = 0.02;    // Gaussian distance kernel scale
    // sex_mix[origin][destination]; symmetric by default, strongly heterosexual
    std::array<std::array<double, 2>, 2> sex_mix{{{0.05, 1.0}, {1.0, 0.05}}};
    double degree_cap = 10.0;      // degree at which the formation factor hits 0
    double duration_mean = 50.0;   // gamma mean, in steps
    double duration_shape = 1.0;   // gamma shape; 1 = memoryless
    double candidate_cutoff = 0.12;

    void validate() const {
        if (base_prob < 0 || base_prob > 1) throw ConfigError("links.base_prob must be in [0,1]");
        if (kernel_scale <= 0) throw ConfigError("links.kernel_scale must be > 0");
        for (auto& row : sex_mix)
            for (double m : row)
                if (m < 0 || m > 1) throw ConfigError("links.sex_mix entries must be in [0,1]");
        if (degree_cap <= 0) throw ConfigError("links.degree_cap must be > 0");
        if (duration_mean <= 0 || duration_shape <= 0)
            throw ConfigError("links duration parameters must be > 0");
        if (candidate_cutoff <= 0) throw ConfigError("links.candidate_cutoff must be > 0");
    }

    double mix(Sex a, Sex b) const {
        return sex_mix[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    }
};

inline double degree_factor(int degree, double degree_cap) {
    return std::max(0.0, 1.0 - static_cast<double>(degree) / degree_cap);
}

// p0 * exp(-d^2 / 2 sigma^2) * sex_mix * g(deg_i) * g(deg_j), optionally
// dampened by each endpoint's intervention formation multiplier.
inline double formation_probability(double dist, Sex sex_i, Sex sex_j, int deg_i, int deg_j,
                                    const LinkParams& params, double formation_mult_i = 1.0,
                                    double formation_mult_j = 1.0) {
    const double s = params.kernel_scale;
    const double kernel = std::exp(-(dist * dist) / (2.0 * s * s));
    return params.base_prob * kernel * params.mix(sex_i, sex_j) *
           degree_factor(deg_i, params.degree_cap) * degree_factor(deg_j, params.degree_cap) *
           formation_mult_i * formation_mult_j;
}

inline double formation_probability(const World& w, NodeId i, NodeId j,
                                    const LinkParams& params) {
    if (i == j) throw ContractError("formation_probability on identical nodes");
    const Node& a = w.node(i);
    const Node& b = w.node(j);
    return formation_probability(distance(a.pos, b.pos), a.sex, b.sex, a.degree(), b.degree(),
                                 params);
}

// Flat per-tick view of the population used by the candidate grid and the
// formation loop, so trials avoid repeated map lookups.
struct NodeSnapshot {
    NodeId id;
    Vec2 pos;
    Sex sex;
    int degree;
};

// Exactly the unlinked unordered pairs with distance <= cutoff, found with a
// uniform grid of cell side >= cutoff. Pair order is deterministic: ascending
// first id, then second id.
inline std::vector<std::pair<std::size_t, std::size_t>> candidate_pairs(
    const World& world, const std::vector<NodeSnapshot>& snap, double cutoff,
    double region_side) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (cutoff <= 0 || snap.empty()) return out;

    int cells = 1;
    if (std::isfinite(cutoff) && cutoff < region_side)
        cells = std::max(1, static_cast<int>(region_side / cutoff));
    const double inv_cell = static_cast<double>(cells) / region_side;
    auto cell_of = [&](double v) {
        int c = static_cast<int>(v * inv_cell);
        return std::min(std::max(c, 0), cells - 1);
    };

    std::vector<std::vector<std::uint32_t>> grid(static_cast<std::size_t>(cells) * cells);
    for (std::uint32_t k = 0; k < snap.size(); ++k)
        grid[static_cast<std::size_t>(cell_of(snap[k].pos.y)) * cells + cell_of(snap[k].pos.x)]
            .push_back(k);

    const double cutoff2 = cutoff * cutoff;
    for (std::uint32_t k = 0; k < snap.size(); ++k) {
        const NodeSnapshot& a = snap[k];
        const int cx = cell_of(a.pos.x);
        const int cy = cell_of(a.pos.y);
        for (int dy = -1; dy <= 1; ++dy) {
            const int ny = cy + dy;
            if (ny < 0 || ny >= cells) continue;
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = cx + dx;
                if (nx < 0 || nx >= cells) continue;
                for (std::uint32_t m : grid[static_cast<std::size_t>(ny) * cells + nx]) {
                    if (m <= k) continue;
                    const NodeSnapshot& b = snap[m];
                    const double ddx = a.pos.x - b.pos.x;
                    const double ddy = a.pos.y - b.pos.y;
                    if (ddx * ddx + ddy * ddy > cutoff2) continue;
                    if (world.has_link(a.id, b.id)) continue;
                    out.emplace_back(k, m);
                }
            }
        }
    }
    // Snapshot indexes ascend with node id, so this sorts by (id_i, id_j).
    std::sort(out.begin(), out.end());
    return out;
}

// Convenience form returning id pairs; used by tests against the O(n^2) oracle.
inline std::vector<std::pair<NodeId, NodeId>> candidate_pairs(const World& world, double cutoff,
                                                              double region_side) {
    std::vector<NodeSnapshot> snap;
    snap.reserve(world.nodes.size());
    for (const auto& [id, n] : world.nodes) snap.push_back({id, n.pos, n.sex, n.degree()});
    std::vector<std::pair<NodeId, NodeId>> out;
    for (auto [k, m] : candidate_pairs(world, snap, cutoff, region_side))
        out.emplace_back(snap[k].id, snap[m].id);
    return out;
}

// Ceiling of a gamma draw with mean duration_mean; always >= 1 step.
inline Step draw_duration(const LinkParams& params, RngStream& rng,
                          double duration_mult = 1.0) {
    const double raw =
        rng.gamma(params.duration_shape, params.duration_mean / params.duration_shape);
    const double scaled = raw * duration_mult;
    return std::max<Step>(1, static_cast<Step>(std::ceil(scaled)));
}

// One formation sweep. Every candidate pair is an independent Bernoulli trial
// at the probability computed from start-of-step degrees.
inline std::vector<LinkKey> step_formation(World& world, const LinkParams& params,
                                           RngStream& rng, const EffectSource* effects = nullptr,
                                           double region_side = 1.0) {
    std::vector<NodeSnapshot> snap;
    snap.reserve(world.nodes.size());
    for (const auto& [id, n] : world.nodes) snap.push_back({id, n.pos, n.sex, n.degree()});

    const auto cands = candidate_pairs(world, snap, params.candidate_cutoff, region_side);
    std::vector<LinkKey> formed;
    for (auto [k, m] : cands) {
        const NodeSnapshot& a = snap[k];
        const NodeSnapshot& b = snap[m];
        const NodeMultipliers ea = effect_or_neutral(effects, a.id);
        const NodeMultipliers eb = effect_or_neutral(effects, b.id);
        const double d = distance(a.pos, b.pos);
        const double p = formation_probability(d, a.sex, b.sex, a.degree, b.degree, params,
                                               ea.formation, eb.formation);
        if (!rng.bernoulli(p)) continue;
        const Step dur = draw_duration(params, rng, ea.duration * eb.duration);
        world.add_link(a.id, b.id, world.now, world.now + dur);
        formed.emplace_back(a.id, b.id);
    }
    return formed;
}

// Remove exactly the links with expires_at <= now.
inline std::vector<LinkKey> step_dissolution(World& world, Step now) {
    std::vector<LinkKey> expired;
    for (const auto& [key, link] : world.links)
        if (link.expires_at <= now) expired.push_back(key);
    for (const LinkKey& key : expired) world.remove_link(key.a, key.b);
    return expired;
}

}  // namespace dynsamp
