// Third model layer: insertion and deletion of nodes with feedback keeping
// population and group sizes in a stochastic equilibrium. Removal cascades
// through links, every registered sample, and the epidemic state.
#pragma once

#include <cmath>
#include <vector>

#include "dynsamp/effects.hpp"
#include "dynsamp/epidemic.hpp"
#include "dynsamp/interventions.hpp"
#include "dynsamp/rng.hpp"
#include "dynsamp/sampling.hpp"
#include "dynsamp/social_space.hpp"
#include "dynsamp/world.hpp"

namespace dynsamp {

struct DemographyParams {
    double death_hazard = 0.002;     // mu, per node per step
    int pop_target = 1000;           // N*
    double insertion_base = 2.0;     // lambda0, expected insertions/step at N = N*
    double feedback_strength = 2.0;  // eta
    double emigration_hazard = 0.0;

    void validate() const {
        if (death_hazard < 0 || death_hazard >= 1)
            throw ConfigError("demography.death_hazard must be in [0,1)");
        if (pop_target < 1) throw ConfigError("demography.pop_target must be >= 1");
        if (insertion_base < 0) throw ConfigError("demography.insertion_base must be >= 0");
        if (feedback_strength < 0) throw ConfigError("demography.feedback_strength must be >= 0");
        if (emigration_hazard < 0 || emigration_hazard > 1)
            throw ConfigError("demography.emigration_hazard must be in [0,1]");
    }

    // Demographic equilibrium needs lambda0 close to mu * N*.
    bool balance_plausible() const {
        const double equilibrium = death_hazard * pop_target;
        if (equilibrium <= 0) return insertion_base == 0 || true;
        return insertion_base <= 2.0 * equilibrium && insertion_base >= 0.5 * equilibrium;
    }
};

// Everything a node removal must cascade through.
struct RemovalHooks {
    std::vector<SampleState*> samples;
    EpidemicState* epi = nullptr;
    TreatmentState* treat = nullptr;
};

// Remove a node from the population: incident links go, sample memberships
// are forced out, the life record is closed, and the epidemic state archived.
inline void remove_node(World& world, NodeId id, RemovalCause cause,
                        const RemovalHooks& hooks) {
    auto it = world.nodes.find(id);
    if (it == world.nodes.end()) {
#ifndef NDEBUG
        throw ContractError("remove_node: unknown id " + std::to_string(id));
#else
        return;  // tolerated in release builds
#endif
    }
    const std::vector<NodeId> neighbors = it->second.neighbors;
    for (NodeId nb : neighbors) world.remove_link(id, nb);

    NodeLifeRecord rec;
    rec.id = id;
    rec.born_at = it->second.born_at;
    rec.removed_at = world.now;
    rec.cause = cause;
    rec.stage_at_removal =
        hooks.epi ? static_cast<int>(hooks.epi->stage_of(id)) : 0;
    world.life_log.push_back(rec);

    for (SampleState* s : hooks.samples)
        if (s) s->force_remove(id);
    if (hooks.epi) hooks.epi->on_node_removed(id);
    if (hooks.treat) hooks.treat->on_node_removed(id);

    world.nodes.erase(it);
}

// Death scan in ascending id order; hazard is mu * stage multiplier *
// intervention mortality multiplier, clamped to 1. Surviving nodes then face
// the emigration hazard.
inline std::vector<NodeId> step_deaths(World& world, const DemographyParams& params,
                                       const EpidemicState* epi, const EpidemicParams* epi_params,
                                       const EffectSource* effects, const RemovalHooks& hooks,
                                       RngStream& rng) {
    std::vector<std::pair<NodeId, RemovalCause>> removals;
    for (const auto& [id, node] : world.nodes) {
        double hazard = params.death_hazard;
        if (epi && epi_params) hazard *= stage_mortality_multiplier(*epi, *epi_params, id);
        hazard *= effect_or_neutral(effects, id).mortality;
        hazard = std::min(hazard, 1.0);
        if (rng.bernoulli(hazard)) {
            removals.emplace_back(id, RemovalCause::Death);
        } else if (params.emigration_hazard > 0 && rng.bernoulli(params.emigration_hazard)) {
            removals.emplace_back(id, RemovalCause::Emigration);
        }
    }
    std::vector<NodeId> ids;
    ids.reserve(removals.size());
    for (const auto& [id, cause] : removals) {
        remove_node(world, id, cause, hooks);
        ids.push_back(id);
    }
    return ids;
}

// lambda = lambda0 * max(0, 1 + eta (N* - N) / N*): decreasing in N, equal to
// lambda0 at the target.
inline double insertion_rate(std::size_t n_now, const DemographyParams& params) {
    const double target = static_cast<double>(params.pop_target);
    const double factor =
        1.0 + params.feedback_strength * (target - static_cast<double>(n_now)) / target;
    return params.insertion_base * std::max(0.0, factor);
}

// Poisson insertions. Each new node gets a Bernoulli(0.5) sex, a group chosen
// with probability proportional to max(1, target - current size), a Gaussian
// position around the group center at the stationary sd, and no links.
inline std::vector<NodeId> step_insertions(World& world, const DemographyParams& params,
                                           const SpaceConfig& space, RngStream& rng) {
    const std::uint64_t count = rng.poisson(insertion_rate(world.population(), params));
    if (count == 0) return {};

    std::vector<int> sizes(world.groups.size(), 0);
    for (const auto& [id, node] : world.nodes) sizes[static_cast<std::size_t>(node.group)] += 1;

    const double sd = node_stationary_sd(space);
    std::vector<NodeId> inserted;
    inserted.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
        std::vector<double> weights(world.groups.size());
        double total = 0.0;
        for (std::size_t g = 0; g < world.groups.size(); ++g) {
            weights[g] = std::max(1.0, static_cast<double>(world.groups[g].target_size - sizes[g]));
            total += weights[g];
        }
        double u = rng.uniform() * total;
        std::size_t g = world.groups.size() - 1;
        for (std::size_t c = 0; c < world.groups.size(); ++c) {
            u -= weights[c];
            if (u < 0) {
                g = c;
                break;
            }
        }
        const Sex sex = rng.bernoulli(0.5) ? Sex::F : Sex::M;
        const Vec2 center = world.groups[g].center;
        const Vec2 pos = reflect_into(
            {center.x + rng.normal(0.0, sd), center.y + rng.normal(0.0, sd)}, space.region_side);
        inserted.push_back(world.add_node(pos, static_cast<GroupId>(g), sex, world.now));
        sizes[g] += 1;
    }
    return inserted;
}

}  // namespace dynsamp
