// HIV-style epidemic modeled as a link-tracing sampling design operated by
// the virus: the sample is the set of infected individuals, acquisition is
// per-link transmission with stage-specific rates plus importation, and
// attrition happens only through removal from the population (or a
// functional-cure intervention).
#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "dynsamp/effects.hpp"
#include "dynsamp/rng.hpp"
#include "dynsamp/sampling.hpp"
#include "dynsamp/world.hpp"

namespace dynsamp {

enum class Stage : std::uint8_t { Susceptible = 0, Acute = 1, Chronic = 2, Late = 3 };

inline const char* to_string(Stage s) {
    switch (s) {
        case Stage::Susceptible: return "susceptible";
        case Stage::Acute: return "acute";
        case Stage::Chronic: return "chronic";
        default: return "late";
    }
}

struct EpidemicParams {
    double beta_acute = 0.03;
    double beta_chronic = 0.0025;
    double beta_late = 0.0025;
    double acute_mean_steps = 8.0;
    double chronic_mean_steps = 520.0;
    double late_mean_steps = 104.0;
    double mortality_mult_acute = 1.0;
    double mortality_mult_chronic = 1.0;
    double mortality_mult_late = 20.0;
    double import_prob = 2e-5;
    double reinfection_mult = 0.0;  // 0 disables reinfection events
    int initial_infected = 10;
    std::map<GroupId, double> group_link_mult;  // within-group boost, default 1

    void validate() const {
        auto in01 = [](double v, const char* key) {
            if (v < 0 || v > 1) throw ConfigError(std::string("epi.") + key + " must be in [0,1]");
        };
        in01(beta_acute, "beta_acute");
        in01(beta_chronic, "beta_chronic");
        in01(beta_late, "beta_late");
        in01(import_prob, "import_prob");
        in01(reinfection_mult, "reinfection_mult");
        if (acute_mean_steps < 1 || chronic_mean_steps < 1 || late_mean_steps < 1)
            throw ConfigError("epi stage duration means must be >= 1");
        if (mortality_mult_late < 1 || mortality_mult_acute < 1 || mortality_mult_chronic < 1)
            throw ConfigError("epi mortality multipliers must be >= 1");
        if (initial_infected < 0) throw ConfigError("epi.initial_infected must be >= 0");
        for (const auto& [g, m] : group_link_mult)
            if (m < 0) throw ConfigError("epi.group_link_mult entries must be >= 0");
    }

    double beta(Stage s) const {
        switch (s) {
            case Stage::Acute: return beta_acute;
            case Stage::Chronic: return beta_chronic;
            case Stage::Late: return beta_late;
            default: return 0.0;
        }
    }

    // Boost applies to links internal to a group (local co-factor epidemics).
    double link_mult(GroupId a, GroupId b) const {
        if (a != b || group_link_mult.empty()) return 1.0;
        auto it = group_link_mult.find(a);
        return it == group_link_mult.end() ? 1.0 : it->second;
    }
};

struct EpiNodeState {
    Stage stage = Stage::Susceptible;
    Step stage_entered_at = 0;
    int times_infected = 0;
};

struct InfectionEvent {
    Step step = 0;
    NodeId origin = 0;  // equals dest for importation
    NodeId dest = 0;
    int dest_degree = 0;
    int dest_degree_out = 0;  // links to non-infected nodes at incidence
    GroupId dest_group = 0;
    bool imported = false;
};

struct EpidemicState {
    // Entries exist for ever-infected nodes; stage may revert to Susceptible
    // after a functional cure.
    std::map<NodeId, EpiNodeState> status;
    SampleState virus;  // members are exactly the currently infected living nodes
    long reinfection_events = 0;

    Stage stage_of(NodeId id) const {
        auto it = status.find(id);
        return it == status.end() ? Stage::Susceptible : it->second.stage;
    }

    bool infected(NodeId id) const { return stage_of(id) != Stage::Susceptible; }

    std::size_t prevalence() const { return virus.size(); }

    void infect(NodeId id, Step now) {
        EpiNodeState& st = status[id];
        st.stage = Stage::Acute;
        st.stage_entered_at = now;
        st.times_infected += 1;
        virus.add_member(id, now);
    }

    void clear_infection(NodeId id, Step now) {
        auto it = status.find(id);
        if (it == status.end()) return;
        it->second.stage = Stage::Susceptible;
        it->second.stage_entered_at = now;
        virus.force_remove(id);
    }

    void on_node_removed(NodeId id) {
        status.erase(id);
        virus.force_remove(id);
    }

    std::map<Stage, int> stage_counts() const {
        std::map<Stage, int> counts{{Stage::Acute, 0}, {Stage::Chronic, 0}, {Stage::Late, 0}};
        for (const auto& [id, st] : status)
            if (st.stage != Stage::Susceptible) counts[st.stage] += 1;
        return counts;
    }
};

// beta(stage of origin) * origin out-mult * destination in-mult *
// within-group link boost * (reinfection dampener when dest is infected).
inline double transmission_probability(const EpidemicParams& params, Stage origin_stage,
                                       bool dest_infected, double out_mult, double in_mult,
                                       double link_mult) {
    double p = params.beta(origin_stage) * out_mult * in_mult * link_mult;
    if (dest_infected) p *= params.reinfection_mult;
    return std::clamp(p, 0.0, 1.0);
}

inline int degree_out_of_infected(const World& world, NodeId id, const EpidemicState& epi) {
    int n = 0;
    for (NodeId nb : world.node(id).neighbors)
        if (!epi.infected(nb)) ++n;
    return n;
}

// One transmission sweep. Each discordant link fires independently given the
// infected set at the start of the step; a susceptible exposed through several
// links this step is infected once. When reinfection is enabled, links between
// two infected nodes are evaluated in both directions and counted only.
inline std::vector<InfectionEvent> step_transmission(World& world, EpidemicState& epi,
                                                     const EpidemicParams& params,
                                                     const EffectSource* effects,
                                                     RngStream& rng) {
    // Start-of-step infected set; also used for degree-out at incidence.
    const SampleState start_virus = epi.virus;
    auto infected_at_start = [&](NodeId id) { return start_virus.contains(id); };

    std::map<NodeId, NodeId> newly;  // dest -> lowest-id origin
    for (const auto& [key, link] : world.links) {
        for (const auto [i, j] : {std::pair{key.a, key.b}, std::pair{key.b, key.a}}) {
            if (!infected_at_start(i)) continue;
            const bool dest_infected = infected_at_start(j);
            if (dest_infected && params.reinfection_mult <= 0.0) continue;
            const Stage origin_stage = epi.status.at(i).stage;
            const NodeMultipliers eo = effect_or_neutral(effects, i);
            const NodeMultipliers ed = effect_or_neutral(effects, j);
            const double p = transmission_probability(
                params, origin_stage, dest_infected, eo.out, ed.in,
                params.link_mult(world.node(i).group, world.node(j).group));
            if (!rng.bernoulli(p)) continue;
            if (dest_infected) {
                epi.reinfection_events += 1;
                continue;
            }
            auto it = newly.find(j);
            if (it == newly.end() || i < it->second) newly[j] = i;
        }
    }

    std::vector<InfectionEvent> events;
    for (const auto& [dest, origin] : newly) {
        InfectionEvent ev;
        ev.step = world.now;
        ev.origin = origin;
        ev.dest = dest;
        const Node& n = world.node(dest);
        ev.dest_degree = n.degree();
        int out = 0;
        for (NodeId nb : n.neighbors)
            if (!infected_at_start(nb)) ++out;
        ev.dest_degree_out = out;
        ev.dest_group = n.group;
        ev.imported = false;
        epi.infect(dest, world.now);
        events.push_back(ev);
    }
    return events;
}

// Each infected node advances one stage with per-step probability
// 1/stage_mean (geometric dwell times). Late exits only through mortality;
// Susceptible never progresses.
inline int step_progression(EpidemicState& epi, const EpidemicParams& params, Step now,
                            RngStream& rng) {
    std::vector<NodeId> advance;
    for (const auto& [id, st] : epi.status) {
        double exit_prob = 0.0;
        switch (st.stage) {
            case Stage::Acute: exit_prob = 1.0 / params.acute_mean_steps; break;
            case Stage::Chronic: exit_prob = 1.0 / params.chronic_mean_steps; break;
            default: continue;
        }
        if (rng.bernoulli(exit_prob)) advance.push_back(id);
    }
    for (NodeId id : advance) {
        EpiNodeState& st = epi.status.at(id);
        st.stage = (st.stage == Stage::Acute) ? Stage::Chronic : Stage::Late;
        st.stage_entered_at = now;
    }
    return static_cast<int>(advance.size());
}

// Each susceptible independently acquires an outside infection. New arrivals
// from demographic insertion are susceptible this tick, so the same scan gives
// immigrants an infected-at-entry chance at the same probability.
inline std::vector<InfectionEvent> step_importation(World& world, EpidemicState& epi,
                                                    const EpidemicParams& params,
                                                    RngStream& rng) {
    if (params.import_prob <= 0.0) return {};
    std::vector<InfectionEvent> events;
    for (const auto& [id, node] : world.nodes) {
        if (epi.infected(id)) continue;
        if (!rng.bernoulli(params.import_prob)) continue;
        InfectionEvent ev;
        ev.step = world.now;
        ev.origin = id;
        ev.dest = id;
        ev.dest_degree = node.degree();
        ev.dest_degree_out = degree_out_of_infected(world, id, epi);
        ev.dest_group = node.group;
        ev.imported = true;
        epi.infect(id, world.now);
        events.push_back(ev);
    }
    return events;
}

inline double stage_mortality_multiplier(const EpidemicState& epi, const EpidemicParams& params,
                                         NodeId id) {
    switch (epi.stage_of(id)) {
        case Stage::Acute: return params.mortality_mult_acute;
        case Stage::Chronic: return params.mortality_mult_chronic;
        case Stage::Late: return params.mortality_mult_late;
        default: return 1.0;
    }
}

// Seed the epidemic: uniform without-replacement choice among living nodes.
inline std::vector<InfectionEvent> seed_epidemic(World& world, EpidemicState& epi,
                                                 const EpidemicParams& params, RngStream& rng) {
    std::vector<NodeId> pool;
    pool.reserve(world.nodes.size());
    for (const auto& [id, n] : world.nodes)
        if (!epi.infected(id)) pool.push_back(id);
    const std::size_t take =
        std::min<std::size_t>(static_cast<std::size_t>(params.initial_infected), pool.size());
    for (std::size_t t = 0; t < take; ++t) {
        const std::size_t pick = t + rng.uniform_index(pool.size() - t);
        std::swap(pool[t], pool[pick]);
    }
    std::vector<NodeId> chosen(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(chosen.begin(), chosen.end());
    std::vector<InfectionEvent> events;
    for (NodeId id : chosen) {
        InfectionEvent ev;
        ev.step = world.now;
        ev.origin = id;
        ev.dest = id;
        ev.dest_degree = world.node(id).degree();
        ev.dest_degree_out = degree_out_of_infected(world, id, epi);
        ev.dest_group = world.node(id).group;
        ev.imported = true;
        epi.infect(id, world.now);
        events.push_back(ev);
    }
    return events;
}

}  // namespace dynsamp
