// Seek-and-treat intervention distributed as a sampling design: random
// testing plus contact tracing from known positives, with effect sets that
// modulate transmission, mortality, and relationship behavior while a node
// stays enrolled.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "dynsamp/effects.hpp"
#include "dynsamp/epidemic.hpp"
#include "dynsamp/rng.hpp"
#include "dynsamp/sampling.hpp"
#include "dynsamp/world.hpp"

namespace dynsamp {

struct EffectSet {
    double art_out_mult = 1.0;          // onward transmission, positives
    double art_mortality_mult = 1.0;    // positives, in (0,1]
    double prevention_in_mult = 1.0;    // susceptibility, negatives
    double vaccine_in_mult = 1.0;       // negatives; 1 = unavailable
    double behavior_duration_mult = 1.0;   // >= 1, stretches drawn link durations
    double behavior_formation_mult = 1.0;  // dampens link formation
    double cure_prob = 0.0;             // per enrolled positive per step
};

struct InterventionSpec {
    bool enabled = false;
    double random_test_prob = 0.0;
    double trace_prob = 0.0;
    double test_sensitivity = 1.0;
    double dropout_prob = 0.0;
    Step start_step = 0;
    EffectSet effects;  // positive and negative branches read different fields

    void validate() const {
        auto in01 = [](double v, const char* key) {
            if (v < 0 || v > 1)
                throw ConfigError(std::string("intervention.") + key + " must be in [0,1]");
        };
        in01(random_test_prob, "random_test_prob");
        in01(trace_prob, "trace_prob");
        in01(test_sensitivity, "sensitivity");
        in01(dropout_prob, "dropout_prob");
        in01(effects.art_out_mult, "art_out_mult");
        in01(effects.prevention_in_mult, "prevention_in_mult");
        in01(effects.vaccine_in_mult, "vaccine_in_mult");
        in01(effects.behavior_formation_mult, "behavior_formation_mult");
        in01(effects.cure_prob, "cure_prob");
        if (effects.art_mortality_mult <= 0 || effects.art_mortality_mult > 1)
            throw ConfigError("intervention.art_mortality_mult must be in (0,1]");
        if (effects.behavior_duration_mult < 1)
            throw ConfigError("intervention.behavior_duration_mult must be >= 1");
        if (start_step < 0) throw ConfigError("intervention.start_step must be >= 0");
    }
};

struct Enrollment {
    Step enrolled_at = 0;
    bool known_positive = false;
};

// Enrollment registry plus the sample view of the treatment program. Members
// of `sample` are exactly the enrolled nodes, so the design geometry metrics
// (volume, surface) apply to it like to any other sample.
class TreatmentState : public EffectSource {
public:
    const InterventionSpec* spec = nullptr;  // bound by the engine
    std::map<NodeId, Enrollment> enrolled;
    SampleState sample;

    bool is_enrolled(NodeId id) const { return enrolled.count(id) > 0; }

    bool known_positive(NodeId id) const {
        auto it = enrolled.find(id);
        return it != enrolled.end() && it->second.known_positive;
    }

    NodeMultipliers get(NodeId id) const override {
        NodeMultipliers m;
        auto it = enrolled.find(id);
        if (it == enrolled.end() || !spec) return m;
        const EffectSet& e = spec->effects;
        if (it->second.known_positive) {
            m.out = e.art_out_mult;
            m.mortality = e.art_mortality_mult;
        } else {
            m.in = e.prevention_in_mult * e.vaccine_in_mult;
        }
        m.duration = e.behavior_duration_mult;
        m.formation = e.behavior_formation_mult;
        return m;
    }

    void enroll(NodeId id, Step now, bool positive) {
        enrolled[id] = Enrollment{now, positive};
        sample.add_member(id, now);
        // Permanent tracing source while enrolled.
        sample.members.at(id).activity = 1.0;
    }

    void unenroll(NodeId id) {
        enrolled.erase(id);
        sample.members.erase(id);
    }

    void on_node_removed(NodeId id) {
        enrolled.erase(id);
        sample.force_remove(id);
    }
};

// Random testing, then contact tracing from known positives, then testing of
// every reached node. Infected nodes test positive with the configured
// sensitivity; misses are enrolled through the negative branch. All reach
// decisions use enrollment as of the step start.
inline std::vector<TraceEvent> step_seek_and_treat(const InterventionSpec& spec,
                                                   TreatmentState& treat, const World& world,
                                                   const EpidemicState& epi, RngStream& rng) {
    const SampleState start_sample = treat.sample;
    std::map<NodeId, std::pair<NodeId, SelectionMode>> reached;  // dest -> (origin, mode)

    for (const auto& [id, node] : world.nodes) {
        if (start_sample.contains(id)) continue;
        if (rng.bernoulli(spec.random_test_prob))
            reached.emplace(id, std::make_pair(id, SelectionMode::Random));
    }

    for (const auto& [id, enr] : treat.enrolled) {
        if (!enr.known_positive || !world.contains(id)) continue;
        for (NodeId nb : world.node(id).neighbors) {
            if (start_sample.contains(nb)) continue;
            if (!rng.bernoulli(spec.trace_prob)) continue;
            auto it = reached.find(nb);
            if (it == reached.end())
                reached.emplace(nb, std::make_pair(id, SelectionMode::Trace));
            else if (it->second.second == SelectionMode::Trace && id < it->second.first)
                it->second.first = id;
        }
    }

    std::vector<TraceEvent> events;
    for (const auto& [dest, origin_mode] : reached) {
        const bool infected = epi.infected(dest);
        const bool positive = infected && rng.bernoulli(spec.test_sensitivity);
        TraceEvent ev;
        ev.step = world.now;
        ev.origin = origin_mode.first;
        ev.dest = dest;
        ev.dest_degree = world.node(dest).degree();
        ev.dest_degree_out = degree_out_of_sample(world, dest, start_sample);
        ev.dest_group = world.node(dest).group;
        ev.mode = origin_mode.second;
        events.push_back(ev);
        treat.enroll(dest, world.now, positive);
    }
    return events;
}

inline NodeMultipliers effect_multipliers(const TreatmentState& treat, NodeId id) {
    return treat.get(id);
}

// Each enrolled node independently leaves the program; its multipliers
// revert to 1 immediately.
inline std::vector<NodeId> step_dropout(const InterventionSpec& spec, TreatmentState& treat,
                                        RngStream& rng) {
    std::vector<NodeId> leavers;
    for (const auto& [id, enr] : treat.enrolled)
        if (rng.bernoulli(spec.dropout_prob)) leavers.push_back(id);
    for (NodeId id : leavers) treat.unenroll(id);
    return leavers;
}

// Functional cure: each enrolled positive reverts to Susceptible.
inline std::vector<NodeId> step_cure(const InterventionSpec& spec, TreatmentState& treat,
                                     EpidemicState& epi, Step now, RngStream& rng) {
    if (spec.effects.cure_prob <= 0.0) return {};
    std::vector<NodeId> cured;
    for (const auto& [id, enr] : treat.enrolled) {
        if (!enr.known_positive || !epi.infected(id)) continue;
        if (rng.bernoulli(spec.effects.cure_prob)) cured.push_back(id);
    }
    for (NodeId id : cured) epi.clear_infection(id, now);
    return cured;
}

}  // namespace dynsamp
