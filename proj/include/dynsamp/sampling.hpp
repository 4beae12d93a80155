// The sampling-design framework: acquisition by conditional Bernoulli link
// tracing, one-link tracing, fixed-count tracing, or random selection, plus
// an attrition process. Activity and replacement are continuous dampeners in
// [0,1]; a target size is enforced through an exponential feedback factor.
//
// Step semantics are simultaneous: every acquisition decision in a tick uses
// the sample as of the start of the design step. Nodes reached this tick can
// trace from the next tick onward.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dynsamp/rng.hpp"
#include "dynsamp/world.hpp"

namespace dynsamp {

enum class TracingMode : std::uint8_t { Bernoulli = 0, OneLink = 1, FixedCount = 2 };

struct DesignSpec {
    TracingMode tracing_mode = TracingMode::Bernoulli;
    int fixed_count = 1;             // k, used only by FixedCount
    double base_trace_prob = 0.1;    // p
    double random_select_prob = 0.0; // r, per non-member per step
    double attrition_prob = 0.0;     // a, per member per step
    double replacement_dampening = 1.0;  // rho: 1 with-replacement, 0 without
    double activity_decay = 1.0;         // delta, per step in sample
    std::optional<double> target_size;   // n*, feedback off when unset
    double feedback_strength = 0.0;      // psi
    int initial_seed_count = 1;

    void validate(const std::string& name) const {
        auto in01 = [&](double v, const char* key) {
            if (v < 0 || v > 1)
                throw ConfigError("design." + name + "." + key + " must be in [0,1]");
        };
        in01(base_trace_prob, "trace_prob");
        in01(random_select_prob, "random_prob");
        in01(attrition_prob, "attrition_prob");
        in01(replacement_dampening, "replacement");
        in01(activity_decay, "activity_decay");
        if (feedback_strength < 0)
            throw ConfigError("design." + name + ".feedback must be >= 0");
        if (target_size && *target_size <= 0)
            throw ConfigError("design." + name + ".target_size must be > 0");
        if (tracing_mode == TracingMode::FixedCount && fixed_count < 1)
            throw ConfigError("design." + name + ": fixed_count(k) needs k >= 1");
        if (initial_seed_count < 0)
            throw ConfigError("design." + name + ".seeds must be >= 0");
    }
};

struct MemberRecord {
    Step entered_at = 0;
    double activity = 1.0;
    bool active_flag = true;
};

struct SampleState {
    std::map<NodeId, MemberRecord> members;
    std::map<NodeId, double> replacement;  // per ever-sampled node; absent = 1

    std::size_t size() const { return members.size(); }
    bool contains(NodeId id) const { return members.count(id) > 0; }

    double replacement_value(NodeId id) const {
        auto it = replacement.find(id);
        return it == replacement.end() ? 1.0 : it->second;
    }

    void add_member(NodeId id, Step now) { members[id] = MemberRecord{now, 1.0, true}; }

    // Forced removal (death/emigration); no replacement bookkeeping.
    void force_remove(NodeId id) { members.erase(id); }
};

enum class SelectionMode : std::uint8_t { Trace = 0, Random = 1, Seed = 2 };

inline const char* to_string(SelectionMode m) {
    switch (m) {
        case SelectionMode::Trace: return "trace";
        case SelectionMode::Random: return "random";
        default: return "seed";
    }
}

struct TraceEvent {
    Step step = 0;
    NodeId origin = 0;  // equals dest for random and seed selections
    NodeId dest = 0;
    int dest_degree = 0;
    int dest_degree_out = 0;  // links to non-members at selection
    GroupId dest_group = 0;
    SelectionMode mode = SelectionMode::Trace;
};

// exp(-psi (n - n*) / n*), clamped to [0.01, 100]; 1 when no target is set.
inline double size_adjustment(double n, std::optional<double> target, double psi) {
    if (!target || psi == 0.0) return 1.0;
    const double adj = std::exp(-psi * (n - *target) / *target);
    return std::clamp(adj, 0.01, 100.0);
}

// p * activity_i * replacement_j * size feedback, clamped into [0,1].
inline double tracing_probability(const DesignSpec& spec, const SampleState& sample,
                                  NodeId origin, NodeId dest, std::size_t sample_size) {
    auto it = sample.members.find(origin);
    const double activity = (it != sample.members.end() && it->second.active_flag)
                                ? it->second.activity
                                : 0.0;
    const double p = spec.base_trace_prob * activity * sample.replacement_value(dest) *
                     size_adjustment(static_cast<double>(sample_size), spec.target_size,
                                     spec.feedback_strength);
    return std::clamp(p, 0.0, 1.0);
}

// Links with one endpoint in the sample and one outside, each listed once,
// oriented member -> nonmember, ordered by (member id, nonmember id).
inline std::vector<std::pair<NodeId, NodeId>> surface_links(const SampleState& sample,
                                                            const World& world) {
    std::vector<std::pair<NodeId, NodeId>> out;
    for (const auto& [id, rec] : sample.members) {
        if (!world.contains(id)) continue;
        for (NodeId nb : world.node(id).neighbors)
            if (!sample.contains(nb)) out.emplace_back(id, nb);
    }
    return out;
}

inline int degree_out_of_sample(const World& world, NodeId id, const SampleState& sample) {
    int n = 0;
    for (NodeId nb : world.node(id).neighbors)
        if (!sample.contains(nb)) ++n;
    return n;
}

namespace detail {

inline TraceEvent make_event(const World& world, const SampleState& start_sample, Step now,
                             NodeId origin, NodeId dest, SelectionMode mode) {
    const Node& n = world.node(dest);
    TraceEvent ev;
    ev.step = now;
    ev.origin = origin;
    ev.dest = dest;
    ev.dest_degree = n.degree();
    ev.dest_degree_out = degree_out_of_sample(world, dest, start_sample);
    ev.dest_group = n.group;
    ev.mode = mode;
    return ev;
}

}  // namespace detail

// Conditional Bernoulli tracing: every surface link is traced independently
// with its own probability. A nonmember reached by at least one traced link
// joins once; the recorded origin is the lowest-id tracing origin.
inline std::vector<TraceEvent> step_bernoulli_tracing(const DesignSpec& spec,
                                                      SampleState& sample, const World& world,
                                                      RngStream& rng) {
    const SampleState start = sample;
    const std::size_t n_start = start.size();
    std::map<NodeId, NodeId> reached;  // dest -> lowest-id origin
    for (const auto& [i, j] : surface_links(start, world)) {
        const double p = tracing_probability(spec, start, i, j, n_start);
        if (!rng.bernoulli(p)) continue;
        auto it = reached.find(j);
        if (it == reached.end() || i < it->second) reached[j] = i;
    }
    std::vector<TraceEvent> events;
    for (const auto& [dest, origin] : reached) {
        events.push_back(detail::make_event(world, start, world.now, origin, dest,
                                            SelectionMode::Trace));
        sample.add_member(dest, world.now);
    }
    return events;
}

// At most one link traced per step, chosen by weight activity_i * replacement_j.
inline std::vector<TraceEvent> step_one_link(const DesignSpec& spec, SampleState& sample,
                                             const World& world, RngStream& rng) {
    const SampleState start = sample;
    const auto surface = surface_links(start, world);
    if (surface.empty()) return {};
    const double gate = std::clamp(
        spec.base_trace_prob * size_adjustment(static_cast<double>(start.size()),
                                               spec.target_size, spec.feedback_strength),
        0.0, 1.0);
    if (!rng.bernoulli(gate)) return {};

    std::vector<double> weights;
    weights.reserve(surface.size());
    double total = 0.0;
    for (const auto& [i, j] : surface) {
        const auto& rec = start.members.at(i);
        const double w = (rec.active_flag ? rec.activity : 0.0) * start.replacement_value(j);
        weights.push_back(w);
        total += w;
    }
    if (total <= 0.0) return {};
    double u = rng.uniform() * total;
    std::size_t pick = surface.size() - 1;
    for (std::size_t k = 0; k < surface.size(); ++k) {
        u -= weights[k];
        if (u < 0) {
            pick = k;
            break;
        }
    }
    const auto [i, j] = surface[pick];
    std::vector<TraceEvent> events{detail::make_event(world, start, world.now, i, j,
                                                      SelectionMode::Trace)};
    sample.add_member(j, world.now);
    return events;
}

// Select min(k, #distinct reachable nonmembers) distinct destinations
// uniformly without replacement from the surface's destinations.
inline std::vector<TraceEvent> step_fixed_count(const DesignSpec& spec, SampleState& sample,
                                                const World& world, int k, RngStream& rng) {
    const SampleState start = sample;
    const auto surface = surface_links(start, world);
    if (surface.empty() || k <= 0) return {};

    std::map<NodeId, NodeId> dest_origin;  // dest -> lowest-id origin
    for (const auto& [i, j] : surface) {
        auto it = dest_origin.find(j);
        if (it == dest_origin.end() || i < it->second) dest_origin[j] = i;
    }
    std::vector<NodeId> dests;
    dests.reserve(dest_origin.size());
    for (const auto& [d, o] : dest_origin) dests.push_back(d);

    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), dests.size());
    // Partial Fisher-Yates; the first `take` entries are a uniform subset.
    for (std::size_t t = 0; t < take; ++t) {
        const std::size_t pick = t + rng.uniform_index(dests.size() - t);
        std::swap(dests[t], dests[pick]);
    }
    std::vector<NodeId> chosen(dests.begin(), dests.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(chosen.begin(), chosen.end());

    std::vector<TraceEvent> events;
    for (NodeId d : chosen) {
        events.push_back(detail::make_event(world, start, world.now, dest_origin.at(d), d,
                                            SelectionMode::Trace));
        sample.add_member(d, world.now);
    }
    return events;
}

// Each nonmember is selected independently with r * replacement * feedback.
inline std::vector<TraceEvent> step_random_selection(const DesignSpec& spec,
                                                     SampleState& sample, const World& world,
                                                     RngStream& rng) {
    if (spec.random_select_prob <= 0.0) return {};
    const SampleState start = sample;
    const double adj = size_adjustment(static_cast<double>(start.size()), spec.target_size,
                                       spec.feedback_strength);
    std::vector<TraceEvent> events;
    for (const auto& [id, node] : world.nodes) {
        if (sample.contains(id)) continue;  // includes nodes traced earlier this tick
        const double p =
            std::clamp(spec.random_select_prob * start.replacement_value(id) * adj, 0.0, 1.0);
        if (!rng.bernoulli(p)) continue;
        events.push_back(detail::make_event(world, start, world.now, id, id,
                                            SelectionMode::Random));
        sample.add_member(id, world.now);
    }
    return events;
}

// Each member leaves independently with probability a; a leaver's replacement
// value becomes rho, dampening any later reselection.
inline std::vector<NodeId> step_attrition(const DesignSpec& spec, SampleState& sample,
                                          RngStream& rng) {
    std::vector<NodeId> leavers;
    for (const auto& [id, rec] : sample.members)
        if (rng.bernoulli(spec.attrition_prob)) leavers.push_back(id);
    for (NodeId id : leavers) {
        sample.members.erase(id);
        sample.replacement[id] = spec.replacement_dampening;
    }
    return leavers;
}

inline void step_activity_decay(const DesignSpec& spec, SampleState& sample) {
    for (auto& [id, rec] : sample.members) {
        if (!rec.active_flag)
            rec.activity = 0.0;
        else
            rec.activity *= spec.activity_decay;
    }
}

// Uniform without-replacement seed selection over the living population.
inline std::vector<TraceEvent> seed_sample(const DesignSpec& spec, SampleState& sample,
                                           const World& world, RngStream& rng) {
    std::vector<NodeId> pool;
    pool.reserve(world.nodes.size());
    for (const auto& [id, n] : world.nodes)
        if (!sample.contains(id)) pool.push_back(id);
    const std::size_t take =
        std::min<std::size_t>(static_cast<std::size_t>(spec.initial_seed_count), pool.size());
    for (std::size_t t = 0; t < take; ++t) {
        const std::size_t pick = t + rng.uniform_index(pool.size() - t);
        std::swap(pool[t], pool[pick]);
    }
    std::vector<NodeId> chosen(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(chosen.begin(), chosen.end());

    const SampleState start = sample;
    std::vector<TraceEvent> events;
    for (NodeId id : chosen) {
        events.push_back(detail::make_event(world, start, world.now, id, id,
                                            SelectionMode::Seed));
        sample.add_member(id, world.now);
    }
    return events;
}

// One full design step in the order tracing, random selection, attrition,
// activity decay.
inline std::vector<TraceEvent> step_design(const DesignSpec& spec, SampleState& sample,
                                           const World& world, RngStream& rng) {
    std::vector<TraceEvent> events;
    switch (spec.tracing_mode) {
        case TracingMode::Bernoulli:
            events = step_bernoulli_tracing(spec, sample, world, rng);
            break;
        case TracingMode::OneLink:
            events = step_one_link(spec, sample, world, rng);
            break;
        case TracingMode::FixedCount:
            events = step_fixed_count(spec, sample, world, spec.fixed_count, rng);
            break;
    }
    auto random_events = step_random_selection(spec, sample, world, rng);
    events.insert(events.end(), random_events.begin(), random_events.end());
    step_attrition(spec, sample, rng);
    step_activity_decay(spec, sample);
    return events;
}

}  // namespace dynsamp
