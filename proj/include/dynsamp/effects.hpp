// Per-node multipliers contributed by intervention enrollment. Consumed by
// link formation/duration, transmission, and mortality. All 1.0 when a node
// is not enrolled, so an absent provider is equivalent to a neutral one.
#pragma once

#include "dynsamp/common.hpp"

namespace dynsamp {

struct NodeMultipliers {
    double out = 1.0;        // onward transmission
    double in = 1.0;         // susceptibility
    double mortality = 1.0;  // death hazard
    double duration = 1.0;   // drawn link durations
    double formation = 1.0;  // link formation probability
};

class EffectSource {
public:
    virtual ~EffectSource() = default;
    virtual NodeMultipliers get(NodeId id) const = 0;
};

inline NodeMultipliers effect_or_neutral(const EffectSource* src, NodeId id) {
    return src ? src->get(id) : NodeMultipliers{};
}

}  // namespace dynsamp
