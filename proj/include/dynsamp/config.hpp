// INI-style scenario configuration. Sections and keys are a closed set:
// unknown names are errors, so typos fail loudly instead of silently running
// defaults.
#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dynsamp/demography.hpp"
#include "dynsamp/epidemic.hpp"
#include "dynsamp/interventions.hpp"
#include "dynsamp/link_dynamics.hpp"
#include "dynsamp/sampling.hpp"
#include "dynsamp/social_space.hpp"

namespace dynsamp {

struct IniSection {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;  // file order

    const std::string* find(const std::string& key) const {
        for (const auto& [k, v] : entries)
            if (k == key) return &v;
        return nullptr;
    }

    void set(const std::string& key, const std::string& value) {
        for (auto& [k, v] : entries) {
            if (k == key) {
                v = value;
                return;
            }
        }
        entries.emplace_back(key, value);
    }
};

struct IniData {
    std::vector<IniSection> sections;  // file order

    IniSection* find(const std::string& name) {
        for (auto& s : sections)
            if (s.name == name) return &s;
        return nullptr;
    }

    const IniSection* find(const std::string& name) const {
        for (const auto& s : sections)
            if (s.name == name) return &s;
        return nullptr;
    }

    IniSection& get_or_create(const std::string& name) {
        if (IniSection* s = find(name)) return *s;
        sections.push_back(IniSection{name, {}});
        return sections.back();
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::string strip_comment(const std::string& line) {
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] != '#' && line[i] != ';') continue;
        if (i == 0 || std::isspace(static_cast<unsigned char>(line[i - 1])))
            return line.substr(0, i);
    }
    return line;
}

inline double parse_double(const std::string& v, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value '" + v + "' for " + where);
    }
}

inline long parse_int(const std::string& v, const std::string& where) {
    try {
        std::size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("bad integer value '" + v + "' for " + where);
    }
}

inline bool parse_bool(const std::string& v, const std::string& where) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("bad boolean value '" + v + "' for " + where);
}

}  // namespace detail

inline IniData parse_ini(const std::string& text) {
    IniData ini;
    IniSection* current = nullptr;
    std::istringstream is(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        const std::string line = detail::trim(detail::strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            const std::string name = detail::trim(line.substr(1, line.size() - 2));
            if (name.empty())
                throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
            if (ini.find(name))
                throw ConfigError("duplicate section [" + name + "]");
            ini.sections.push_back(IniSection{name, {}});
            current = &ini.sections.back();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        if (!current)
            throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (current->find(key))
            throw ConfigError("duplicate key '" + key + "' in [" + current->name + "]");
        current->set(key, value);
    }
    return ini;
}

inline IniData parse_ini_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_ini(buf.str());
}

struct RunParams {
    Step steps = 2000;
    Step burn_in = 500;
    int replicates = 1;
    std::uint64_t seed = 1;
    std::string out_dir;
    std::string snapshot_in;
    std::string snapshot_out;

    void validate() const {
        if (burn_in < 0 || steps <= burn_in)
            throw ConfigError("run.steps must exceed run.burn_in >= 0");
        if (replicates < 1) throw ConfigError("run.replicates must be >= 1");
    }
};

struct ScenarioConfig {
    std::string name = "scenario";
    SpaceConfig space;
    LinkParams links;
    DemographyParams demography;
    EpidemicParams epi;
    InterventionSpec intervention;
    std::vector<std::pair<std::string, DesignSpec>> designs;  // registration order
    RunParams run;

    void validate(std::vector<std::string>* warnings = nullptr) const {
        space.validate();
        links.validate();
        demography.validate();
        epi.validate();
        intervention.validate();
        for (const auto& [name_, spec] : designs) spec.validate(name_);
        run.validate();
        if (warnings) {
            if (!demography.balance_plausible())
                warnings->push_back(
                    "demography.insertion_base is more than 2x away from death_hazard * "
                    "pop_target; the population will drift far from the target");
            if (links.candidate_cutoff < 3.0 * links.kernel_scale)
                warnings->push_back(
                    "links.candidate_cutoff below 3 * kernel_scale truncates a visible share "
                    "of the formation kernel");
        }
    }
};

namespace detail {

inline TracingMode parse_mode(const std::string& v, int& fixed_count,
                              const std::string& where) {
    if (v == "bernoulli") return TracingMode::Bernoulli;
    if (v == "one_link") return TracingMode::OneLink;
    if (v.rfind("fixed_count(", 0) == 0 && v.back() == ')') {
        fixed_count = static_cast<int>(
            parse_int(v.substr(12, v.size() - 13), where + " fixed_count argument"));
        return TracingMode::FixedCount;
    }
    throw ConfigError("bad tracing mode '" + v + "' for " + where +
                      " (expected bernoulli, one_link, or fixed_count(K))");
}

}  // namespace detail

inline ScenarioConfig scenario_from_ini(const IniData& ini,
                                        std::vector<std::string>* warnings = nullptr) {
    ScenarioConfig cfg;
    for (const IniSection& sec : ini.sections) {
        const std::string& s = sec.name;
        auto where = [&](const std::string& key) { return s + "." + key; };
        if (s == "space") {
            for (const auto& [k, v] : sec.entries) {
                if (k == "region_side") cfg.space.region_side = detail::parse_double(v, where(k));
                else if (k == "n_groups") cfg.space.n_groups = static_cast<int>(detail::parse_int(v, where(k)));
                else if (k == "group_center_step_sd") cfg.space.group_center_step_sd = detail::parse_double(v, where(k));
                else if (k == "node_reversion") cfg.space.node_reversion = detail::parse_double(v, where(k));
                else if (k == "node_step_sd") cfg.space.node_step_sd = detail::parse_double(v, where(k));
                else throw ConfigError("unknown key '" + k + "' in [space]");
            }
        } else if (s == "links") {
            for (const auto& [k, v] : sec.entries) {
                if (k == "base_prob") cfg.links.base_prob = detail::parse_double(v, where(k));
                else if (k == "kernel_scale") cfg.links.kernel_scale = detail::parse_double(v, where(k));
                else if (k == "sex_mix.ff") cfg.links.sex_mix[0][0] = detail::parse_double(v, where(k));
                else if (k == "sex_mix.fm") cfg.links.sex_mix[0][1] = detail::parse_double(v, where(k));
                else if (k == "sex_mix.mf") cfg.links.sex_mix[1][0] = detail::parse_double(v, where(k));
                else if (k == "sex_mix.mm") cfg.links.sex_mix[1][1] = detail::parse_double(v, where(k));
                else if (k == "degree_cap") cfg.links.degree_cap = detail::parse_double(v, where(k));
                else if (k == "duration_mean") cfg.links.duration_mean = detail::parse_double(v, where(k));
                else if (k == "duration_shape") cfg.links.duration_shape = detail::parse_double(v, where(k));
                else if (k == "candidate_cutoff") cfg.links.candidate_cutoff = detail::parse_double(v, where(k));
                else throw ConfigError("unknown key '" + k + "' in [links]");
            }
        } else if (s == "demography") {
            for (const auto& [k, v] : sec.entries) {
                if (k == "death_hazard") cfg.demography.death_hazard = detail::parse_double(v, where(k));
                else if (k == "pop_target") cfg.demography.pop_target = static_cast<int>(detail::parse_int(v, where(k)));
                else if (k == "insertion_base") cfg.demography.insertion_base = detail::parse_double(v, where(k));
                else if (k == "feedback_strength") cfg.demography.feedback_strength = detail::parse_double(v, where(k));
                else if (k == "emigration_hazard") cfg.demography.emigration_hazard = detail::parse_double(v, where(k));
                else throw ConfigError("unknown key '" + k + "' in [demography]");
            }
        } else if (s == "epi") {
            for (const auto& [k, v] : sec.entries) {
                if (k == "beta_acute") cfg.epi.beta_acute = detail::parse_double(v, where(k));
                else if (k == "beta_chronic") cfg.epi.beta_chronic = detail::parse_double(v, where(k));
                else if (k == "beta_late") cfg.epi.beta_late = detail::parse_double(v, where(k));
                else if (k == "acute_mean") cfg.epi.acute_mean_steps = detail::parse_double(v, where(k));
                else if (k == "chronic_mean") cfg.epi.chronic_mean_steps = detail::parse_double(v, where(k));
                else if (k == "late_mean") cfg.epi.late_mean_steps = detail::parse_double(v, where(k));
                else if (k == "mortality_mult_late") cfg.epi.mortality_mult_late = detail::parse_double(v, where(k));
                else if (k == "import_prob") cfg.epi.import_prob = detail::parse_double(v, where(k));
                else if (k == "reinfection_mult") cfg.epi.reinfection_mult = detail::parse_double(v, where(k));
                else if (k == "initial_infected") cfg.epi.initial_infected = static_cast<int>(detail::parse_int(v, where(k)));
                else if (k.rfind("group_link_mult.", 0) == 0) {
                    const GroupId g = static_cast<GroupId>(
                        detail::parse_int(k.substr(16), where(k) + " group id"));
                    cfg.epi.group_link_mult[g] = detail::parse_double(v, where(k));
                } else throw ConfigError("unknown key '" + k + "' in [epi]");
            }
        } else if (s == "intervention") {
            for (const auto& [k, v] : sec.entries) {
                if (k == "enabled") cfg.intervention.enabled = detail::parse_bool(v, where(k));
                else if (k == "random_test_prob") cfg.intervention.random_test_prob = detail::parse_double(v, where(k));
                else if (k == "trace_prob") cfg.intervention.trace_prob = detail::parse_double(v, where(k));
                else if (k == "sensitivity") cfg.intervention.test_sensitivity = detail::parse_double(v, where(k));
                else if (k == "dropout_prob") cfg.intervention.dropout_prob = detail::parse_double(v, where(k));
                else if (k == "art_out_mult") cfg.intervention.effects.art_out_mult = detail::parse_double(v, where(k));
                else if (k == "art_mortality_mult") cfg.intervention.effects.art_mortality_mult = detail::parse_double(v, where(k));
                else if (k == "prevention_in_mult") cfg.intervention.effects.prevention_in_mult = detail::parse_double(v, where(k));
                else if (k == "vaccine_in_mult") cfg.intervention.effects.vaccine_in_mult = detail::parse_double(v, where(k));
                else if (k == "behavior_duration_mult") cfg.intervention.effects.behavior_duration_mult = detail::parse_double(v, where(k));
                else if (k == "behavior_formation_mult") cfg.intervention.effects.behavior_formation_mult = detail::parse_double(v, where(k));
                else if (k == "cure_prob") cfg.intervention.effects.cure_prob = detail::parse_double(v, where(k));
                else if (k == "start_step") cfg.intervention.start_step = detail::parse_int(v, where(k));
                else throw ConfigError("unknown key '" + k + "' in [intervention]");
            }
        } else if (s.rfind("design.", 0) == 0) {
            const std::string name = s.substr(7);
            if (name.empty()) throw ConfigError("design section needs a name: [design.<name>]");
            DesignSpec spec;
            for (const auto& [k, v] : sec.entries) {
                if (k == "mode") spec.tracing_mode = detail::parse_mode(v, spec.fixed_count, where(k));
                else if (k == "trace_prob") spec.base_trace_prob = detail::parse_double(v, where(k));
                else if (k == "random_prob") spec.random_select_prob = detail::parse_double(v, where(k));
                else if (k == "attrition_prob") spec.attrition_prob = detail::parse_double(v, where(k));
                else if (k == "replacement") spec.replacement_dampening = detail::parse_double(v, where(k));
                else if (k == "activity_decay") spec.activity_decay = detail::parse_double(v, where(k));
                else if (k == "target_size") spec.target_size = detail::parse_double(v, where(k));
                else if (k == "feedback") spec.feedback_strength = detail::parse_double(v, where(k));
                else if (k == "seeds") spec.initial_seed_count = static_cast<int>(detail::parse_int(v, where(k)));
                else throw ConfigError("unknown key '" + k + "' in [" + s + "]");
            }
            cfg.designs.emplace_back(name, spec);
        } else if (s == "run") {
            for (const auto& [k, v] : sec.entries) {
                if (k == "steps") cfg.run.steps = detail::parse_int(v, where(k));
                else if (k == "burn_in") cfg.run.burn_in = detail::parse_int(v, where(k));
                else if (k == "replicates") cfg.run.replicates = static_cast<int>(detail::parse_int(v, where(k)));
                else if (k == "seed") cfg.run.seed = static_cast<std::uint64_t>(detail::parse_int(v, where(k)));
                else if (k == "out_dir") cfg.run.out_dir = v;
                else if (k == "snapshot_in") cfg.run.snapshot_in = v;
                else if (k == "snapshot_out") cfg.run.snapshot_out = v;
                else throw ConfigError("unknown key '" + k + "' in [run]");
            }
        } else {
            throw ConfigError("unknown section [" + s + "]");
        }
    }
    for (std::size_t i = 0; i < cfg.designs.size(); ++i)
        for (std::size_t j = i + 1; j < cfg.designs.size(); ++j)
            if (cfg.designs[i].first == cfg.designs[j].first)
                throw ConfigError("duplicate design name: " + cfg.designs[i].first);
    cfg.validate(warnings);
    return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path,
                                    std::vector<std::string>* warnings = nullptr) {
    ScenarioConfig cfg = scenario_from_ini(parse_ini_file(path), warnings);
    std::string stem = path;
    if (const auto slash = stem.find_last_of("/\\"); slash != std::string::npos)
        stem = stem.substr(slash + 1);
    if (const auto dot = stem.find_last_of('.'); dot != std::string::npos)
        stem = stem.substr(0, dot);
    cfg.name = stem.empty() ? "scenario" : stem;
    return cfg;
}

// Split a dotted override key into (section, key). Design keys carry the
// section in their first two components: design.<name>.<key>.
inline std::pair<std::string, std::string> split_override_key(const std::string& dotted) {
    const auto first = dotted.find('.');
    if (first == std::string::npos)
        throw ConfigError("override key must be section.key: " + dotted);
    std::string section = dotted.substr(0, first);
    std::string key = dotted.substr(first + 1);
    if (section == "design") {
        const auto second = key.find('.');
        if (second == std::string::npos)
            throw ConfigError("design override key must be design.<name>.<key>: " + dotted);
        section += "." + key.substr(0, second);
        key = key.substr(second + 1);
    }
    return {section, key};
}

inline void apply_override(IniData& ini, const std::string& dotted, const std::string& value) {
    const auto [section, key] = split_override_key(dotted);
    ini.get_or_create(section).set(key, value);
}

// compare() allows the two scenarios to differ only in the epidemic,
// intervention, and design layers (the virus is itself a design).
inline bool model_layers_match(const ScenarioConfig& a, const ScenarioConfig& b) {
    const auto space_eq = [](const SpaceConfig& x, const SpaceConfig& y) {
        return x.region_side == y.region_side && x.n_groups == y.n_groups &&
               x.group_center_step_sd == y.group_center_step_sd &&
               x.node_reversion == y.node_reversion && x.node_step_sd == y.node_step_sd;
    };
    const auto links_eq = [](const LinkParams& x, const LinkParams& y) {
        return x.base_prob == y.base_prob && x.kernel_scale == y.kernel_scale &&
               x.sex_mix == y.sex_mix && x.degree_cap == y.degree_cap &&
               x.duration_mean == y.duration_mean && x.duration_shape == y.duration_shape &&
               x.candidate_cutoff == y.candidate_cutoff;
    };
    const auto demo_eq = [](const DemographyParams& x, const DemographyParams& y) {
        return x.death_hazard == y.death_hazard && x.pop_target == y.pop_target &&
               x.insertion_base == y.insertion_base &&
               x.feedback_strength == y.feedback_strength &&
               x.emigration_hazard == y.emigration_hazard;
    };
    return space_eq(a.space, b.space) && links_eq(a.links, b.links) &&
           demo_eq(a.demography, b.demography) && a.run.steps == b.run.steps &&
           a.run.burn_in == b.run.burn_in;
}

}  // namespace dynsamp
