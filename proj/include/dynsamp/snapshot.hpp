// Checksummed JSON snapshots of the full replicate state. Loading then saving
// reproduces the file byte for byte, and resuming a run from a snapshot
// continues the original step sequence exactly.
#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynsamp/epidemic.hpp"
#include "dynsamp/interventions.hpp"
#include "dynsamp/sampling.hpp"
#include "dynsamp/world.hpp"

namespace dynsamp {

struct Snapshot {
    Step created_step = 0;
    World world;
    EpidemicState epi;
    std::map<NodeId, Enrollment> enrolled;
    SampleState treat_sample;
    std::vector<std::pair<std::string, SampleState>> designs;
    std::map<std::string, std::string> rng_states;
};

namespace detail {

inline nlohmann::json sample_to_json(const SampleState& s) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& [id, rec] : s.members)
        members.push_back({id, rec.entered_at, rec.activity, rec.active_flag});
    nlohmann::json repl = nlohmann::json::array();
    for (const auto& [id, v] : s.replacement) repl.push_back({id, v});
    return {{"members", std::move(members)}, {"replacement", std::move(repl)}};
}

inline SampleState sample_from_json(const nlohmann::json& j) {
    SampleState s;
    for (const auto& m : j.at("members")) {
        MemberRecord rec;
        rec.entered_at = m.at(1).get<Step>();
        rec.activity = m.at(2).get<double>();
        rec.active_flag = m.at(3).get<bool>();
        s.members.emplace(m.at(0).get<NodeId>(), rec);
    }
    for (const auto& r : j.at("replacement"))
        s.replacement.emplace(r.at(0).get<NodeId>(), r.at(1).get<double>());
    return s;
}

inline nlohmann::json payload_to_json(const Snapshot& snap) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : snap.world.groups)
        groups.push_back({g.id, g.center.x, g.center.y, g.target_size});
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& [id, n] : snap.world.nodes)
        nodes.push_back(
            {id, n.pos.x, n.pos.y, n.group, static_cast<int>(n.sex), n.born_at});
    nlohmann::json links = nlohmann::json::array();
    for (const auto& [key, link] : snap.world.links)
        links.push_back({key.a, key.b, link.formed_at, link.expires_at});
    nlohmann::json life = nlohmann::json::array();
    for (const auto& rec : snap.world.life_log)
        life.push_back({rec.id, rec.born_at, rec.removed_at, static_cast<int>(rec.cause),
                        rec.stage_at_removal});

    nlohmann::json status = nlohmann::json::array();
    for (const auto& [id, st] : snap.epi.status)
        status.push_back(
            {id, static_cast<int>(st.stage), st.stage_entered_at, st.times_infected});

    nlohmann::json enrolled = nlohmann::json::array();
    for (const auto& [id, e] : snap.enrolled)
        enrolled.push_back({id, e.enrolled_at, e.known_positive});

    nlohmann::json designs = nlohmann::json::object();
    for (const auto& [name, sample] : snap.designs) designs[name] = sample_to_json(sample);

    nlohmann::json rng = nlohmann::json::object();
    for (const auto& [name, state] : snap.rng_states) rng[name] = state;

    return {{"schema", kSchemaVersion},
            {"created_step", snap.created_step},
            {"world",
             {{"now", snap.world.now},
              {"next_id", snap.world.next_id},
              {"groups", std::move(groups)},
              {"nodes", std::move(nodes)},
              {"links", std::move(links)},
              {"life", std::move(life)}}},
            {"epi",
             {{"status", std::move(status)},
              {"virus", sample_to_json(snap.epi.virus)},
              {"reinfections", snap.epi.reinfection_events}}},
            {"treat", {{"enrolled", std::move(enrolled)}, {"sample", sample_to_json(snap.treat_sample)}}},
            {"designs", std::move(designs)},
            {"rng", std::move(rng)}};
}

inline Snapshot payload_from_json(const nlohmann::json& p) {
    Snapshot snap;
    if (p.at("schema").get<int>() != kSchemaVersion)
        throw ConfigError("snapshot schema version mismatch");
    snap.created_step = p.at("created_step").get<Step>();

    const nlohmann::json& w = p.at("world");
    snap.world.now = w.at("now").get<Step>();
    snap.world.next_id = w.at("next_id").get<NodeId>();
    for (const auto& g : w.at("groups")) {
        GroupState gs;
        gs.id = g.at(0).get<GroupId>();
        gs.center = {g.at(1).get<double>(), g.at(2).get<double>()};
        gs.target_size = g.at(3).get<int>();
        snap.world.groups.push_back(gs);
    }
    for (const auto& n : w.at("nodes")) {
        Node node;
        node.id = n.at(0).get<NodeId>();
        node.pos = {n.at(1).get<double>(), n.at(2).get<double>()};
        node.group = n.at(3).get<GroupId>();
        node.sex = static_cast<Sex>(n.at(4).get<int>());
        node.born_at = n.at(5).get<Step>();
        snap.world.nodes.emplace(node.id, std::move(node));
    }
    for (const auto& l : w.at("links")) {
        snap.world.add_link(l.at(0).get<NodeId>(), l.at(1).get<NodeId>(), l.at(2).get<Step>(),
                            l.at(3).get<Step>());
    }
    for (const auto& r : w.at("life")) {
        NodeLifeRecord rec;
        rec.id = r.at(0).get<NodeId>();
        rec.born_at = r.at(1).get<Step>();
        rec.removed_at = r.at(2).get<Step>();
        rec.cause = static_cast<RemovalCause>(r.at(3).get<int>());
        rec.stage_at_removal = r.at(4).get<int>();
        snap.world.life_log.push_back(rec);
    }

    const nlohmann::json& e = p.at("epi");
    for (const auto& s : e.at("status")) {
        EpiNodeState st;
        st.stage = static_cast<Stage>(s.at(1).get<int>());
        st.stage_entered_at = s.at(2).get<Step>();
        st.times_infected = s.at(3).get<int>();
        snap.epi.status.emplace(s.at(0).get<NodeId>(), st);
    }
    snap.epi.virus = sample_from_json(e.at("virus"));
    snap.epi.reinfection_events = e.at("reinfections").get<long>();

    const nlohmann::json& t = p.at("treat");
    for (const auto& en : t.at("enrolled")) {
        Enrollment enr;
        enr.enrolled_at = en.at(1).get<Step>();
        enr.known_positive = en.at(2).get<bool>();
        snap.enrolled.emplace(en.at(0).get<NodeId>(), enr);
    }
    snap.treat_sample = sample_from_json(t.at("sample"));

    for (const auto& [name, sample] : p.at("designs").items())
        snap.designs.emplace_back(name, sample_from_json(sample));

    for (const auto& [name, state] : p.at("rng").items())
        snap.rng_states[name] = state.get<std::string>();

    return snap;
}

inline std::string checksum_hex(const std::string& payload) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(payload)));
    return std::string(buf);
}

}  // namespace detail

inline std::string snapshot_to_string(const Snapshot& snap) {
    const nlohmann::json payload = detail::payload_to_json(snap);
    const std::string body = payload.dump();
    nlohmann::json file{{"checksum", detail::checksum_hex(body)}, {"payload", payload}};
    return file.dump();
}

inline Snapshot snapshot_from_string(const std::string& text) {
    nlohmann::json file;
    try {
        file = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("corrupt snapshot: ") + e.what());
    }
    if (!file.contains("checksum") || !file.contains("payload"))
        throw ConfigError("corrupt snapshot: missing checksum or payload");
    const std::string body = file.at("payload").dump();
    if (detail::checksum_hex(body) != file.at("checksum").get<std::string>())
        throw ConfigError("corrupt snapshot: checksum mismatch");
    try {
        return detail::payload_from_json(file.at("payload"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("corrupt snapshot: ") + e.what());
    }
}

inline void save_snapshot(const Snapshot& snap, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write snapshot: " + path);
    out << snapshot_to_string(snap);
}

inline Snapshot load_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read snapshot: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return snapshot_from_string(buf.str());
}

}  // namespace dynsamp
