// World state: nodes in a 2-D social space, drifting group centers, and
// undirected links with scheduled expiry. All simulation layers mutate one
// World owned by a single replicate.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "dynsamp/common.hpp"

namespace dynsamp {

struct GroupState {
    GroupId id = 0;
    Vec2 center;
    int target_size = 0;
};

struct Node {
    NodeId id = 0;
    Vec2 pos;
    GroupId group = 0;
    Sex sex = Sex::F;
    Step born_at = 0;
    std::vector<NodeId> neighbors;  // sorted ascending

    int degree() const { return static_cast<int>(neighbors.size()); }
};

// Canonical unordered pair, a < b.
struct LinkKey {
    NodeId a = 0;
    NodeId b = 0;

    LinkKey() = default;
    LinkKey(NodeId i, NodeId j) : a(std::min(i, j)), b(std::max(i, j)) {}
    friend auto operator<=>(const LinkKey&, const LinkKey&) = default;
};

struct Link {
    Step formed_at = 0;
    Step expires_at = 0;
};

enum class RemovalCause : std::uint8_t { Death = 0, Emigration = 1 };

struct NodeLifeRecord {
    NodeId id = 0;
    Step born_at = 0;
    Step removed_at = 0;
    RemovalCause cause = RemovalCause::Death;
    int stage_at_removal = 0;  // archived epidemic stage
};

struct World {
    Step now = 0;
    NodeId next_id = 0;
    std::vector<GroupState> groups;
    std::map<NodeId, Node> nodes;
    std::map<LinkKey, Link> links;
    std::vector<NodeLifeRecord> life_log;

    bool contains(NodeId id) const { return nodes.count(id) > 0; }

    const Node& node(NodeId id) const {
        auto it = nodes.find(id);
        if (it == nodes.end()) throw ContractError("unknown node id " + std::to_string(id));
        return it->second;
    }

    Node& node(NodeId id) {
        auto it = nodes.find(id);
        if (it == nodes.end()) throw ContractError("unknown node id " + std::to_string(id));
        return it->second;
    }

    NodeId add_node(Vec2 pos, GroupId group, Sex sex, Step born_at) {
        NodeId id = next_id++;
        Node n;
        n.id = id;
        n.pos = pos;
        n.group = group;
        n.sex = sex;
        n.born_at = born_at;
        nodes.emplace(id, std::move(n));
        return id;
    }

    bool has_link(NodeId i, NodeId j) const { return links.count(LinkKey(i, j)) > 0; }

    void add_link(NodeId i, NodeId j, Step formed_at, Step expires_at) {
        if (i == j) throw ContractError("self-link rejected");
        auto [it, inserted] = links.emplace(LinkKey(i, j), Link{formed_at, expires_at});
        if (!inserted) throw ContractError("duplicate link rejected");
        insert_sorted(node(i).neighbors, j);
        insert_sorted(node(j).neighbors, i);
    }

    void remove_link(NodeId i, NodeId j) {
        links.erase(LinkKey(i, j));
        erase_sorted(node(i).neighbors, j);
        erase_sorted(node(j).neighbors, i);
    }

    int degree(NodeId id) const { return node(id).degree(); }

    double distance(NodeId i, NodeId j) const {
        const Vec2 d = node(i).pos - node(j).pos;
        return std::hypot(d.x, d.y);
    }

    std::size_t population() const { return nodes.size(); }

    double mean_degree() const {
        if (nodes.empty()) return 0.0;
        return 2.0 * static_cast<double>(links.size()) / static_cast<double>(nodes.size());
    }

    int group_size(GroupId g) const {
        int n = 0;
        for (const auto& [id, node] : nodes)
            if (node.group == g) ++n;
        return n;
    }

private:
    static void insert_sorted(std::vector<NodeId>& v, NodeId x) {
        v.insert(std::lower_bound(v.begin(), v.end(), x), x);
    }

    static void erase_sorted(std::vector<NodeId>& v, NodeId x) {
        auto it = std::lower_bound(v.begin(), v.end(), x);
        if (it != v.end() && *it == x) v.erase(it);
    }
};

// Consistency audit used by tests and the acceptance suite. Returns an empty
// string when the world is coherent, else a description of the first problem.
inline std::string audit_world(const World& w, double region_side) {
    for (const auto& g : w.groups) {
        if (g.center.x < 0 || g.center.x > region_side || g.center.y < 0 ||
            g.center.y > region_side)
            return "group center outside region";
    }
    for (const auto& [id, n] : w.nodes) {
        if (n.pos.x < 0 || n.pos.x > region_side || n.pos.y < 0 || n.pos.y > region_side)
            return "node position outside region";
        if (n.group < 0 || static_cast<std::size_t>(n.group) >= w.groups.size())
            return "node references unknown group";
        for (std::size_t k = 0; k + 1 < n.neighbors.size(); ++k)
            if (n.neighbors[k] >= n.neighbors[k + 1]) return "adjacency not strictly sorted";
        for (NodeId nb : n.neighbors) {
            if (nb == id) return "self-link in adjacency";
            if (!w.contains(nb)) return "adjacency references removed node";
            if (!w.has_link(id, nb)) return "adjacency without matching link";
        }
    }
    std::size_t adjacency_total = 0;
    for (const auto& [id, n] : w.nodes) adjacency_total += n.neighbors.size();
    if (adjacency_total != 2 * w.links.size()) return "adjacency/link count mismatch";
    for (const auto& [key, link] : w.links) {
        if (key.a == key.b) return "self-link stored";
        if (!w.contains(key.a) || !w.contains(key.b)) return "link references removed node";
        if (link.expires_at <= link.formed_at) return "non-positive link duration";
    }
    return {};
}

}  // namespace dynsamp
