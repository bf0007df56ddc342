#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bpvar/errors.hpp"
#include "bpvar/isomorphism.hpp"
#include "bpvar/model.hpp"

namespace bpvar {

/// One atomic difference between two models. Nodes are addressed by a stable
/// key rather than by id, so that two models built independently still align:
/// tasks and events by label, gateways by "#gw:<id>", start/end by kind.
struct DiffEntry {
    enum class Kind { node_removed, node_added, node_changed, edge_removed, edge_added };

    Kind kind = Kind::node_added;
    std::string key;    // node key, or "<from-key> => <to-key>" for edges
    std::string detail; // human-readable explanation of the change
    Node node;          // node_added / node_changed payload (new state)
    std::string edge_from, edge_to, edge_guard; // edge payloads, endpoint keys
};

struct ModelDiff {
    std::vector<DiffEntry> entries;

    bool empty() const { return entries.empty(); }

    std::string to_string() const {
        std::string out;
        for (const auto& e : entries) {
            switch (e.kind) {
                case DiffEntry::Kind::node_removed: out += "- node " + e.key; break;
                case DiffEntry::Kind::node_added: out += "+ node " + e.key; break;
                case DiffEntry::Kind::node_changed: out += "~ node " + e.key; break;
                case DiffEntry::Kind::edge_removed: out += "- edge " + e.key; break;
                case DiffEntry::Kind::edge_added: out += "+ edge " + e.key; break;
            }
            if (!e.detail.empty()) out += ": " + e.detail;
            out += "\n";
        }
        return out;
    }
};

namespace detail {

/// Diffs address tasks and events by label, so labels must identify a node
/// uniquely within each model.
inline void require_unique_labels(const ProcessModel& m) {
    std::map<std::string, int> counts;
    for (const auto& n : m.nodes)
        if (n.kind == NodeKind::task || n.kind == NodeKind::event) ++counts[n.label];
    for (const auto& [label, c] : counts)
        if (c > 1)
            throw AmbiguousLabels("model '" + m.id + "' has " + std::to_string(c) +
                                  " tasks/events labeled '" + label +
                                  "'; diffing needs unique labels");
}

/// Stable per-node keys; duplicate labels get a #2, #3 ... suffix by id order.
inline std::map<std::string, std::string> node_keys(const ProcessModel& m) {
    std::vector<const Node*> nodes;
    for (const auto& n : m.nodes) nodes.push_back(&n);
    std::sort(nodes.begin(), nodes.end(), [](const Node* a, const Node* b) { return a->id < b->id; });

    std::map<std::string, std::string> keys;  // node id -> key
    std::map<std::string, int> used;
    for (const Node* n : nodes) {
        std::string base;
        switch (n->kind) {
            case NodeKind::start: base = "#start"; break;
            case NodeKind::end: base = "#end"; break;
            case NodeKind::gateway: base = "#gw:" + n->id; break;
            default: base = n->label; break;
        }
        int& count = used[base];
        ++count;
        keys[n->id] = count == 1 ? base : base + "#" + std::to_string(count);
    }
    return keys;
}

inline std::string describe_node_change(const Node& a, const Node& b) {
    std::vector<std::string> parts;
    if (a.role != b.role) parts.push_back("role '" + a.role + "' -> '" + b.role + "'");
    std::set<std::string> keys;
    for (const auto& [k, v] : a.attrs) { (void)v; keys.insert(k); }
    for (const auto& [k, v] : b.attrs) { (void)v; keys.insert(k); }
    for (const auto& k : keys) {
        auto ia = a.attrs.find(k);
        auto ib = b.attrs.find(k);
        if (ia == a.attrs.end()) parts.push_back("attr " + k + " added '" + ib->second + "'");
        else if (ib == b.attrs.end()) parts.push_back("attr " + k + " removed");
        else if (ia->second != ib->second)
            parts.push_back("attr " + k + " '" + ia->second + "' -> '" + ib->second + "'");
    }
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ", ";
        out += parts[i];
    }
    return out;
}

} // namespace detail

/// Computes the change set that turns `a` into `b`, keyed by stable node keys.
/// Isomorphic models (attributes included) produce an empty diff regardless of
/// node ids. Entries are ordered: removed edges, removed nodes, added nodes,
/// changed nodes, added edges — the order `apply_diff` replays them in.
inline ModelDiff diff_models(const ProcessModel& a, const ProcessModel& b) {
    detail::require_unique_labels(a);
    detail::require_unique_labels(b);
    ModelDiff d;
    if (isomorphic(a, b)) return d;

    const auto ka = detail::node_keys(a);
    const auto kb = detail::node_keys(b);

    std::map<std::string, const Node*> by_key_a, by_key_b;
    for (const auto& n : a.nodes) by_key_a[ka.at(n.id)] = &n;
    for (const auto& n : b.nodes) by_key_b[kb.at(n.id)] = &n;

    using EdgeKey = std::pair<std::string, std::string>; // "from => to [guard]" sort key, guard
    std::map<EdgeKey, std::pair<std::string, std::string>> edges_a, edges_b; // key -> (from,to)
    for (const auto& e : a.edges)
        edges_a[{ka.at(e.from) + " => " + ka.at(e.to), e.guard}] = {ka.at(e.from), ka.at(e.to)};
    for (const auto& e : b.edges)
        edges_b[{kb.at(e.from) + " => " + kb.at(e.to), e.guard}] = {kb.at(e.from), kb.at(e.to)};

    for (const auto& [key, ends] : edges_a) {
        if (edges_b.count(key)) continue;
        DiffEntry entry;
        entry.kind = DiffEntry::Kind::edge_removed;
        entry.key = key.first + (key.second.empty() ? "" : " [" + key.second + "]");
        entry.edge_from = ends.first;
        entry.edge_to = ends.second;
        entry.edge_guard = key.second;
        d.entries.push_back(std::move(entry));
    }
    for (const auto& [key, n] : by_key_a) {
        if (by_key_b.count(key)) continue;
        DiffEntry entry;
        entry.kind = DiffEntry::Kind::node_removed;
        entry.key = key;
        d.entries.push_back(std::move(entry));
    }
    for (const auto& [key, n] : by_key_b) {
        if (by_key_a.count(key)) continue;
        DiffEntry entry;
        entry.kind = DiffEntry::Kind::node_added;
        entry.key = key;
        entry.node = *n;
        entry.detail = to_string(n->kind);
        d.entries.push_back(std::move(entry));
    }
    for (const auto& [key, n] : by_key_a) {
        auto it = by_key_b.find(key);
        if (it == by_key_b.end()) continue;
        const Node* m = it->second;
        if (n->kind == m->kind && n->gateway == m->gateway && n->label == m->label &&
            n->role == m->role && n->attrs == m->attrs)
            continue;
        DiffEntry entry;
        entry.kind = DiffEntry::Kind::node_changed;
        entry.key = key;
        entry.node = *m;
        entry.detail = detail::describe_node_change(*n, *m);
        d.entries.push_back(std::move(entry));
    }
    for (const auto& [key, ends] : edges_b) {
        if (edges_a.count(key)) continue;
        DiffEntry entry;
        entry.kind = DiffEntry::Kind::edge_added;
        entry.key = key.first + (key.second.empty() ? "" : " [" + key.second + "]");
        entry.edge_from = ends.first;
        entry.edge_to = ends.second;
        entry.edge_guard = key.second;
        d.entries.push_back(std::move(entry));
    }
    return d;
}

/// Replays a diff onto a model. The result of `apply_diff(a, diff_models(a, b))`
/// is isomorphic to `b`. Throws TargetNotFound when a key does not resolve.
inline ProcessModel apply_diff(const ProcessModel& a, const ModelDiff& d) {
    detail::require_unique_labels(a);
    ProcessModel m = a;

    auto keys = detail::node_keys(m);
    std::map<std::string, std::string> key_to_id;
    for (const auto& [id, key] : keys) key_to_id[key] = id;

    auto resolve = [&](const std::string& key) -> std::string {
        auto it = key_to_id.find(key);
        if (it == key_to_id.end()) throw TargetNotFound("diff refers to unknown node key '" + key + "'");
        return it->second;
    };

    for (const auto& entry : d.entries) {
        switch (entry.kind) {
            case DiffEntry::Kind::edge_removed: {
                const std::string from = resolve(entry.edge_from);
                const std::string to = resolve(entry.edge_to);
                auto it = std::find_if(m.edges.begin(), m.edges.end(), [&](const Edge& e) {
                    return e.from == from && e.to == to && e.guard == entry.edge_guard;
                });
                if (it == m.edges.end())
                    throw TargetNotFound("diff removes missing edge '" + entry.key + "'");
                m.edges.erase(it);
                break;
            }
            case DiffEntry::Kind::node_removed: {
                const std::string id = resolve(entry.key);
                std::erase_if(m.nodes, [&](const Node& n) { return n.id == id; });
                std::erase_if(m.edges, [&](const Edge& e) { return e.from == id || e.to == id; });
                key_to_id.erase(entry.key);
                break;
            }
            case DiffEntry::Kind::node_added: {
                Node n = entry.node;
                n.id = m.fresh_id(n.id);
                key_to_id[entry.key] = n.id;
                m.nodes.push_back(std::move(n));
                break;
            }
            case DiffEntry::Kind::node_changed: {
                Node* n = m.find_node(resolve(entry.key));
                const std::string id = n->id;
                *n = entry.node;
                n->id = id;
                break;
            }
            case DiffEntry::Kind::edge_added: {
                m.edges.push_back({resolve(entry.edge_from), resolve(entry.edge_to), entry.edge_guard});
                break;
            }
        }
    }
    return m;
}

} // namespace bpvar
