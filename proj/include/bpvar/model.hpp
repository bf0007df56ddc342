#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bpvar/errors.hpp"

namespace bpvar {

enum class NodeKind { task, event, gateway, start, end };
enum class GatewayKind { and_, xor_, or_ };

inline const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::task: return "task";
        case NodeKind::event: return "event";
        case NodeKind::gateway: return "gateway";
        case NodeKind::start: return "start";
        case NodeKind::end: return "end";
    }
    return "?";
}

inline const char* to_string(GatewayKind k) {
    switch (k) {
        case GatewayKind::and_: return "and";
        case GatewayKind::xor_: return "xor";
        case GatewayKind::or_: return "or";
    }
    return "?";
}

/// A node of a process graph. `gateway` is set iff kind == gateway.
/// `label` is the display name used by every variability mechanism to address
/// nodes; gateways are routing elements and normally carry no label.
struct Node {
    std::string id;
    NodeKind kind = NodeKind::task;
    std::optional<GatewayKind> gateway;
    std::string label;
    std::string role;                        // empty = unassigned
    std::map<std::string, std::string> attrs;

    friend bool operator==(const Node&, const Node&) = default;
};

/// Directed control-flow edge. `guard` is an optional condition written on the
/// edge; the trace oracle treats it as opaque, the case simulator evaluates it.
struct Edge {
    std::string from;
    std::string to;
    std::string guard;                       // empty = unguarded

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// One business-process model: a directed graph of tasks, events and gateways
/// with exactly one start node and at least one end node. Plain value type;
/// every engine in this library transforms models purely.
struct ProcessModel {
    std::string id;
    std::map<std::string, std::string> metadata;
    std::vector<Node> nodes;
    std::vector<Edge> edges;

    const Node* find_node(const std::string& node_id) const {
        for (const auto& n : nodes)
            if (n.id == node_id) return &n;
        return nullptr;
    }

    Node* find_node(const std::string& node_id) {
        for (auto& n : nodes)
            if (n.id == node_id) return &n;
        return nullptr;
    }

    /// First task/event whose label matches. Gateways are not addressable by
    /// label (they are anonymous routing elements).
    const Node* find_by_label(const std::string& label) const {
        for (const auto& n : nodes)
            if ((n.kind == NodeKind::task || n.kind == NodeKind::event) && n.label == label)
                return &n;
        return nullptr;
    }

    Node* find_by_label(const std::string& label) {
        return const_cast<Node*>(std::as_const(*this).find_by_label(label));
    }

    std::vector<std::string> predecessors(const std::string& node_id) const {
        std::vector<std::string> out;
        for (const auto& e : edges)
            if (e.to == node_id) out.push_back(e.from);
        return out;
    }

    std::vector<std::string> successors(const std::string& node_id) const {
        std::vector<std::string> out;
        for (const auto& e : edges)
            if (e.from == node_id) out.push_back(e.to);
        return out;
    }

    bool has_edge(const std::string& from, const std::string& to) const {
        for (const auto& e : edges)
            if (e.from == from && e.to == to) return true;
        return false;
    }

    /// Node id that does not collide with any existing one. Tries `base`
    /// first, then base_2, base_3, ...
    std::string fresh_id(const std::string& base) const {
        if (!find_node(base)) return base;
        for (int i = 2;; ++i) {
            std::string cand = base + "_" + std::to_string(i);
            if (!find_node(cand)) return cand;
        }
    }

    friend bool operator==(const ProcessModel&, const ProcessModel&) = default;
};

/// One violated structural rule. `subject` is the node id, "from->to" for an
/// edge, or the model id for model-level rules.
struct Violation {
    std::string subject;
    std::string rule;
    std::string detail;

    friend bool operator==(const Violation&, const Violation&) = default;
    friend auto operator<=>(const Violation&, const Violation&) = default;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }

    std::string to_string() const {
        std::string out;
        for (const auto& v : violations) {
            out += v.subject + ": " + v.rule;
            if (!v.detail.empty()) out += " (" + v.detail + ")";
            out += "\n";
        }
        return out;
    }
};

/// Checks every structural invariant of a process model:
///   - node ids unique, edge endpoints exist, no self-loop edges
///   - exactly one start node, at least one end node
///   - every node lies on some directed start-to-end path
///   - gateways branch or merge (fan-in > 1 xor fan-out > 1)
///   - tasks, events, start and end have fan-in <= 1 and fan-out <= 1
/// The report is deterministic: violations sorted by subject, then rule.
inline ValidationReport validate_structure(const ProcessModel& m) {
    ValidationReport report;
    auto add = [&](std::string subject, std::string rule, std::string detail) {
        report.violations.push_back({std::move(subject), std::move(rule), std::move(detail)});
    };

    std::set<std::string> ids;
    std::set<std::string> dup_reported;
    for (const auto& n : m.nodes) {
        if (!ids.insert(n.id).second && dup_reported.insert(n.id).second)
            add(n.id, "duplicate-node-id", "node id declared more than once");
    }

    for (const auto& e : m.edges) {
        const std::string subject = e.from + "->" + e.to;
        if (!ids.count(e.from) || !ids.count(e.to)) {
            add(subject, "dangling-target", "edge endpoint is not a declared node");
            continue;
        }
        if (e.from == e.to) add(subject, "self-loop", "edge connects a node to itself");
    }

    std::map<std::string, int> fan_in, fan_out;
    for (const auto& e : m.edges) {
        if (!ids.count(e.from) || !ids.count(e.to) || e.from == e.to) continue;
        ++fan_out[e.from];
        ++fan_in[e.to];
    }

    int starts = 0, ends = 0;
    for (const auto& n : m.nodes) {
        if (n.kind == NodeKind::start) ++starts;
        if (n.kind == NodeKind::end) ++ends;
    }
    if (starts != 1) add(m.id, "start-count", "expected exactly 1 start node, found " + std::to_string(starts));
    if (ends < 1) add(m.id, "end-count", "expected at least 1 end node");

    for (const auto& n : m.nodes) {
        const int fi = fan_in.count(n.id) ? fan_in.at(n.id) : 0;
        const int fo = fan_out.count(n.id) ? fan_out.at(n.id) : 0;
        if (n.kind == NodeKind::gateway) {
            if (!n.gateway) add(n.id, "gateway-kind", "gateway node without a gateway kind");
            if (!((fi > 1) != (fo > 1)))
                add(n.id, "gateway-fan",
                    "gateway must either merge or branch (fan-in " + std::to_string(fi) +
                        ", fan-out " + std::to_string(fo) + ")");
        } else {
            if (n.gateway) add(n.id, "gateway-kind", "non-gateway node carries a gateway kind");
            if (fi > 1) add(n.id, "task-fan-in", "fan-in " + std::to_string(fi) + " exceeds 1");
            if (fo > 1) add(n.id, "task-fan-out", "fan-out " + std::to_string(fo) + " exceeds 1");
        }
    }

    // Reachability: forward from the start node, backward from every end node.
    if (starts == 1 && ends >= 1) {
        std::map<std::string, std::vector<std::string>> succ, pred;
        for (const auto& e : m.edges) {
            if (!ids.count(e.from) || !ids.count(e.to)) continue;
            succ[e.from].push_back(e.to);
            pred[e.to].push_back(e.from);
        }
        auto flood = [&](std::vector<std::string> frontier,
                         const std::map<std::string, std::vector<std::string>>& next) {
            std::set<std::string> seen(frontier.begin(), frontier.end());
            while (!frontier.empty()) {
                std::string cur = frontier.back();
                frontier.pop_back();
                auto it = next.find(cur);
                if (it == next.end()) continue;
                for (const auto& n : it->second)
                    if (seen.insert(n).second) frontier.push_back(n);
            }
            return seen;
        };
        std::vector<std::string> start_ids, end_ids;
        for (const auto& n : m.nodes) {
            if (n.kind == NodeKind::start) start_ids.push_back(n.id);
            if (n.kind == NodeKind::end) end_ids.push_back(n.id);
        }
        const auto from_start = flood(start_ids, succ);
        const auto to_end = flood(end_ids, pred);
        for (const auto& n : m.nodes)
            if (!from_start.count(n.id) || !to_end.count(n.id))
                add(n.id, "orphan", "node lies on no start-to-end path");
    }

    std::sort(report.violations.begin(), report.violations.end());
    return report;
}

/// True if the node graph contains a directed cycle (self-loops included).
inline bool has_cycle(const ProcessModel& m) {
    std::map<std::string, int> indeg;
    std::map<std::string, std::vector<std::string>> succ;
    for (const auto& n : m.nodes) indeg[n.id] = 0;
    for (const auto& e : m.edges) {
        if (!indeg.count(e.from) || !indeg.count(e.to)) continue;
        succ[e.from].push_back(e.to);
        ++indeg[e.to];
    }
    std::vector<std::string> queue;
    for (const auto& [id, d] : indeg)
        if (d == 0) queue.push_back(id);
    std::size_t seen = 0;
    while (!queue.empty()) {
        std::string cur = queue.back();
        queue.pop_back();
        ++seen;
        for (const auto& nxt : succ[cur])
            if (--indeg[nxt] == 0) queue.push_back(nxt);
    }
    return seen != indeg.size();
}

} // namespace bpvar
