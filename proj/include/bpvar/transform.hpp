#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bpvar/errors.hpp"
#include "bpvar/model.hpp"

namespace bpvar {

/// Resolves a task/event label to its node id. Labels are how every
/// variability mechanism addresses nodes, so they must match exactly one node.
inline std::string find_task_by_label(const ProcessModel& m, const std::string& label) {
    std::vector<std::string> hits;
    for (const auto& n : m.nodes)
        if ((n.kind == NodeKind::task || n.kind == NodeKind::event) && n.label == label)
            hits.push_back(n.id);
    if (hits.empty())
        throw TargetNotFound("no task or event labelled '" + label + "' in model '" + m.id + "'");
    if (hits.size() > 1)
        throw AmbiguousLabels("label '" + label + "' matches " + std::to_string(hits.size()) +
                              " nodes in model '" + m.id + "'");
    return hits.front();
}

namespace detail {

/// Copies every interior node of `fragment` (start/end stripped) into `m`
/// under fresh ids and returns the fragment's entry node id, exit node id and
/// the id remapping. A fragment must have exactly one start with one
/// successor and exactly one end with one predecessor; a bare start->end
/// fragment is empty (entry/exit come back empty).
struct FragmentCopy {
    std::string entry, exit;
    bool empty = false;
};

inline FragmentCopy copy_fragment_into(ProcessModel& m, const ProcessModel& fragment) {
    const Node* fstart = nullptr;
    const Node* fend = nullptr;
    for (const auto& n : fragment.nodes) {
        if (n.kind == NodeKind::start) {
            if (fstart) throw IllegalSplice("fragment '" + fragment.id + "' has multiple start nodes");
            fstart = &n;
        }
        if (n.kind == NodeKind::end) {
            if (fend) throw IllegalSplice("fragment '" + fragment.id + "' has multiple end nodes");
            fend = &n;
        }
    }
    if (!fstart || !fend)
        throw IllegalSplice("fragment '" + fragment.id + "' needs exactly one start and one end node");

    const auto entries = fragment.successors(fstart->id);
    const auto exits = fragment.predecessors(fend->id);
    if (entries.size() != 1 || exits.size() != 1)
        throw IllegalSplice("fragment '" + fragment.id + "' must have a single entry and a single exit");

    FragmentCopy out;
    if (entries.front() == fend->id) {
        out.empty = true;
        return out;
    }

    std::map<std::string, std::string> remap;
    for (const auto& n : fragment.nodes) {
        if (n.kind == NodeKind::start || n.kind == NodeKind::end) continue;
        Node copy = n;
        copy.id = m.fresh_id(n.id);
        remap[n.id] = copy.id;
        m.nodes.push_back(std::move(copy));
    }
    for (const auto& e : fragment.edges) {
        if (e.from == fstart->id || e.to == fend->id) continue;
        m.edges.push_back({remap.at(e.from), remap.at(e.to), e.guard});
    }
    out.entry = remap.at(entries.front());
    out.exit = remap.at(exits.front());
    return out;
}

inline void add_edge_unless_present(ProcessModel& m, const std::string& from, const std::string& to,
                                    const std::string& guard) {
    if (from == to) return;
    for (const auto& e : m.edges)
        if (e.from == from && e.to == to && e.guard == guard) return;
    m.edges.push_back({from, to, guard});
}

inline bool reachable(const ProcessModel& m, const std::string& from, const std::string& to) {
    std::set<std::string> seen{from};
    std::vector<std::string> frontier{from};
    while (!frontier.empty()) {
        std::string cur = frontier.back();
        frontier.pop_back();
        if (cur == to) return true;
        for (const auto& e : m.edges)
            if (e.from == cur && seen.insert(e.to).second) frontier.push_back(e.to);
    }
    return false;
}

/// Number of simple paths from `from` to `to` (capped at 2 — callers only
/// care about 0, 1 or "many"), plus the path itself when it is unique.
inline std::size_t count_paths(const ProcessModel& m, const std::string& from, const std::string& to,
                               std::vector<std::string>* unique_path) {
    if (has_cycle(m))
        throw CyclicModel("model '" + m.id + "' contains a cycle; path search requires acyclic models");
    std::map<std::string, std::size_t> memo;
    auto count = [&](auto&& self, const std::string& at) -> std::size_t {
        if (at == to) return 1;
        auto it = memo.find(at);
        if (it != memo.end()) return it->second;
        std::size_t total = 0;
        for (const auto& e : m.edges) {
            if (e.from != at) continue;
            total += self(self, e.to);
            if (total >= 2) break;
        }
        memo[at] = std::min<std::size_t>(total, 2);
        return memo[at];
    };
    const std::size_t n = count(count, from);
    if (n == 1 && unique_path) {
        unique_path->clear();
        unique_path->push_back(from);
        std::string at = from;
        while (at != to) {
            for (const auto& e : m.edges) {
                if (e.from != at) continue;
                const std::size_t c = at == e.from && e.to == to ? 1 : count(count, e.to);
                if (c > 0) {
                    at = e.to;
                    unique_path->push_back(at);
                    break;
                }
            }
        }
    }
    return n;
}

} // namespace detail

/// Replaces edge (from, to, guard) with  from -> fragment -> to.  The guard of
/// the replaced edge stays on its source side (from -> entry), so a guard
/// written on a gateway branch keeps guarding that branch. An empty fragment
/// leaves the model unchanged.
inline void splice_fragment_on_edge(ProcessModel& m, const Edge& target, const ProcessModel& fragment) {
    // `target` may alias an element of m.edges, which the fragment copy below
    // reallocates; take the key by value before touching the vector.
    const std::string from = target.from;
    const std::string to = target.to;
    const std::string guard = target.guard;
    auto match = [&](const Edge& e) { return e.from == from && e.to == to && e.guard == guard; };
    if (std::find_if(m.edges.begin(), m.edges.end(), match) == m.edges.end())
        throw IllegalSplice("edge " + from + " -> " + to + " not found in model '" + m.id + "'");

    const detail::FragmentCopy copy = detail::copy_fragment_into(m, fragment);
    if (copy.empty) return;

    m.edges.erase(std::find_if(m.edges.begin(), m.edges.end(), match));
    m.edges.push_back({from, copy.entry, guard});
    m.edges.push_back({copy.exit, to, ""});
}

/// Inserts a fragment between two labelled anchors. A direct edge between the
/// anchors is the insertion point when one exists; otherwise the anchors must
/// be connected by exactly one simple path, and the fragment is spliced into
/// that path's final edge (directly before the 'before' anchor). Zero paths or
/// several paths make the insertion point ambiguous -> IllegalSplice.
inline void insert_between(ProcessModel& m, const ProcessModel& fragment, const std::string& after_label,
                           const std::string& before_label) {
    const std::string a = find_task_by_label(m, after_label);
    const std::string b = find_task_by_label(m, before_label);
    if (a == b)
        throw IllegalSplice("anchors '" + after_label + "' and '" + before_label +
                            "' resolve to the same node");

    for (const auto& e : m.edges) {
        if (e.from == a && e.to == b) {
            splice_fragment_on_edge(m, e, fragment);
            return;
        }
    }

    std::vector<std::string> path;
    const std::size_t n = detail::count_paths(m, a, b, &path);
    if (n == 0)
        throw IllegalSplice("no path from '" + after_label + "' to '" + before_label + "' in model '" +
                            m.id + "'");
    if (n > 1)
        throw IllegalSplice("insertion point between '" + after_label + "' and '" + before_label +
                            "' is ambiguous: several paths connect the anchors");

    const std::string prev = path[path.size() - 2];
    auto it = std::find_if(m.edges.begin(), m.edges.end(),
                           [&](const Edge& e) { return e.from == prev && e.to == b; });
    splice_fragment_on_edge(m, *it, fragment);
}

/// Removes redundant pass-through gateways (fan-in 1 and fan-out 1), splicing
/// their single predecessor to their single successor. Runs to a fixed point.
inline void dissolve_trivial_gateways(ProcessModel& m) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& n : m.nodes) {
            if (n.kind != NodeKind::gateway) continue;
            std::vector<const Edge*> ins, outs;
            for (const auto& e : m.edges) {
                if (e.to == n.id) ins.push_back(&e);
                if (e.from == n.id) outs.push_back(&e);
            }
            if (ins.size() != 1 || outs.size() != 1) continue;
            const std::string from = ins.front()->from;
            const std::string to = outs.front()->to;
            const std::string guard = !ins.front()->guard.empty() ? ins.front()->guard : outs.front()->guard;
            const std::string id = n.id;
            std::erase_if(m.edges, [&](const Edge& e) { return e.from == id || e.to == id; });
            std::erase_if(m.nodes, [&](const Node& node) { return node.id == id; });
            detail::add_edge_unless_present(m, from, to, guard);
            changed = true;
            break;
        }
    }
}

/// What happens to a branch that becomes empty when its only node is deleted.
///   keep_skip_edges: only an empty branch between two and-gateways is pruned
///     (a parallel branch doing nothing is meaningless); an empty xor/or
///     branch is kept — it now reads as a deliberate skip path.
///   prune_all: an empty branch between two same-role gateways disappears
///     whenever the gateways stay connected through their other branches —
///     deletion removes the alternative itself, not just its content.
enum class EmptyBranchPolicy { keep_skip_edges, prune_all };

/// Deletes a task/event and reconnects every predecessor to every successor.
/// An inherited guard survives on the reconnecting edge (predecessor side
/// wins). Empty branches left behind are handled per `policy`; pass-through
/// gateways left behind are dissolved.
inline void delete_node_with_reconnection(ProcessModel& m, const std::string& node_id,
                                          EmptyBranchPolicy policy = EmptyBranchPolicy::keep_skip_edges) {
    const Node* victim = m.find_node(node_id);
    if (!victim) throw TargetNotFound("node '" + node_id + "' not found in model '" + m.id + "'");

    struct Stub {
        std::string node;
        std::string guard;
    };
    std::vector<Stub> preds, succs;
    for (const auto& e : m.edges) {
        if (e.to == node_id) preds.push_back({e.from, e.guard});
        if (e.from == node_id) succs.push_back({e.to, e.guard});
    }

    std::erase_if(m.edges, [&](const Edge& e) { return e.from == node_id || e.to == node_id; });
    std::erase_if(m.nodes, [&](const Node& n) { return n.id == node_id; });

    std::vector<Edge> added;
    for (const auto& p : preds) {
        for (const auto& s : succs) {
            if (p.node == s.node) continue;
            const std::string guard = !p.guard.empty() ? p.guard : s.guard;
            if (m.has_edge(p.node, s.node)) continue;
            detail::add_edge_unless_present(m, p.node, s.node, guard);
            added.push_back({p.node, s.node, guard});
        }
    }

    // Drop empty branches between gateways when the policy says so and the
    // gateways remain connected through their other branches.
    for (const auto& e : added) {
        const Node* u = m.find_node(e.from);
        const Node* v = m.find_node(e.to);
        if (!u || !v) continue;
        if (u->kind != NodeKind::gateway || v->kind != NodeKind::gateway) continue;
        if (policy == EmptyBranchPolicy::keep_skip_edges &&
            (u->gateway != GatewayKind::and_ || v->gateway != GatewayKind::and_))
            continue;
        if (policy == EmptyBranchPolicy::prune_all && u->gateway != v->gateway) continue;
        auto it = std::find_if(m.edges.begin(), m.edges.end(), [&](const Edge& x) {
            return x.from == e.from && x.to == e.to && x.guard == e.guard;
        });
        if (it == m.edges.end()) continue;
        const Edge saved = *it;
        m.edges.erase(it);
        if (!detail::reachable(m, saved.from, saved.to)) m.edges.push_back(saved);
    }

    dissolve_trivial_gateways(m);
}

/// Sets (or overwrites) one attribute of the node with the given label.
inline void set_attribute(ProcessModel& m, const std::string& label, const std::string& attr,
                          const std::string& value) {
    Node* n = m.find_node(find_task_by_label(m, label));
    n->attrs[attr] = value;
}

/// Replaces a task/event node by a fragment: the node is removed and the
/// fragment takes its place between the node's predecessor and successor. An
/// empty fragment reduces to deletion with reconnection.
inline void replace_node_with_fragment(ProcessModel& m, const std::string& node_id,
                                       const ProcessModel& fragment) {
    const Node* victim = m.find_node(node_id);
    if (!victim) throw TargetNotFound("node '" + node_id + "' not found in model '" + m.id + "'");
    if (victim->kind != NodeKind::task && victim->kind != NodeKind::event)
        throw IllegalSplice("only tasks and events can be replaced by fragments");

    const auto preds = m.predecessors(node_id);
    const auto succs = m.successors(node_id);
    if (preds.size() > 1 || succs.size() > 1)
        throw IllegalSplice("node '" + node_id + "' has multiple predecessors or successors");

    const detail::FragmentCopy copy = detail::copy_fragment_into(m, fragment);
    if (copy.empty) {
        delete_node_with_reconnection(m, node_id);
        return;
    }

    std::string pred_guard, succ_guard;
    for (const auto& e : m.edges) {
        if (e.to == node_id && !preds.empty() && e.from == preds.front()) pred_guard = e.guard;
        if (e.from == node_id && !succs.empty() && e.to == succs.front()) succ_guard = e.guard;
    }
    std::erase_if(m.edges, [&](const Edge& e) { return e.from == node_id || e.to == node_id; });
    std::erase_if(m.nodes, [&](const Node& n) { return n.id == node_id; });
    if (!preds.empty()) m.edges.push_back({preds.front(), copy.entry, pred_guard});
    if (!succs.empty()) m.edges.push_back({copy.exit, succs.front(), succ_guard});
}

/// Wraps a single task fragment around a label: a convenience used by tests.
inline ProcessModel single_task_fragment(const std::string& label,
                                         const std::map<std::string, std::string>& attrs = {},
                                         const std::string& role = "") {
    ProcessModel f;
    f.id = "frag_" + label;
    f.nodes.push_back({"s", NodeKind::start, std::nullopt, "", "", {}});
    Node t;
    t.id = "t";
    t.kind = NodeKind::task;
    t.label = label;
    t.role = role;
    t.attrs = attrs;
    f.nodes.push_back(std::move(t));
    f.nodes.push_back({"e", NodeKind::end, std::nullopt, "", "", {}});
    f.edges.push_back({"s", "t", ""});
    f.edges.push_back({"t", "e", ""});
    return f;
}

} // namespace bpvar
