#pragma once

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "bpvar/model.hpp"

namespace bpvar::vardl {

namespace detail {

inline std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

} // namespace detail

/// Graphviz rendering: deterministic (nodes by id, edges by endpoints),
/// left-to-right layout, one shape per node kind.
inline std::string to_dot(const ProcessModel& m) {
    std::vector<const Node*> nodes;
    nodes.reserve(m.nodes.size());
    for (const auto& n : m.nodes) nodes.push_back(&n);
    std::sort(nodes.begin(), nodes.end(),
              [](const Node* a, const Node* b) { return a->id < b->id; });

    std::vector<const Edge*> edges;
    edges.reserve(m.edges.size());
    for (const auto& e : m.edges) edges.push_back(&e);
    std::sort(edges.begin(), edges.end(), [](const Edge* a, const Edge* b) {
        return std::tie(a->from, a->to, a->guard) < std::tie(b->from, b->to, b->guard);
    });

    std::ostringstream out;
    out << "digraph \"" << detail::dot_escape(m.id) << "\" {\n";
    out << "  rankdir=LR;\n";
    for (const Node* n : nodes) {
        std::string shape;
        std::string label = n->label.empty() ? n->id : n->label;
        switch (n->kind) {
            case NodeKind::start: shape = "circle"; break;
            case NodeKind::end: shape = "doublecircle"; break;
            case NodeKind::task: shape = "box"; break;
            case NodeKind::event: shape = "ellipse"; break;
            case NodeKind::gateway:
                shape = "diamond";
                label = *n->gateway == GatewayKind::and_   ? "AND"
                        : *n->gateway == GatewayKind::xor_ ? "XOR"
                                                           : "OR";
                break;
        }
        out << "  \"" << detail::dot_escape(n->id) << "\" [shape=" << shape << ", label=\""
            << detail::dot_escape(label) << "\"];\n";
    }
    for (const Edge* e : edges) {
        out << "  \"" << detail::dot_escape(e->from) << "\" -> \"" << detail::dot_escape(e->to)
            << "\"";
        if (!e->guard.empty()) out << " [label=\"" << detail::dot_escape(e->guard) << "\"]";
        out << ";\n";
    }
    out << "}\n";
    return out.str();
}

} // namespace bpvar::vardl
