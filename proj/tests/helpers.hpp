#pragma once

// Shared fixture helpers for the unit suites: compact model construction via
// source text, plus corpus file loading relative to the repository root (the
// test working directory).

#include <string>

#include "bpvar/bpvar.hpp"

namespace testutil {

/// Parses and links an import-free source snippet.
inline bpvar::vardl::Document link_src(const std::string& source,
                                       const std::string& filename = "inline.vardl") {
    return bpvar::vardl::parse_and_link(source, filename);
}

/// Shortcut: the named process of a linked snippet.
inline bpvar::ProcessModel model_from(const std::string& source, const std::string& name) {
    return link_src(source).linked.processes.at(name);
}

/// A serial process  start -> T1 -> ... -> Tn -> end  built from task labels.
inline bpvar::ProcessModel chain(const std::vector<std::string>& labels,
                                 const std::string& id = "chain") {
    bpvar::ProcessModel m;
    m.id = id;
    m.nodes.push_back({"s", bpvar::NodeKind::start, {}, "", "", {}});
    std::string prev = "s";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::string nid = "t" + std::to_string(i);
        m.nodes.push_back({nid, bpvar::NodeKind::task, {}, labels[i], "", {}});
        m.edges.push_back({prev, nid, ""});
        prev = nid;
    }
    m.nodes.push_back({"e", bpvar::NodeKind::end, {}, "", "", {}});
    m.edges.push_back({prev, "e", ""});
    return m;
}

} // namespace testutil
