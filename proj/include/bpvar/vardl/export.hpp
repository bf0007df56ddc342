#pragma once

#include <string>

#include <json.hpp>

#include "bpvar/model.hpp"
#include "bpvar/worklet.hpp"

namespace bpvar::vardl {

/// Machine-readable model export. Keys are emitted sorted, so the output is
/// byte-stable for equal models.
inline std::string model_to_json(const ProcessModel& m) {
    nlohmann::json j;
    j["format"] = "bpvar-model";
    j["version"] = 1;
    j["id"] = m.id;
    j["metadata"] = m.metadata;
    j["nodes"] = nlohmann::json::array();
    for (const auto& n : m.nodes) {
        nlohmann::json jn;
        jn["id"] = n.id;
        jn["kind"] = to_string(n.kind);
        if (n.gateway) jn["gateway"] = to_string(*n.gateway);
        jn["label"] = n.label;
        if (!n.role.empty()) jn["role"] = n.role;
        if (!n.attrs.empty()) jn["attrs"] = n.attrs;
        j["nodes"].push_back(std::move(jn));
    }
    j["edges"] = nlohmann::json::array();
    for (const auto& e : m.edges) {
        nlohmann::json je;
        je["from"] = e.from;
        je["to"] = e.to;
        if (!e.guard.empty()) je["guard"] = e.guard;
        j["edges"].push_back(std::move(je));
    }
    return j.dump(2) + "\n";
}

/// Machine-readable execution log export.
inline std::string caselog_to_json(const CaseLog& log) {
    nlohmann::json j;
    j["format"] = "bpvar-caselog";
    j["version"] = 1;
    j["trace"] = log.trace;
    j["events"] = nlohmann::json::array();
    for (const auto& e : log.events) {
        nlohmann::json je;
        je["kind"] = e.kind;
        if (!e.task.empty()) je["task"] = e.task;
        if (!e.worklet.empty()) je["worklet"] = e.worklet;
        if (!e.rdr_path.empty()) je["rdr_path"] = e.rdr_path;
        j["events"].push_back(std::move(je));
    }
    return j.dump(2) + "\n";
}

} // namespace bpvar::vardl
