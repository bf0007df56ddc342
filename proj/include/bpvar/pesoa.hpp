#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bpvar/errors.hpp"
#include "bpvar/model.hpp"
#include "bpvar/transform.hpp"

namespace bpvar {

/// A feature diagram: a tree of named features with mandatory/optional
/// children, alternative (exactly one) and inclusive-or (at least one)
/// groups, and cross-tree requires/excludes constraints.
struct FeatureModel {
    enum class Modality { mandatory, optional, grouped };
    enum class GroupKind { alternative, or_ };

    struct Feature {
        std::string name;
        int parent = -1; // -1 only for the root
        Modality modality = Modality::mandatory;
        int group = -1; // index into groups when modality == grouped

        friend bool operator==(const Feature&, const Feature&) = default;
    };

    struct Group {
        int owner = -1; // feature the group hangs under
        GroupKind kind = GroupKind::alternative;
        std::vector<int> members;

        friend bool operator==(const Group&, const Group&) = default;
    };

    std::string name;
    std::vector<Feature> features; // index 0 = root
    std::vector<Group> groups;
    std::vector<std::pair<std::string, std::string>> requires_constraints; // a selected -> b required
    std::vector<std::pair<std::string, std::string>> excludes_constraints; // a and b never together

    int index_of(const std::string& feature) const {
        for (std::size_t i = 0; i < features.size(); ++i)
            if (features[i].name == feature) return static_cast<int>(i);
        return -1;
    }

    friend bool operator==(const FeatureModel&, const FeatureModel&) = default;
};

using FeatureSelection = std::set<std::string>;

/// Checks a selection against the diagram and returns every violated rule as
/// a human-readable string (empty = valid):
///   - selected features must exist; the root must be selected
///   - a selected feature needs its parent selected
///   - a selected feature selects its mandatory children
///   - an alternative group of a selected owner has exactly one member
///   - an or group of a selected owner has at least one member
///   - requires/excludes constraints hold
inline std::vector<std::string> validate_selection(const FeatureModel& fm, const FeatureSelection& sel) {
    std::vector<std::string> violations;

    std::set<int> chosen;
    for (const auto& name : sel) {
        const int idx = fm.index_of(name);
        if (idx < 0)
            violations.push_back("selected feature '" + name + "' does not exist in diagram '" +
                                 fm.name + "'");
        else
            chosen.insert(idx);
    }

    if (!fm.features.empty() && !chosen.count(0))
        violations.push_back("root feature '" + fm.features[0].name + "' must be selected");

    for (int idx : chosen) {
        const auto& f = fm.features[idx];
        if (f.parent >= 0 && !chosen.count(f.parent))
            violations.push_back("feature '" + f.name + "' is selected but its parent '" +
                                 fm.features[f.parent].name + "' is not");
    }

    for (std::size_t i = 0; i < fm.features.size(); ++i) {
        const auto& f = fm.features[i];
        if (f.parent < 0 || f.modality != FeatureModel::Modality::mandatory) continue;
        if (chosen.count(f.parent) && !chosen.count(static_cast<int>(i)))
            violations.push_back("mandatory feature '" + f.name + "' is missing although '" +
                                 fm.features[f.parent].name + "' is selected");
    }

    for (const auto& g : fm.groups) {
        if (!chosen.count(g.owner)) continue;
        int picked = 0;
        for (int m : g.members)
            if (chosen.count(m)) ++picked;
        if (g.kind == FeatureModel::GroupKind::alternative && picked != 1)
            violations.push_back("alternative group under '" + fm.features[g.owner].name +
                                 "' needs exactly one member, got " + std::to_string(picked));
        if (g.kind == FeatureModel::GroupKind::or_ && picked < 1)
            violations.push_back("or group under '" + fm.features[g.owner].name +
                                 "' needs at least one member");
    }

    for (const auto& [a, b] : fm.requires_constraints)
        if (sel.count(a) && !sel.count(b))
            violations.push_back("feature '" + a + "' requires '" + b + "'");
    for (const auto& [a, b] : fm.excludes_constraints)
        if (sel.count(a) && sel.count(b))
            violations.push_back("features '" + a + "' and '" + b + "' exclude each other");

    return violations;
}

/// Every valid selection, in deterministic order. Features are toggled in
/// arena order and each complete assignment is checked by validate_selection.
inline std::vector<FeatureSelection> enumerate_selections(const FeatureModel& fm) {
    std::vector<FeatureSelection> valid;
    const std::size_t n = fm.features.size();
    if (n == 0 || n > 20) return valid;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        FeatureSelection sel;
        for (std::size_t b = 0; b < n; ++b)
            if (mask & (std::size_t{1} << b)) sel.insert(fm.features[b].name);
        if (validate_selection(fm, sel).empty()) valid.push_back(std::move(sel));
    }
    return valid;
}

/// A named replacement body for a variation point.
struct VariantDecl {
    std::string name;
    std::string of; // label of the variation point it replaces
    ProcessModel fragment;
    bool is_default = false;

    friend bool operator==(const VariantDecl&, const VariantDecl&) = default;
};

/// What a selected feature does to one annotated node.
struct FeatureBinding {
    enum class Kind { variant, null_binding, keep, param };

    Kind kind = Kind::variant;
    std::string target;  // annotated node label
    std::string variant; // kind == variant
    std::string attr, value; // kind == param

    friend bool operator==(const FeatureBinding&, const FeatureBinding&) = default;
};

/// A base process annotated with variability stereotypes plus the feature
/// diagram and the bindings that connect features to annotations:
///   variation points are replaced by a variant chosen through bindings,
///   optional nodes survive only when a selected feature keeps them,
///   null-capable nodes disappear when a selected feature binds them to null,
///   parameterised nodes take attribute values from selected features.
struct StereotypedModel {
    std::string name;
    ProcessModel base;
    FeatureModel features;
    std::set<std::string> variation_points;
    std::set<std::string> optionals;
    std::set<std::string> null_capable;
    std::map<std::string, std::set<std::string>> param_attrs; // label -> attribute names
    std::vector<VariantDecl> variants;
    std::map<std::string, std::vector<FeatureBinding>> bindings; // feature -> bindings

    friend bool operator==(const StereotypedModel&, const StereotypedModel&) = default;
};

struct ResolveResult {
    ProcessModel model;
    std::vector<std::string> notes; // which variant/keep/null/param decisions fired
};

/// Resolves the stereotyped model for one feature selection. Deterministic:
/// variation points, optionals and null-capable nodes are processed in sorted
/// label order. Throws:
///   InvalidSelection     - the selection violates the feature diagram
///   ConflictingBindings  - selected features demand different variants
///   UnboundVariationPoint- no binding and no default variant applies
///   InvalidResult        - the resolved model fails structural validation
inline ResolveResult resolve(const StereotypedModel& sm, const FeatureSelection& sel) {
    const auto violations = validate_selection(sm.features, sel);
    if (!violations.empty()) {
        std::string msg = "selection rejected by feature diagram '" + sm.features.name + "':";
        for (const auto& v : violations) msg += "\n  " + v;
        throw InvalidSelection(msg);
    }

    // Collect what the selected features ask for, per target label.
    std::map<std::string, std::set<std::string>> variant_requests; // vp label -> variant names
    std::set<std::string> kept, nulled;
    std::map<std::string, std::map<std::string, std::string>> params; // label -> attr -> value
    for (const auto& feature : sel) {
        auto it = sm.bindings.find(feature);
        if (it == sm.bindings.end()) continue;
        for (const auto& b : it->second) {
            switch (b.kind) {
                case FeatureBinding::Kind::variant:
                    if (!sm.variation_points.count(b.target))
                        throw UnknownTarget("'" + b.target + "' is not a variation point");
                    variant_requests[b.target].insert(b.variant);
                    break;
                case FeatureBinding::Kind::keep:
                    if (!sm.optionals.count(b.target))
                        throw UnknownTarget("'" + b.target + "' is not declared optional");
                    kept.insert(b.target);
                    break;
                case FeatureBinding::Kind::null_binding:
                    if (!sm.null_capable.count(b.target))
                        throw UnknownTarget("'" + b.target + "' is not declared null-capable");
                    nulled.insert(b.target);
                    break;
                case FeatureBinding::Kind::param: params[b.target][b.attr] = b.value; break;
            }
        }
    }

    ResolveResult result;
    result.model = sm.base;
    ProcessModel& m = result.model;

    for (const auto& vp : sm.variation_points) { // std::set iterates sorted
        const VariantDecl* chosen = nullptr;
        auto req = variant_requests.find(vp);
        if (req != variant_requests.end()) {
            if (req->second.size() > 1) {
                std::string names;
                for (const auto& v : req->second) names += (names.empty() ? "" : ", ") + v;
                throw ConflictingBindings("variation point '" + vp +
                                          "' receives conflicting variants: " + names);
            }
            const std::string& want = *req->second.begin();
            for (const auto& v : sm.variants)
                if (v.of == vp && v.name == want) chosen = &v;
            if (!chosen)
                throw UnboundVariationPoint("variant '" + want + "' of '" + vp + "' is not declared");
        } else {
            for (const auto& v : sm.variants)
                if (v.of == vp && v.is_default) chosen = &v;
            if (!chosen)
                throw UnboundVariationPoint("variation point '" + vp +
                                            "' has no binding for this selection and no default variant");
        }
        replace_node_with_fragment(m, find_task_by_label(m, vp), chosen->fragment);
        result.notes.push_back("variation point '" + vp + "' -> variant '" + chosen->name + "'");
    }

    for (const auto& label : sm.optionals) {
        if (kept.count(label)) {
            result.notes.push_back("optional '" + label + "' kept");
            continue;
        }
        delete_node_with_reconnection(m, find_task_by_label(m, label));
        result.notes.push_back("optional '" + label + "' dropped");
    }

    for (const auto& label : sm.null_capable) {
        if (!nulled.count(label)) continue;
        delete_node_with_reconnection(m, find_task_by_label(m, label));
        result.notes.push_back("null-capable '" + label + "' bound to null");
    }

    for (const auto& [label, attrs] : params) {
        for (const auto& [attr, value] : attrs) {
            auto it = sm.param_attrs.find(label);
            if (it == sm.param_attrs.end() || !it->second.count(attr))
                throw UnknownTarget("attribute '" + attr + "' of '" + label +
                                    "' is not declared parameterisable");
            set_attribute(m, label, attr, value);
            result.notes.push_back("parameter '" + label + "." + attr + "' = '" + value + "'");
        }
    }

    const ValidationReport report = validate_structure(m);
    if (!report.ok())
        throw InvalidResult("resolved model violates structural rules:\n" + report.to_string());
    return result;
}

} // namespace bpvar
