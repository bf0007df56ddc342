#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bpvar/errors.hpp"
#include "bpvar/model.hpp"
#include "bpvar/rules.hpp"
#include "bpvar/transform.hpp"

namespace bpvar {

/// Context of a derivation: variable assignments describing the concrete
/// situation a variant is derived for.
using Context = std::map<std::string, std::string>;

enum class OpKind { insert, del, move, modify };
enum class Resolution { design, run };

/// One atomic change against a base model. Which fields matter depends on
/// `kind`:
///   insert: fragment + after/before anchors
///   del:    target
///   move:   target + after/before anchors
///   modify: target + attr/value
struct ChangeOperation {
    OpKind kind = OpKind::insert;
    ProcessModel fragment;
    std::string fragment_ref; // name of the process the fragment came from ("" = inline)
    std::string target;
    std::string after, before;
    std::string attr, value;

    friend bool operator==(const ChangeOperation&, const ChangeOperation&) = default;
};

/// A named, reusable bundle of change operations guarded by a context rule.
/// Options marked `run` are resolved at run time: selection reports them as
/// deferred instead of applying them during derivation.
struct Option {
    std::string name;
    std::vector<ChangeOperation> ops;
    std::optional<RuleExpr> rule;
    Resolution resolution = Resolution::design;

    std::string rule_text() const { return rule ? to_string(*rule) : std::string(); }

    friend bool operator==(const Option&, const Option&) = default;
};

struct Selection {
    std::vector<std::string> selected; // design-time options, declaration order
    std::vector<std::string> deferred; // run-time options whose rule matched
    std::vector<std::string> warnings; // unset context variables, etc.
};

/// Evaluates every option rule against the context, preserving declaration
/// order. An option is selected when its rule is absent or evaluates to true.
/// Comparisons over unset variables are false and reported as warnings.
inline Selection select_options(const std::vector<Option>& options, const Context& ctx) {
    Selection sel;
    for (const auto& opt : options) {
        bool chosen = true;
        if (opt.rule) {
            const RuleEval ev = eval_rule(*opt.rule, ctx);
            for (const auto& var : ev.unset)
                sel.warnings.push_back("option '" + opt.name + "': context variable '" + var +
                                       "' is not set; comparison treated as false");
            chosen = ev.value;
        }
        if (!chosen) continue;
        if (opt.resolution == Resolution::run)
            sel.deferred.push_back(opt.name);
        else
            sel.selected.push_back(opt.name);
    }
    return sel;
}

/// Applies one change operation to a copy of the model and validates the
/// outcome. Throws TargetNotFound / AnchorNotFound / IllegalSplice /
/// AmbiguousLabels on unresolvable references and InvalidResult when the
/// changed model violates a structural rule.
inline ProcessModel apply_operation(const ProcessModel& model, const ChangeOperation& op) {
    ProcessModel m = model;

    auto require_anchor = [&](const std::string& label) {
        try {
            find_task_by_label(m, label);
        } catch (const TargetNotFound&) {
            throw AnchorNotFound("anchor '" + label + "' not found in model '" + m.id + "'");
        }
    };

    switch (op.kind) {
        case OpKind::insert: {
            require_anchor(op.after);
            require_anchor(op.before);
            insert_between(m, op.fragment, op.after, op.before);
            break;
        }
        case OpKind::del: {
            delete_node_with_reconnection(m, find_task_by_label(m, op.target));
            break;
        }
        case OpKind::move: {
            const std::string id = find_task_by_label(m, op.target);
            const Node moved = *m.find_node(id);
            require_anchor(op.after);
            require_anchor(op.before);
            delete_node_with_reconnection(m, id);
            ProcessModel frag = single_task_fragment(moved.label, moved.attrs, moved.role);
            frag.nodes[1].kind = moved.kind;
            insert_between(m, frag, op.after, op.before);
            break;
        }
        case OpKind::modify: {
            set_attribute(m, op.target, op.attr, op.value);
            break;
        }
    }

    const ValidationReport report = validate_structure(m);
    if (!report.ok())
        throw InvalidResult("change produced an invalid model:\n" + report.to_string());
    return m;
}

/// Applies all operations of one option. Atomic: either every operation
/// succeeds and the new model is returned, or the exception of the failing
/// operation propagates (annotated with the option name and the 1-based
/// operation index) and the input model is untouched — it is never modified
/// in place.
inline ProcessModel apply_option(const ProcessModel& model, const Option& option) {
    ProcessModel m = model;
    for (std::size_t j = 0; j < option.ops.size(); ++j) {
        try {
            m = apply_operation(m, option.ops[j]);
        } catch (Error& e) {
            e.prepend_context("option '" + option.name + "' operation " + std::to_string(j + 1));
            throw;
        }
    }
    return m;
}

struct DerivationResult {
    ProcessModel model;
    std::vector<std::string> applied;  // option names, in application order
    std::vector<std::string> deferred; // run-time options awaiting execution
    std::vector<std::string> warnings;
};

namespace detail {

inline std::set<std::string> labels_deleted_by(const Option& o) {
    std::set<std::string> labels;
    for (const auto& op : o.ops)
        if (op.kind == OpKind::del) labels.insert(op.target);
    return labels;
}

inline std::set<std::string> labels_required_by(const ChangeOperation& op) {
    switch (op.kind) {
        case OpKind::insert: return {op.after, op.before};
        case OpKind::del: return {op.target};
        case OpKind::move: return {op.target, op.after, op.before};
        case OpKind::modify: return {op.target};
    }
    return {};
}

inline std::set<std::string> labels_introduced_by(const Option& o) {
    std::set<std::string> labels;
    for (const auto& op : o.ops)
        if (op.kind == OpKind::insert)
            for (const auto& n : op.fragment.nodes)
                if ((n.kind == NodeKind::task || n.kind == NodeKind::event) && !n.label.empty())
                    labels.insert(n.label);
    return labels;
}

} // namespace detail

/// Applies an explicit, ordered list of options to a base model (a left fold
/// of apply_option). Raises OrderConflict when an option needs a label that is
/// unavailable at its position in the list — either because an earlier option
/// deleted it or because only a later option introduces it. Each option is
/// atomic; errors carry the option name and operation index.
inline ProcessModel derive_variant(const ProcessModel& base, const std::vector<Option>& options) {
    ProcessModel m = base;
    std::set<std::string> deleted;
    for (std::size_t i = 0; i < options.size(); ++i) {
        const Option& opt = options[i];
        ProcessModel next = m; // option atomicity: work on a copy
        for (std::size_t j = 0; j < opt.ops.size(); ++j) {
            const auto& op = opt.ops[j];
            for (const auto& label : detail::labels_required_by(op)) {
                if (next.find_by_label(label)) continue;
                if (deleted.count(label))
                    throw OrderConflict("option '" + opt.name + "' needs label '" + label +
                                        "', which an earlier option deleted");
                for (std::size_t k = i + 1; k < options.size(); ++k)
                    if (detail::labels_introduced_by(options[k]).count(label))
                        throw OrderConflict("option '" + opt.name + "' needs label '" + label +
                                            "', which only the later option '" + options[k].name +
                                            "' introduces");
            }
            try {
                next = apply_operation(next, op);
            } catch (Error& e) {
                e.prepend_context("option '" + opt.name + "' operation " + std::to_string(j + 1));
                throw;
            }
        }
        m = std::move(next);
        for (const auto& label : detail::labels_deleted_by(opt)) deleted.insert(label);
    }
    return m;
}

/// Context-driven derivation: selects options by their rules, applies the
/// design-time ones in declaration order and reports run-time ones as
/// deferred.
inline DerivationResult derive_variant(const ProcessModel& base, const std::vector<Option>& options,
                                       const Context& ctx) {
    const Selection sel = select_options(options, ctx);

    std::vector<Option> chosen;
    for (const auto& name : sel.selected)
        for (const auto& opt : options)
            if (opt.name == name) chosen.push_back(opt);

    DerivationResult result;
    result.model = derive_variant(base, chosen);
    result.applied = sel.selected;
    result.deferred = sel.deferred;
    result.warnings = sel.warnings;
    return result;
}

} // namespace bpvar
