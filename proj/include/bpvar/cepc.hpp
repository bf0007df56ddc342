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

/// Decision vocabulary for configurable functions.
enum class FunctionChoice { on, off, opt };

inline const char* to_string(FunctionChoice c) {
    switch (c) {
        case FunctionChoice::on: return "on";
        case FunctionChoice::off: return "off";
        case FunctionChoice::opt: return "opt";
    }
    return "?";
}

/// Constraint language over configuration decisions:
///   pred   := orexpr ("implies" pred)?            (right associative)
///   orexpr := andexpr ("or" andexpr)*
///   andexpr:= factor ("and" factor)*
///   factor := "not" factor | "(" pred ")" | "decision" "(" target ")" "=" choice
/// `target` is a function label or connector id (anything up to the closing
/// parenthesis); `choice` is on/off/opt for functions, or/xor/and for
/// connectors.
struct Predicate {
    enum class Kind { atom, and_, or_, not_, implies };

    Kind kind = Kind::atom;
    std::string target, choice; // atom
    std::vector<Predicate> children;

    friend bool operator==(const Predicate&, const Predicate&) = default;
};

inline std::string to_string(const Predicate& p) {
    auto paren = [](const std::string& s) { return "(" + s + ")"; };
    switch (p.kind) {
        case Predicate::Kind::atom: return "decision(" + p.target + ") = " + p.choice;
        case Predicate::Kind::not_: {
            const Predicate& c = p.children.front();
            const std::string s = to_string(c);
            return "not " + (c.kind == Predicate::Kind::atom || c.kind == Predicate::Kind::not_ ? s : paren(s));
        }
        case Predicate::Kind::and_: {
            std::string out;
            for (std::size_t i = 0; i < p.children.size(); ++i) {
                const Predicate& c = p.children[i];
                const std::string s = to_string(c);
                if (i) out += " and ";
                out += c.kind == Predicate::Kind::or_ || c.kind == Predicate::Kind::implies ? paren(s) : s;
            }
            return out;
        }
        case Predicate::Kind::or_: {
            std::string out;
            for (std::size_t i = 0; i < p.children.size(); ++i) {
                const Predicate& c = p.children[i];
                const std::string s = to_string(c);
                if (i) out += " or ";
                out += c.kind == Predicate::Kind::implies ? paren(s) : s;
            }
            return out;
        }
        case Predicate::Kind::implies: {
            const Predicate& l = p.children[0];
            const std::string ls = to_string(l);
            return (l.kind == Predicate::Kind::implies ? paren(ls) : ls) + " implies " +
                   to_string(p.children[1]);
        }
    }
    return "";
}

namespace detail {

class PredicateParser {
  public:
    PredicateParser(const std::string& text, std::string where) : text_(text), where_(std::move(where)) {}

    Predicate parse() {
        skip_ws();
        Predicate p = parse_implies();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return p;
    }

  private:
    Predicate parse_implies() {
        Predicate left = parse_or();
        skip_ws();
        if (!eat_word("implies")) return left;
        Predicate node;
        node.kind = Predicate::Kind::implies;
        node.children.push_back(std::move(left));
        node.children.push_back(parse_implies());
        return node;
    }

    Predicate parse_or() {
        Predicate first = parse_and();
        skip_ws();
        if (!peek_word("or")) return first;
        Predicate node;
        node.kind = Predicate::Kind::or_;
        node.children.push_back(std::move(first));
        while (eat_word("or")) {
            node.children.push_back(parse_and());
            skip_ws();
        }
        return node;
    }

    Predicate parse_and() {
        Predicate first = parse_factor();
        skip_ws();
        if (!peek_word("and")) return first;
        Predicate node;
        node.kind = Predicate::Kind::and_;
        node.children.push_back(std::move(first));
        while (eat_word("and")) {
            node.children.push_back(parse_factor());
            skip_ws();
        }
        return node;
    }

    Predicate parse_factor() {
        skip_ws();
        if (eat_word("not")) {
            Predicate node;
            node.kind = Predicate::Kind::not_;
            node.children.push_back(parse_factor());
            return node;
        }
        if (eat_char('(')) {
            Predicate inner = parse_implies();
            skip_ws();
            if (!eat_char(')')) fail("expected ')'");
            return inner;
        }
        if (!eat_word("decision")) fail("expected 'decision(...)', 'not' or '('");
        skip_ws();
        if (!eat_char('(')) fail("expected '(' after 'decision'");
        const std::size_t begin = pos_;
        while (pos_ < text_.size() && text_[pos_] != ')') ++pos_;
        if (pos_ == text_.size()) fail("unterminated decision target");
        Predicate node;
        node.target = trim(text_.substr(begin, pos_ - begin));
        ++pos_; // ')'
        if (node.target.empty()) fail("empty decision target");
        skip_ws();
        if (!eat_char('=')) fail("expected '=' after decision target");
        skip_ws();
        const std::size_t cbegin = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        node.choice = text_.substr(cbegin, pos_ - cbegin);
        if (node.choice.empty()) fail("expected a decision choice (on/off/opt or a connector kind)");
        return node;
    }

    static std::string trim(std::string s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
        return s;
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool peek_word(const std::string& w) const {
        if (text_.compare(pos_, w.size(), w) != 0) return false;
        const std::size_t end = pos_ + w.size();
        return end >= text_.size() ||
               (!std::isalnum(static_cast<unsigned char>(text_[end])) && text_[end] != '_');
    }

    bool eat_word(const std::string& w) {
        skip_ws();
        if (!peek_word(w)) return false;
        pos_ += w.size();
        return true;
    }

    bool eat_char(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        SourceSpan span;
        span.file = where_;
        span.line = 1;
        span.column = static_cast<int>(pos_) + 1;
        throw SyntaxError("in predicate '" + text_ + "': " + msg, span);
    }

    const std::string& text_;
    std::string where_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline Predicate parse_predicate(const std::string& text, const std::string& where = "predicate") {
    return detail::PredicateParser(text, where).parse();
}

/// One concrete set of configuration decisions.
struct Configuration {
    std::map<std::string, FunctionChoice> functions; // function label -> decision
    std::map<std::string, GatewayKind> connectors;   // gateway id -> configured kind

    friend bool operator==(const Configuration&, const Configuration&) = default;
};

/// A configurable model: a superset base process plus the catalogue of what
/// may be configured and the constraints a configuration must respect.
/// Requirements are hard (violations invalidate), guidelines are advisory.
struct CepcModel {
    std::string name;
    ProcessModel base;
    std::set<std::string> configurable_functions;                       // labels
    std::map<std::string, std::set<GatewayKind>> configurable_connectors; // id -> allowed kinds
    std::vector<Predicate> requirements;
    std::vector<Predicate> guidelines;

    friend bool operator==(const CepcModel&, const CepcModel&) = default;
};

struct ConfigReport {
    std::vector<std::string> missing;                // configurable items left undecided
    std::vector<std::string> restriction_violations; // disallowed connector kinds
    std::vector<std::string> requirement_violations; // violated requirement texts
    std::vector<std::string> guideline_warnings;     // unmet guideline texts

    bool valid() const {
        return missing.empty() && restriction_violations.empty() && requirement_violations.empty();
    }

    std::string to_string() const {
        std::string out;
        for (const auto& s : missing) out += "missing decision: " + s + "\n";
        for (const auto& s : restriction_violations) out += "restriction violated: " + s + "\n";
        for (const auto& s : requirement_violations) out += "requirement violated: " + s + "\n";
        for (const auto& s : guideline_warnings) out += "guideline not followed: " + s + "\n";
        return out;
    }
};

namespace detail {

/// The kinds a connector of a given base kind can be restricted to: choice
/// can only be narrowed, never widened.
inline const std::set<GatewayKind>& natural_restrictions(GatewayKind base) {
    static const std::set<GatewayKind> from_or{GatewayKind::or_, GatewayKind::xor_, GatewayKind::and_};
    static const std::set<GatewayKind> from_xor{GatewayKind::xor_};
    static const std::set<GatewayKind> from_and{GatewayKind::and_};
    switch (base) {
        case GatewayKind::or_: return from_or;
        case GatewayKind::xor_: return from_xor;
        case GatewayKind::and_: return from_and;
    }
    return from_or;
}

/// What the configuration currently decides for `target`, as the word the
/// predicate language uses; empty when undecided.
inline std::string decided_choice(const CepcModel& model, const Configuration& cfg,
                                  const std::string& target) {
    if (model.configurable_functions.count(target)) {
        auto it = cfg.functions.find(target);
        return it == cfg.functions.end() ? "" : to_string(it->second);
    }
    if (model.configurable_connectors.count(target)) {
        auto it = cfg.connectors.find(target);
        return it == cfg.connectors.end() ? "" : to_string(it->second);
    }
    throw UnknownTarget("predicate refers to '" + target + "', which is not configurable in model '" +
                        model.name + "'");
}

inline bool eval_predicate(const Predicate& p, const CepcModel& model, const Configuration& cfg) {
    switch (p.kind) {
        case Predicate::Kind::atom: return decided_choice(model, cfg, p.target) == p.choice;
        case Predicate::Kind::not_: return !eval_predicate(p.children.front(), model, cfg);
        case Predicate::Kind::and_: {
            for (const auto& c : p.children)
                if (!eval_predicate(c, model, cfg)) return false;
            return true;
        }
        case Predicate::Kind::or_: {
            for (const auto& c : p.children)
                if (eval_predicate(c, model, cfg)) return true;
            return false;
        }
        case Predicate::Kind::implies:
            return !eval_predicate(p.children[0], model, cfg) || eval_predicate(p.children[1], model, cfg);
    }
    return false;
}

/// First node (other than the split itself) that every start-to-end path
/// leaving `split` passes through — the join that structurally closes it.
/// Empty string when none exists.
inline std::string immediate_postdominator(const ProcessModel& m, const std::string& split) {
    // Post-dominator sets in reverse topological order.
    std::map<std::string, int> indeg;
    std::map<std::string, std::vector<std::string>> succ;
    for (const auto& n : m.nodes) indeg[n.id] = 0;
    for (const auto& e : m.edges) {
        succ[e.from].push_back(e.to);
        ++indeg[e.to];
    }
    std::vector<std::string> topo, queue;
    for (const auto& [id, d] : indeg)
        if (d == 0) queue.push_back(id);
    while (!queue.empty()) {
        std::string cur = queue.back();
        queue.pop_back();
        topo.push_back(cur);
        for (const auto& nxt : succ[cur])
            if (--indeg[nxt] == 0) queue.push_back(nxt);
    }
    if (topo.size() != m.nodes.size()) return ""; // cyclic; no answer

    std::map<std::string, std::set<std::string>> pdom;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        const std::string& id = *it;
        std::set<std::string> acc;
        bool first = true;
        for (const auto& s : succ[id]) {
            if (first) {
                acc = pdom[s];
                first = false;
            } else {
                std::set<std::string> inter;
                std::set_intersection(acc.begin(), acc.end(), pdom[s].begin(), pdom[s].end(),
                                      std::inserter(inter, inter.begin()));
                acc = std::move(inter);
            }
        }
        acc.insert(id);
        pdom[id] = std::move(acc);
    }

    const auto& candidates = pdom[split];
    // Walk one arbitrary path; the first candidate met is the immediate one.
    std::string at = split;
    while (!succ[at].empty()) {
        at = succ[at].front();
        if (candidates.count(at)) return at;
    }
    return "";
}

} // namespace detail

/// Checks a configuration against the model: unknown decisions throw
/// UnknownTarget; everything else lands in the report. Requirement and
/// guideline predicates are evaluated with undecided targets counting as
/// matching nothing.
inline ConfigReport validate_configuration(const CepcModel& model, const Configuration& cfg) {
    for (const auto& [label, choice] : cfg.functions) {
        (void)choice;
        if (!model.configurable_functions.count(label))
            throw UnknownTarget("function '" + label + "' is not configurable in model '" + model.name + "'");
    }
    for (const auto& [id, kind] : cfg.connectors) {
        (void)kind;
        if (!model.configurable_connectors.count(id))
            throw UnknownTarget("connector '" + id + "' is not configurable in model '" + model.name + "'");
    }

    ConfigReport report;
    for (const auto& label : model.configurable_functions)
        if (!cfg.functions.count(label)) report.missing.push_back("function '" + label + "'");
    for (const auto& [id, allowed] : model.configurable_connectors) {
        auto it = cfg.connectors.find(id);
        if (it == cfg.connectors.end()) {
            report.missing.push_back("connector '" + id + "'");
            continue;
        }
        const Node* gw = model.base.find_node(id);
        if (!gw || gw->kind != NodeKind::gateway) {
            report.restriction_violations.push_back("connector '" + id + "' is not a gateway of the base model");
            continue;
        }
        if (!allowed.count(it->second))
            report.restriction_violations.push_back("connector '" + id + "' does not allow kind '" +
                                                    std::string(to_string(it->second)) + "'");
        if (!detail::natural_restrictions(*gw->gateway).count(it->second))
            report.restriction_violations.push_back(
                "connector '" + id + "' of kind '" + to_string(*gw->gateway) +
                "' cannot be widened to '" + to_string(it->second) + "'");
    }

    for (const auto& req : model.requirements)
        if (!detail::eval_predicate(req, model, cfg)) report.requirement_violations.push_back(to_string(req));
    for (const auto& g : model.guidelines)
        if (!detail::eval_predicate(g, model, cfg)) report.guideline_warnings.push_back(to_string(g));
    return report;
}

/// Materialises a configured variant:
///   1. connector decisions rewrite the gateway (and the join that closes it,
///      when that join is a same-kind gateway without its own decision),
///   2. `off` functions are deleted; branches left empty disappear,
///   3. `opt` functions are wrapped in an exclusive skip so the decision is
///      deferred to run time,
///   4. pass-through gateways are dissolved and the result is validated.
/// Throws InvalidConfiguration when validate_configuration rejects the input.
inline ProcessModel apply_configuration(const CepcModel& model, const Configuration& cfg) {
    const ConfigReport report = validate_configuration(model, cfg);
    if (!report.valid())
        throw InvalidConfiguration("configuration rejected for model '" + model.name + "':\n" +
                                   report.to_string());

    ProcessModel m = model.base;

    for (const auto& [id, kind] : cfg.connectors) {
        Node* split = m.find_node(id);
        const GatewayKind original = *split->gateway;
        if (kind == original) continue;
        const std::string join_id = detail::immediate_postdominator(m, id);
        split->gateway = kind;
        if (join_id.empty()) continue;
        Node* join = m.find_node(join_id);
        if (join && join->kind == NodeKind::gateway && join->gateway == original &&
            m.predecessors(join_id).size() > 1 && !model.configurable_connectors.count(join_id))
            join->gateway = kind;
    }

    std::vector<std::string> off, opt;
    for (const auto& [label, choice] : cfg.functions) {
        if (choice == FunctionChoice::off) off.push_back(label);
        if (choice == FunctionChoice::opt) opt.push_back(label);
    }
    std::sort(off.begin(), off.end());
    std::sort(opt.begin(), opt.end());

    for (const auto& label : off)
        delete_node_with_reconnection(m, find_task_by_label(m, label), EmptyBranchPolicy::prune_all);

    for (const auto& label : opt) {
        const std::string id = find_task_by_label(m, label);
        const auto preds = m.predecessors(id);
        const auto succs = m.successors(id);
        if (preds.size() != 1 || succs.size() != 1)
            throw InvalidResult("cannot defer '" + label + "': it is not on a simple sequence");
        std::string base_id = "g_opt";
        for (char c : label) base_id += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
        const std::string gs = m.fresh_id(base_id + "_s");
        m.nodes.push_back({gs, NodeKind::gateway, GatewayKind::xor_, "", "", {}});
        const std::string gj = m.fresh_id(base_id + "_j");
        m.nodes.push_back({gj, NodeKind::gateway, GatewayKind::xor_, "", "", {}});
        for (auto& e : m.edges) {
            if (e.to == id && e.from == preds.front()) e.to = gs;
            if (e.from == id && e.to == succs.front()) e.from = gj;
        }
        m.edges.push_back({gs, id, ""});
        m.edges.push_back({id, gj, ""});
        m.edges.push_back({gs, gj, ""});
    }

    dissolve_trivial_gateways(m);

    const ValidationReport check = validate_structure(m);
    if (!check.ok())
        throw InvalidResult("configuration produced an invalid model:\n" + check.to_string());
    return m;
}

/// Every complete assignment of decisions (functions x allowed connector
/// kinds), in a deterministic order. Unfiltered: use
/// enumerate_valid_configurations for the ones that pass validation.
inline std::vector<Configuration> enumerate_configurations(const CepcModel& model) {
    std::vector<Configuration> out{Configuration{}};
    for (const auto& label : model.configurable_functions) {
        std::vector<Configuration> next;
        next.reserve(out.size() * 3);
        for (const auto& base : out)
            for (FunctionChoice c : {FunctionChoice::on, FunctionChoice::off, FunctionChoice::opt}) {
                Configuration cfg = base;
                cfg.functions[label] = c;
                next.push_back(std::move(cfg));
            }
        out = std::move(next);
    }
    for (const auto& [id, allowed] : model.configurable_connectors) {
        std::vector<Configuration> next;
        next.reserve(out.size() * allowed.size());
        for (const auto& base : out)
            for (GatewayKind k : {GatewayKind::and_, GatewayKind::xor_, GatewayKind::or_}) {
                if (!allowed.count(k)) continue;
                Configuration cfg = base;
                cfg.connectors[id] = k;
                next.push_back(std::move(cfg));
            }
        out = std::move(next);
    }
    return out;
}

inline std::vector<Configuration> enumerate_valid_configurations(const CepcModel& model) {
    std::vector<Configuration> out;
    for (auto& cfg : enumerate_configurations(model))
        if (validate_configuration(model, cfg).valid()) out.push_back(std::move(cfg));
    return out;
}

} // namespace bpvar
