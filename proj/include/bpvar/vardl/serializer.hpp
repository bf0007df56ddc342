#pragma once

#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "bpvar/rules.hpp"
#include "bpvar/vardl/ast.hpp"

namespace bpvar::vardl {

namespace detail {

inline bool identifier_shaped(const std::string& s) {
    if (s.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return true;
}

inline std::string quoted(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    out += '"';
    return out;
}

/// Worklet names and rule conclusions stay bare when identifier-shaped.
inline std::string name_or_quoted(const std::string& s) {
    return identifier_shaped(s) ? s : quoted(s);
}

class Writer {
public:
    std::string str() const { return out_.str(); }

    void line(const std::string& text) {
        for (int i = 0; i < indent_; ++i) out_ << "  ";
        out_ << text << '\n';
    }

    void open(const std::string& head) {
        line(head + " {");
        ++indent_;
    }

    void close(const std::string& tail = "}") {
        --indent_;
        line(tail);
    }

    void blank() { out_ << '\n'; }

private:
    std::ostringstream out_;
    int indent_ = 0;
};

inline std::string attrs_clause(const std::map<std::string, std::string>& attrs) {
    if (attrs.empty()) return "";
    std::string out = " attrs {";
    bool first = true;
    for (const auto& [k, v] : attrs) {
        if (!first) out += ", ";
        first = false;
        out += k + ": " + quoted(v);
    }
    out += "}";
    return out;
}

inline void write_process(Writer& w, const ProcessModel& m,
                          const std::set<std::string>& worklet_tasks) {
    w.open("process " + m.id);
    for (const auto& n : m.nodes) {
        std::string s;
        switch (n.kind) {
            case NodeKind::task:
                if (worklet_tasks.count(n.label)) s += "worklet ";
                s += "task " + n.id;
                if (n.label != n.id) s += " " + quoted(n.label);
                break;
            case NodeKind::event:
                s += "event " + n.id;
                if (n.label != n.id) s += " " + quoted(n.label);
                break;
            case NodeKind::start:
                s += "start " + n.id;
                if (!n.label.empty()) s += " " + quoted(n.label);
                break;
            case NodeKind::end:
                s += "end " + n.id;
                if (!n.label.empty()) s += " " + quoted(n.label);
                break;
            case NodeKind::gateway:
                s += "gateway " + n.id + " " + to_string(*n.gateway);
                break;
        }
        if (n.kind != NodeKind::gateway) {
            s += attrs_clause(n.attrs);
            if (!n.role.empty()) s += " role " + n.role;
        }
        w.line(s + ";");
    }
    for (const auto& e : m.edges) {
        std::string s = e.from + " -> " + e.to;
        if (!e.guard.empty()) s += " " + quoted(e.guard);
        w.line(s + ";");
    }
    w.close();
}

inline void write_option(Writer& w, const Option& opt) {
    std::string head = "option " + opt.name;
    if (opt.rule) head += " rule " + to_string(*opt.rule);
    if (opt.resolution == Resolution::run) head += " resolve run";
    w.open(head);
    for (const auto& op : opt.ops) {
        std::string s;
        switch (op.kind) {
            case OpKind::insert: {
                if (!op.fragment_ref.empty()) {
                    s = "insert process " + op.fragment_ref;
                } else {
                    const Node* task = nullptr;
                    for (const auto& n : op.fragment.nodes)
                        if (n.kind == NodeKind::task) task = &n;
                    s = "insert task " + quoted(task ? task->label : "");
                    if (task) {
                        s += attrs_clause(task->attrs);
                        if (!task->role.empty()) s += " role " + task->role;
                    }
                }
                s += " between " + quoted(op.after) + " and " + quoted(op.before);
                break;
            }
            case OpKind::del:
                s = "delete " + quoted(op.target);
                break;
            case OpKind::move:
                s = "move " + quoted(op.target) + " between " + quoted(op.after) + " and " +
                    quoted(op.before);
                break;
            case OpKind::modify:
                s = "modify " + quoted(op.target) + "." + op.attr + " = " + quoted(op.value);
                break;
        }
        w.line(s + ";");
    }
    w.close();
}

inline void write_cepc(Writer& w, const CepcDecl& d) {
    w.open("cepc " + d.name);
    w.line("base " + d.base_ref + ";");
    for (const auto& label : d.functions) w.line("configurable function " + quoted(label) + ";");
    for (const auto& [id, allowed] : d.connectors) {
        std::string s = "configurable connector " + id + " allow {";
        bool first = true;
        for (GatewayKind k : allowed) {
            if (!first) s += ", ";
            first = false;
            s += to_string(k);
        }
        w.line(s + "};");
    }
    for (const auto& text : d.requirements) w.line("requirement " + quoted(text) + ";");
    for (const auto& text : d.guidelines) w.line("guideline " + quoted(text) + ";");
    w.close();
}

inline void write_config(Writer& w, const ConfigDecl& d) {
    w.open("config " + d.name + " for " + d.cepc_ref);
    for (const auto& [label, choice] : d.config.functions) {
        const char* c = choice == FunctionChoice::on ? "on"
                        : choice == FunctionChoice::off ? "off"
                                                        : "opt";
        w.line("function " + quoted(label) + " = " + c + ";");
    }
    for (const auto& [id, kind] : d.config.connectors)
        w.line("connector " + id + " = " + to_string(kind) + ";");
    w.close();
}

inline std::string kv_clause(const std::map<std::string, std::string>& kv) {
    std::string out = "{";
    bool first = true;
    for (const auto& [k, v] : kv) {
        if (!first) out += ", ";
        first = false;
        out += k + ": " + quoted(v);
    }
    return out + "}";
}

inline void write_rdr(Writer& w, const RdrTree& tree) {
    w.open("rdr for " + quoted(tree.task));
    if (!tree.nodes.empty()) w.line("root -> " + name_or_quoted(tree.nodes[0].conclusion) + ";");
    for (std::size_t i = 1; i < tree.nodes.size(); ++i) {
        const RdrNode& n = tree.nodes[i];
        std::string parent = "root";
        std::string slot = "true";
        for (std::size_t j = 0; j < tree.nodes.size(); ++j) {
            if (tree.nodes[j].true_child == static_cast<int>(i)) {
                parent = j == 0 ? "root" : tree.nodes[j].name;
                slot = "true";
            } else if (tree.nodes[j].false_child == static_cast<int>(i)) {
                parent = j == 0 ? "root" : tree.nodes[j].name;
                slot = "false";
            }
        }
        std::string s = "node " + n.name;
        if (n.condition) s += " if " + to_string(*n.condition);
        s += " -> " + name_or_quoted(n.conclusion);
        if (!n.cornerstone.empty()) s += " cornerstone " + kv_clause(n.cornerstone);
        s += " at " + parent + "." + slot;
        w.line(s + ";");
    }
    w.close();
}

inline void write_features(Writer& w, const FeatureModel& fm, int idx) {
    const auto& f = fm.features[idx];
    std::string head;
    if (f.modality == FeatureModel::Modality::optional) head += "optional ";
    head += "feature " + f.name;

    std::vector<int> plain_children;
    std::vector<int> own_groups;
    for (std::size_t i = 0; i < fm.features.size(); ++i)
        if (fm.features[i].parent == idx && fm.features[i].group < 0)
            plain_children.push_back(static_cast<int>(i));
    for (std::size_t g = 0; g < fm.groups.size(); ++g)
        if (fm.groups[g].owner == idx) own_groups.push_back(static_cast<int>(g));

    std::vector<std::string> constraints;
    for (const auto& [a, b] : fm.requires_constraints)
        if (a == f.name) constraints.push_back("requires " + b + ";");
    for (const auto& [a, b] : fm.excludes_constraints)
        if (a == f.name) constraints.push_back("excludes " + b + ";");

    if (plain_children.empty() && own_groups.empty() && constraints.empty()) {
        w.line(head + ";");
        return;
    }
    w.open(head);
    for (int c : plain_children) write_features(w, fm, c);
    for (int g : own_groups) {
        w.open(fm.groups[g].kind == FeatureModel::GroupKind::alternative ? "alternative" : "or");
        for (int member : fm.groups[g].members) write_features(w, fm, member);
        w.close();
    }
    for (const auto& c : constraints) w.line(c);
    w.close();
}

inline void write_stereotypes(Writer& w, const StereotypesDecl& d) {
    w.open("stereotypes " + d.name + " for " + d.base_ref + " features " + d.features_ref);
    for (const auto& vp : d.varpoints) w.line("varpoint " + quoted(vp) + ";");
    for (const auto& v : d.variants) {
        std::string s = "variant " + quoted(v.name) + " of " + quoted(v.of) + " = process " +
                        v.fragment_ref;
        if (v.is_default) s += " default";
        w.line(s + ";");
    }
    for (const auto& o : d.optionals) w.line("optional " + quoted(o) + ";");
    for (const auto& n : d.nullables) w.line("nullable " + quoted(n) + ";");
    for (const auto& [label, attrs] : d.params) {
        std::string s = "parameterized " + quoted(label) + " (";
        for (std::size_t i = 0; i < attrs.size(); ++i) {
            if (i) s += ", ";
            s += attrs[i];
        }
        w.line(s + ");");
    }
    for (const auto& [feature, bindings] : d.binds) {
        w.open("bind " + feature);
        for (const auto& b : bindings) {
            switch (b.kind) {
                case FeatureBinding::Kind::variant:
                    w.line(quoted(b.target) + " -> variant " + quoted(b.variant) + ";");
                    break;
                case FeatureBinding::Kind::null_binding:
                    w.line(quoted(b.target) + " -> null;");
                    break;
                case FeatureBinding::Kind::keep:
                    w.line("keep " + quoted(b.target) + ";");
                    break;
                case FeatureBinding::Kind::param:
                    w.line("set " + quoted(b.target) + "." + b.attr + " = " + quoted(b.value) +
                           ";");
                    break;
            }
        }
        w.close();
    }
    w.close();
}

} // namespace detail

/// Canonical textual form of a document: every declaration in order, fixed
/// statement ordering inside each declaration, strings quoted minimally.
/// Re-parsing the output yields a structurally equal document.
inline std::string serialize(const Document& doc) {
    detail::Writer w;
    w.line("// vardl");
    for (const auto& decl : doc.decls) {
        w.blank();
        if (const auto* i = std::get_if<ImportDecl>(&decl)) {
            w.line("import " + detail::quoted(i->path) + ";");
        } else if (const auto* p = std::get_if<ProcessDecl>(&decl)) {
            detail::write_process(w, p->model, p->worklet_tasks);
        } else if (const auto* o = std::get_if<OptionDecl>(&decl)) {
            detail::write_option(w, o->option);
        } else if (const auto* c = std::get_if<ContextDecl>(&decl)) {
            w.open("context " + c->name);
            for (const auto& [k, v] : c->vars) w.line(k + " = " + detail::quoted(v) + ";");
            w.close();
        } else if (const auto* c = std::get_if<CepcDecl>(&decl)) {
            detail::write_cepc(w, *c);
        } else if (const auto* c = std::get_if<ConfigDecl>(&decl)) {
            detail::write_config(w, *c);
        } else if (const auto* r = std::get_if<RdrDecl>(&decl)) {
            detail::write_rdr(w, r->tree);
        } else if (const auto* r = std::get_if<RepertoireDecl>(&decl)) {
            w.open(r->name.empty() ? "repertoire" : "repertoire " + r->name);
            for (const auto& [worklet, ref] : r->entries)
                w.line(detail::name_or_quoted(worklet) + " = " +
                       (ref.empty() ? "EMPTY" : "process " + ref) + ";");
            w.close();
        } else if (const auto* f = std::get_if<FeaturesDecl>(&decl)) {
            w.open("features " + f->fm.name);
            if (!f->fm.features.empty()) detail::write_features(w, f->fm, 0);
            w.close();
        } else if (const auto* s = std::get_if<StereotypesDecl>(&decl)) {
            detail::write_stereotypes(w, *s);
        }
    }
    return w.str();
}

/// Canonical form of a single process model as a loadable document.
inline std::string serialize(const ProcessModel& model,
                             const std::set<std::string>& worklet_tasks = {}) {
    detail::Writer w;
    w.line("// vardl");
    w.blank();
    detail::write_process(w, model, worklet_tasks);
    return w.str();
}

} // namespace bpvar::vardl
