#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bpvar/errors.hpp"
#include "bpvar/vardl/ast.hpp"
#include "bpvar/vardl/lexer.hpp"

namespace bpvar::vardl {

namespace detail {

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    std::vector<Decl> parse_decls() {
        std::vector<Decl> decls;
        while (cur().kind != Token::Kind::eof) {
            if (cur().kind != Token::Kind::ident)
                fail("expected a declaration", cur().span);
            const std::string& kw = cur().text;
            if (kw == "import") decls.push_back(parse_import());
            else if (kw == "process") decls.push_back(parse_process());
            else if (kw == "option") decls.push_back(parse_option());
            else if (kw == "context") decls.push_back(parse_context());
            else if (kw == "cepc") decls.push_back(parse_cepc());
            else if (kw == "config") decls.push_back(parse_config());
            else if (kw == "rdr") decls.push_back(parse_rdr());
            else if (kw == "repertoire") decls.push_back(parse_repertoire());
            else if (kw == "features") decls.push_back(parse_features());
            else if (kw == "stereotypes") decls.push_back(parse_stereotypes());
            else
                fail("unknown declaration '" + kw + "'", cur().span);
        }
        return decls;
    }

private:
    // ---- cursor helpers ----------------------------------------------------

    const Token& cur() const { return toks_[pos_]; }
    const Token& ahead() const { return toks_[std::min(pos_ + 1, toks_.size() - 1)]; }

    Token take() {
        Token t = toks_[pos_];
        if (t.kind != Token::Kind::eof) ++pos_;
        return t;
    }

    bool accept_kw(const std::string& s) {
        if (cur().is_ident(s)) {
            ++pos_;
            return true;
        }
        return false;
    }

    bool accept_punct(const std::string& s) {
        if (cur().is_punct(s)) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect_kw(const std::string& s) {
        if (!accept_kw(s)) fail("expected '" + s + "'", cur().span);
    }

    void expect_punct(const std::string& s) {
        if (!accept_punct(s)) fail("expected '" + s + "'", cur().span);
    }

    Token expect_ident(const std::string& what) {
        if (cur().kind != Token::Kind::ident) fail("expected " + what, cur().span);
        return take();
    }

    Token expect_string(const std::string& what) {
        if (cur().kind != Token::Kind::string) fail("expected " + what + " (a quoted string)",
                                                    cur().span);
        return take();
    }

    /// Label reference: quoted string, or a bare identifier for single-word labels.
    std::string expect_ref(const std::string& what) {
        if (cur().kind == Token::Kind::string || cur().kind == Token::Kind::ident)
            return take().text;
        fail("expected " + what + " (an identifier or quoted string)", cur().span);
    }

    [[noreturn]] void fail(const std::string& msg, const SourceSpan& span) const {
        std::string found = cur().kind == Token::Kind::eof ? "end of input" : "'" + cur().text + "'";
        throw SyntaxError(msg + ", found " + found, span);
    }

    // ---- shared pieces -----------------------------------------------------

    std::map<std::string, std::string> parse_kv_block(const std::string& what) {
        std::map<std::string, std::string> out;
        expect_punct("{");
        while (!accept_punct("}")) {
            Token key = expect_ident(what + " key");
            expect_punct(":");
            Token value = expect_string(what + " value");
            if (!out.emplace(key.text, value.text).second)
                throw DuplicateName("duplicate " + what + " key '" + key.text + "'", key.span);
            if (!accept_punct(",")) {
                expect_punct("}");
                break;
            }
        }
        return out;
    }

    GatewayKind parse_gateway_kind() {
        Token t = expect_ident("a gateway kind (and, xor, or)");
        if (t.text == "and") return GatewayKind::and_;
        if (t.text == "xor") return GatewayKind::xor_;
        if (t.text == "or") return GatewayKind::or_;
        fail("expected a gateway kind (and, xor, or)", t.span);
    }

    // rule := or_expr ; or_expr := and_expr ("or" and_expr)* ;
    // and_expr := unary ("and" unary)* ; unary := "not" unary | "(" rule ")" | atom
    RuleExpr parse_rule_expr() {
        RuleExpr left = parse_rule_and();
        while (accept_kw("or")) {
            RuleExpr node;
            node.kind = RuleExpr::Kind::or_;
            node.children.push_back(std::move(left));
            node.children.push_back(parse_rule_and());
            left = std::move(node);
        }
        return left;
    }

    RuleExpr parse_rule_and() {
        RuleExpr left = parse_rule_unary();
        while (accept_kw("and")) {
            RuleExpr node;
            node.kind = RuleExpr::Kind::and_;
            node.children.push_back(std::move(left));
            node.children.push_back(parse_rule_unary());
            left = std::move(node);
        }
        return left;
    }

    RuleExpr parse_rule_unary() {
        if (accept_kw("not")) {
            RuleExpr node;
            node.kind = RuleExpr::Kind::not_;
            node.children.push_back(parse_rule_unary());
            return node;
        }
        if (accept_punct("(")) {
            RuleExpr inner = parse_rule_expr();
            expect_punct(")");
            return inner;
        }
        Token var = expect_ident("a context variable");
        RuleExpr atom;
        if (accept_punct("=")) atom.kind = RuleExpr::Kind::var_eq;
        else if (accept_punct("!=")) atom.kind = RuleExpr::Kind::var_ne;
        else fail("expected '=' or '!=' after variable '" + var.text + "'", cur().span);
        atom.var = var.text;
        atom.value = expect_string("a comparison value").text;
        return atom;
    }

    // ---- declarations ------------------------------------------------------

    Decl parse_import() {
        SourceSpan span = cur().span;
        expect_kw("import");
        ImportDecl d;
        d.path = expect_string("an import path").text;
        d.span = span;
        expect_punct(";");
        return d;
    }

    Decl parse_process() {
        SourceSpan span = cur().span;
        expect_kw("process");
        ProcessDecl d;
        d.span = span;
        d.model.id = expect_ident("a process name").text;
        expect_punct("{");

        std::vector<std::pair<Edge, SourceSpan>> edges;
        while (!accept_punct("}")) {
            if (cur().kind != Token::Kind::ident) fail("expected a node or edge statement", cur().span);

            bool worklet_flag = false;
            if (cur().is_ident("worklet") && ahead().is_ident("task")) {
                take();
                worklet_flag = true;
            }

            const std::string& kw = cur().text;
            const bool node_stmt = ahead().kind == Token::Kind::ident &&
                                   (kw == "task" || kw == "event" || kw == "start" || kw == "end" ||
                                    kw == "gateway");
            if (worklet_flag && !node_stmt) fail("'worklet' must prefix a task statement", cur().span);

            if (node_stmt) {
                Token kind_tok = take();
                Token id = expect_ident("a node id");
                if (d.model.find_node(id.text))
                    throw DuplicateName("node id '" + id.text + "' is already declared", id.span);

                Node n;
                n.id = id.text;
                if (kind_tok.text == "gateway") {
                    n.kind = NodeKind::gateway;
                    n.gateway = parse_gateway_kind();
                } else {
                    if (kind_tok.text == "task") n.kind = NodeKind::task;
                    else if (kind_tok.text == "event") n.kind = NodeKind::event;
                    else if (kind_tok.text == "start") n.kind = NodeKind::start;
                    else n.kind = NodeKind::end;

                    if (cur().kind == Token::Kind::string) n.label = take().text;
                    else if (n.kind == NodeKind::task || n.kind == NodeKind::event) n.label = n.id;

                    if (accept_kw("attrs")) n.attrs = parse_kv_block("attribute");
                    if (accept_kw("role")) n.role = expect_ident("a role name").text;
                }
                if (worklet_flag) d.worklet_tasks.insert(n.label);
                d.model.nodes.push_back(std::move(n));
                expect_punct(";");
            } else {
                Token from = expect_ident("a node or edge statement");
                expect_punct("->");
                Token to = expect_ident("an edge target");
                Edge e{from.text, to.text, ""};
                if (cur().kind == Token::Kind::string) e.guard = take().text;
                expect_punct(";");
                edges.push_back({std::move(e), from.span});
            }
        }

        for (auto& [e, espan] : edges) {
            if (!d.model.find_node(e.from))
                throw UnresolvedReference("edge references undeclared node '" + e.from + "'", espan);
            if (!d.model.find_node(e.to))
                throw UnresolvedReference("edge references undeclared node '" + e.to + "'", espan);
            d.model.edges.push_back(std::move(e));
        }
        return d;
    }

    Decl parse_option() {
        SourceSpan span = cur().span;
        expect_kw("option");
        OptionDecl d;
        d.span = span;
        d.option.name = expect_ident("an option name").text;
        if (accept_kw("rule")) d.option.rule = parse_rule_expr();
        if (accept_kw("resolve")) {
            Token r = expect_ident("a resolution time (design or run)");
            if (r.text == "design") d.option.resolution = Resolution::design;
            else if (r.text == "run") d.option.resolution = Resolution::run;
            else fail("expected a resolution time (design or run)", r.span);
        }
        expect_punct("{");
        while (!accept_punct("}")) {
            ChangeOperation op;
            Token kw = expect_ident("a change operation (insert, delete, move, modify)");
            if (kw.text == "insert") {
                op.kind = OpKind::insert;
                if (accept_kw("process")) {
                    op.fragment_ref = expect_ident("a fragment process name").text;
                } else if (accept_kw("task")) {
                    const std::string label = expect_string("a task label").text;
                    std::map<std::string, std::string> attrs;
                    std::string role;
                    if (accept_kw("attrs")) attrs = parse_kv_block("attribute");
                    if (accept_kw("role")) role = expect_ident("a role name").text;
                    op.fragment = single_task_fragment(label, attrs, role);
                } else {
                    fail("expected 'process' or 'task' after insert", cur().span);
                }
                expect_kw("between");
                op.after = expect_ref("the after-anchor");
                expect_kw("and");
                op.before = expect_ref("the before-anchor");
            } else if (kw.text == "delete") {
                op.kind = OpKind::del;
                op.target = expect_ref("the node to delete");
            } else if (kw.text == "move") {
                op.kind = OpKind::move;
                op.target = expect_ref("the node to move");
                expect_kw("between");
                op.after = expect_ref("the after-anchor");
                expect_kw("and");
                op.before = expect_ref("the before-anchor");
            } else if (kw.text == "modify") {
                op.kind = OpKind::modify;
                op.target = expect_ref("the node to modify");
                expect_punct(".");
                op.attr = expect_ident("an attribute name").text;
                expect_punct("=");
                op.value = expect_string("the new attribute value").text;
            } else {
                fail("expected a change operation (insert, delete, move, modify)", kw.span);
            }
            expect_punct(";");
            d.option.ops.push_back(std::move(op));
        }
        return d;
    }

    Decl parse_context() {
        SourceSpan span = cur().span;
        expect_kw("context");
        ContextDecl d;
        d.span = span;
        d.name = expect_ident("a context name").text;
        expect_punct("{");
        while (!accept_punct("}")) {
            Token var = expect_ident("a context variable");
            expect_punct("=");
            Token value = expect_string("a value");
            if (!d.vars.emplace(var.text, value.text).second)
                throw DuplicateName("context variable '" + var.text + "' is already set", var.span);
            expect_punct(";");
        }
        return d;
    }

    Decl parse_cepc() {
        SourceSpan span = cur().span;
        expect_kw("cepc");
        CepcDecl d;
        d.span = span;
        d.name = expect_ident("a configurable-model name").text;
        expect_punct("{");
        while (!accept_punct("}")) {
            Token kw = expect_ident("a configurable-model statement");
            if (kw.text == "base") {
                if (!d.base_ref.empty())
                    throw DuplicateName("'" + d.name + "' declares base twice", kw.span);
                d.base_ref = expect_ident("a base process name").text;
            } else if (kw.text == "configurable") {
                if (accept_kw("function")) {
                    Token label = expect_string("a function label");
                    if (!d.functions.insert(label.text).second)
                        throw DuplicateName("function '" + label.text + "' is already configurable",
                                            label.span);
                } else if (accept_kw("connector")) {
                    Token id = expect_ident("a connector id");
                    if (d.connectors.count(id.text))
                        throw DuplicateName("connector '" + id.text + "' is already configurable",
                                            id.span);
                    expect_kw("allow");
                    expect_punct("{");
                    std::set<GatewayKind> allowed;
                    do {
                        allowed.insert(parse_gateway_kind());
                    } while (accept_punct(","));
                    expect_punct("}");
                    d.connectors.emplace(id.text, std::move(allowed));
                } else {
                    fail("expected 'function' or 'connector' after configurable", cur().span);
                }
            } else if (kw.text == "requirement") {
                d.requirements.push_back(expect_string("a requirement predicate").text);
            } else if (kw.text == "guideline") {
                d.guidelines.push_back(expect_string("a guideline predicate").text);
            } else {
                fail("expected base / configurable / requirement / guideline", kw.span);
            }
            expect_punct(";");
        }
        return d;
    }

    Decl parse_config() {
        SourceSpan span = cur().span;
        expect_kw("config");
        ConfigDecl d;
        d.span = span;
        d.name = expect_ident("a configuration name").text;
        expect_kw("for");
        d.cepc_ref = expect_ident("a configurable-model name").text;
        expect_punct("{");
        while (!accept_punct("}")) {
            Token kw = expect_ident("'function' or 'connector'");
            if (kw.text == "function") {
                Token label = expect_string("a function label");
                expect_punct("=");
                Token choice = expect_ident("a decision (on, off, opt)");
                FunctionChoice c;
                if (choice.text == "on") c = FunctionChoice::on;
                else if (choice.text == "off") c = FunctionChoice::off;
                else if (choice.text == "opt") c = FunctionChoice::opt;
                else fail("expected a decision (on, off, opt)", choice.span);
                if (!d.config.functions.emplace(label.text, c).second)
                    throw DuplicateName("function '" + label.text + "' is already decided",
                                        label.span);
            } else if (kw.text == "connector") {
                Token id = expect_ident("a connector id");
                expect_punct("=");
                GatewayKind k = parse_gateway_kind();
                if (!d.config.connectors.emplace(id.text, k).second)
                    throw DuplicateName("connector '" + id.text + "' is already decided", id.span);
            } else {
                fail("expected 'function' or 'connector'", kw.span);
            }
            expect_punct(";");
        }
        return d;
    }

    Decl parse_rdr() {
        SourceSpan span = cur().span;
        expect_kw("rdr");
        expect_kw("for");
        RdrDecl d;
        d.span = span;
        d.tree.task = expect_string("the late-bound task label").text;
        expect_punct("{");

        expect_kw("root");
        expect_punct("->");
        RdrNode root;
        root.name = "root";
        root.conclusion = expect_ref("the default worklet");
        expect_punct(";");
        d.tree.nodes.push_back(std::move(root));

        while (!accept_punct("}")) {
            expect_kw("node");
            Token name = expect_ident("a rule-node name");
            if (d.tree.index_of(name.text) >= 0 || name.text == "root")
                throw DuplicateName("rule node '" + name.text + "' is already declared", name.span);
            RdrNode n;
            n.name = name.text;
            expect_kw("if");
            n.condition = parse_rule_expr();
            expect_punct("->");
            n.conclusion = expect_ref("a worklet name");
            if (accept_kw("cornerstone")) n.cornerstone = parse_kv_block("cornerstone");
            expect_kw("at");
            Token parent = expect_ident("a parent rule node");
            expect_punct(".");
            Token slot = expect_ident("'true' or 'false'");
            if (slot.text != "true" && slot.text != "false")
                fail("expected 'true' or 'false'", slot.span);
            expect_punct(";");

            const int parent_idx = parent.text == "root" ? 0 : d.tree.index_of(parent.text);
            if (parent_idx < 0)
                throw UnresolvedReference("unknown parent rule node '" + parent.text + "'",
                                          parent.span);
            int& child_slot = slot.text == "true" ? d.tree.nodes[parent_idx].true_child
                                                  : d.tree.nodes[parent_idx].false_child;
            if (child_slot != -1)
                throw DuplicateName("the " + slot.text + "-slot of '" + parent.text +
                                        "' is already bound",
                                    slot.span);
            child_slot = static_cast<int>(d.tree.nodes.size());
            d.tree.nodes.push_back(std::move(n));
        }
        return d;
    }

    Decl parse_repertoire() {
        SourceSpan span = cur().span;
        expect_kw("repertoire");
        RepertoireDecl d;
        d.span = span;
        if (cur().kind == Token::Kind::ident) d.name = take().text;
        expect_punct("{");
        std::set<std::string> seen;
        while (!accept_punct("}")) {
            SourceSpan name_span = cur().span;
            std::string worklet = expect_ref("a worklet name");
            if (worklet == "EMPTY")
                throw DuplicateName("'EMPTY' is reserved for the built-in empty worklet", name_span);
            if (!seen.insert(worklet).second)
                throw DuplicateName("worklet '" + worklet + "' is already declared", name_span);
            expect_punct("=");
            std::string ref;
            if (accept_kw("process")) ref = expect_ident("a process name").text;
            else if (accept_kw("EMPTY")) ref = "";
            else fail("expected 'process NAME' or 'EMPTY'", cur().span);
            expect_punct(";");
            d.entries.emplace_back(std::move(worklet), std::move(ref));
        }
        return d;
    }

    Decl parse_features() {
        SourceSpan span = cur().span;
        expect_kw("features");
        FeaturesDecl d;
        d.span = span;
        d.fm.name = expect_ident("a feature-model name").text;
        expect_punct("{");
        parse_feature(d.fm, -1, -1);
        expect_punct("}");

        for (const auto& [a, b] : d.fm.requires_constraints)
            if (d.fm.index_of(b) < 0)
                throw UnresolvedReference("requires target '" + b + "' is not a feature", d.span);
        for (const auto& [a, b] : d.fm.excludes_constraints)
            if (d.fm.index_of(b) < 0)
                throw UnresolvedReference("excludes target '" + b + "' is not a feature", d.span);
        return d;
    }

    void parse_feature(FeatureModel& fm, int parent, int group) {
        FeatureModel::Modality modality = FeatureModel::Modality::mandatory;
        bool modality_given = false;
        if (accept_kw("optional")) {
            modality = FeatureModel::Modality::optional;
            modality_given = true;
        } else if (accept_kw("mandatory")) {
            modality_given = true;
        }
        SourceSpan kw_span = cur().span;
        expect_kw("feature");
        if (group >= 0) {
            if (modality_given)
                throw SyntaxError("group members cannot carry a modality", kw_span);
            modality = FeatureModel::Modality::grouped;
        }
        Token name = expect_ident("a feature name");
        if (fm.index_of(name.text) >= 0)
            throw DuplicateName("feature '" + name.text + "' is already declared", name.span);

        FeatureModel::Feature f;
        f.name = name.text;
        f.parent = parent;
        f.modality = modality;
        f.group = group;
        const int self = static_cast<int>(fm.features.size());
        fm.features.push_back(std::move(f));
        if (group >= 0) fm.groups[group].members.push_back(self);

        if (accept_punct(";")) return;
        expect_punct("{");
        while (!accept_punct("}")) {
            if (cur().is_ident("alternative") || cur().is_ident("or")) {
                const FeatureModel::GroupKind kind = cur().text == "alternative"
                                                         ? FeatureModel::GroupKind::alternative
                                                         : FeatureModel::GroupKind::or_;
                take();
                FeatureModel::Group g;
                g.owner = self;
                g.kind = kind;
                const int gidx = static_cast<int>(fm.groups.size());
                fm.groups.push_back(std::move(g));
                expect_punct("{");
                while (!accept_punct("}")) parse_feature(fm, self, gidx);
            } else if (accept_kw("requires")) {
                fm.requires_constraints.emplace_back(fm.features[self].name,
                                                     expect_ident("a feature name").text);
                expect_punct(";");
            } else if (accept_kw("excludes")) {
                fm.excludes_constraints.emplace_back(fm.features[self].name,
                                                     expect_ident("a feature name").text);
                expect_punct(";");
            } else {
                parse_feature(fm, self, -1);
            }
        }
    }

    Decl parse_stereotypes() {
        SourceSpan span = cur().span;
        expect_kw("stereotypes");
        StereotypesDecl d;
        d.span = span;
        d.name = expect_ident("a stereotyped-model name").text;
        expect_kw("for");
        d.base_ref = expect_ident("a base process name").text;
        expect_kw("features");
        d.features_ref = expect_ident("a feature-model name").text;
        expect_punct("{");
        while (!accept_punct("}")) {
            Token kw = expect_ident("a stereotype statement");
            if (kw.text == "varpoint") {
                d.varpoints.push_back(expect_string("a variation-point label").text);
                expect_punct(";");
            } else if (kw.text == "variant") {
                StereotypesDecl::RawVariant v;
                v.name = expect_string("a variant name").text;
                expect_kw("of");
                v.of = expect_string("a variation-point label").text;
                expect_punct("=");
                expect_kw("process");
                v.fragment_ref = expect_ident("a fragment process name").text;
                v.is_default = accept_kw("default");
                expect_punct(";");
                d.variants.push_back(std::move(v));
            } else if (kw.text == "optional") {
                d.optionals.push_back(expect_string("an optional-node label").text);
                expect_punct(";");
            } else if (kw.text == "nullable") {
                d.nullables.push_back(expect_string("a nullable-node label").text);
                expect_punct(";");
            } else if (kw.text == "parameterized") {
                std::string label = expect_string("a parameterized-node label").text;
                expect_punct("(");
                std::vector<std::string> attrs;
                do {
                    attrs.push_back(expect_ident("an attribute name").text);
                } while (accept_punct(","));
                expect_punct(")");
                expect_punct(";");
                d.params.emplace_back(std::move(label), std::move(attrs));
            } else if (kw.text == "bind") {
                std::string feature = expect_ident("a feature name").text;
                expect_punct("{");
                std::vector<FeatureBinding> bindings;
                while (!accept_punct("}")) {
                    FeatureBinding b;
                    if (accept_kw("keep")) {
                        b.kind = FeatureBinding::Kind::keep;
                        b.target = expect_string("an optional-node label").text;
                    } else if (accept_kw("set")) {
                        b.kind = FeatureBinding::Kind::param;
                        b.target = expect_string("a parameterized-node label").text;
                        expect_punct(".");
                        b.attr = expect_ident("an attribute name").text;
                        expect_punct("=");
                        b.value = expect_string("the attribute value").text;
                    } else {
                        b.target = expect_string("a node label").text;
                        expect_punct("->");
                        if (accept_kw("variant")) {
                            b.kind = FeatureBinding::Kind::variant;
                            b.variant = expect_string("a variant name").text;
                        } else if (accept_kw("null")) {
                            b.kind = FeatureBinding::Kind::null_binding;
                        } else {
                            fail("expected 'variant NAME' or 'null'", cur().span);
                        }
                    }
                    expect_punct(";");
                    bindings.push_back(std::move(b));
                }
                d.binds.emplace_back(std::move(feature), std::move(bindings));
            } else {
                fail("expected varpoint / variant / optional / nullable / parameterized / bind",
                     kw.span);
            }
        }
        return d;
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Parses one source text into declarations. No reference resolution happens
/// here; call `link` (or use `load_file`) for a usable `Document::linked`.
inline Document parse_document(const std::string& source, const std::string& filename = "<memory>") {
    Document doc;
    doc.filename = filename;
    doc.decls = detail::Parser(lex(source, filename)).parse_decls();
    return doc;
}

namespace detail {

/// Folds one document's declarations into a shared linked registry.
/// References resolve against everything linked so far, so declaration order
/// matters: declare a process before the option / repertoire / stereotype
/// that names it.
inline void link_into(Linked& linked, const Document& doc) {
    auto dup = [&](const std::string& what, const std::string& name, const SourceSpan& span) {
        throw DuplicateName(what + " '" + name + "' is declared twice", span);
    };

    for (const auto& decl : doc.decls) {
        if (std::holds_alternative<ImportDecl>(decl)) continue; // handled by load_file

        if (const auto* p = std::get_if<ProcessDecl>(&decl)) {
            if (linked.processes.count(p->model.id)) dup("process", p->model.id, p->span);
            linked.processes.emplace(p->model.id, p->model);
            linked.process_worklet_tasks.emplace(p->model.id, p->worklet_tasks);
        } else if (const auto* o = std::get_if<OptionDecl>(&decl)) {
            if (linked.find_option(o->option.name)) dup("option", o->option.name, o->span);
            Option opt = o->option;
            for (auto& op : opt.ops) {
                if (op.kind != OpKind::insert || op.fragment_ref.empty()) continue;
                auto it = linked.processes.find(op.fragment_ref);
                if (it == linked.processes.end())
                    throw UnresolvedReference("option '" + opt.name +
                                                  "' inserts unknown process '" + op.fragment_ref +
                                                  "'",
                                              o->span);
                op.fragment = it->second;
            }
            linked.options.push_back(std::move(opt));
        } else if (const auto* c = std::get_if<ContextDecl>(&decl)) {
            if (linked.contexts.count(c->name)) dup("context", c->name, c->span);
            linked.contexts.emplace(c->name, c->vars);
        } else if (const auto* c = std::get_if<CepcDecl>(&decl)) {
            if (linked.cepc_models.count(c->name)) dup("configurable model", c->name, c->span);
            if (c->base_ref.empty())
                throw UnresolvedReference("configurable model '" + c->name + "' declares no base",
                                          c->span);
            auto base = linked.processes.find(c->base_ref);
            if (base == linked.processes.end())
                throw UnresolvedReference("configurable model '" + c->name +
                                              "' references unknown base process '" + c->base_ref +
                                              "'",
                                          c->span);
            CepcModel m;
            m.name = c->name;
            m.base = base->second;
            m.configurable_functions = c->functions;
            for (const auto& label : c->functions)
                if (!m.base.find_by_label(label))
                    throw UnresolvedReference("configurable function '" + label +
                                                  "' does not exist in base '" + c->base_ref + "'",
                                              c->span);
            for (const auto& [id, allowed] : c->connectors) {
                const Node* n = m.base.find_node(id);
                if (!n || n->kind != NodeKind::gateway)
                    throw UnresolvedReference("configurable connector '" + id +
                                                  "' is not a gateway of base '" + c->base_ref + "'",
                                              c->span);
                m.configurable_connectors.emplace(id, allowed);
            }
            const std::string where = doc.filename + ": cepc '" + c->name + "'";
            for (const auto& text : c->requirements)
                m.requirements.push_back(parse_predicate(text, where + " requirement"));
            for (const auto& text : c->guidelines)
                m.guidelines.push_back(parse_predicate(text, where + " guideline"));
            linked.cepc_models.emplace(c->name, std::move(m));
        } else if (const auto* c = std::get_if<ConfigDecl>(&decl)) {
            if (linked.configs.count(c->name)) dup("configuration", c->name, c->span);
            if (!linked.cepc_models.count(c->cepc_ref))
                throw UnresolvedReference("configuration '" + c->name +
                                              "' references unknown configurable model '" +
                                              c->cepc_ref + "'",
                                          c->span);
            linked.configs.emplace(c->name, Linked::NamedConfig{c->cepc_ref, c->config});
        } else if (const auto* r = std::get_if<RdrDecl>(&decl)) {
            if (linked.trees.count(r->tree.task))
                dup("rule tree for task", r->tree.task, r->span);
            linked.trees.emplace(r->tree.task, r->tree);
        } else if (const auto* r = std::get_if<RepertoireDecl>(&decl)) {
            for (const auto& [worklet, ref] : r->entries) {
                if (linked.repertoire.worklets.count(worklet)) dup("worklet", worklet, r->span);
                if (ref.empty()) {
                    linked.repertoire.worklets.emplace(worklet, Repertoire{}.get("EMPTY"));
                    continue;
                }
                auto it = linked.processes.find(ref);
                if (it == linked.processes.end())
                    throw UnresolvedReference("worklet '" + worklet +
                                                  "' references unknown process '" + ref + "'",
                                              r->span);
                linked.repertoire.worklets.emplace(worklet, it->second);
            }
        } else if (const auto* f = std::get_if<FeaturesDecl>(&decl)) {
            if (linked.feature_models.count(f->fm.name)) dup("feature model", f->fm.name, f->span);
            linked.feature_models.emplace(f->fm.name, f->fm);
        } else if (const auto* s = std::get_if<StereotypesDecl>(&decl)) {
            if (linked.stereotyped.count(s->name)) dup("stereotyped model", s->name, s->span);
            auto base = linked.processes.find(s->base_ref);
            if (base == linked.processes.end())
                throw UnresolvedReference("stereotyped model '" + s->name +
                                              "' references unknown base process '" + s->base_ref +
                                              "'",
                                          s->span);
            auto fm = linked.feature_models.find(s->features_ref);
            if (fm == linked.feature_models.end())
                throw UnresolvedReference("stereotyped model '" + s->name +
                                              "' references unknown feature model '" +
                                              s->features_ref + "'",
                                          s->span);
            StereotypedModel m;
            m.name = s->name;
            m.base = base->second;
            m.features = fm->second;
            m.variation_points.insert(s->varpoints.begin(), s->varpoints.end());
            m.optionals.insert(s->optionals.begin(), s->optionals.end());
            m.null_capable.insert(s->nullables.begin(), s->nullables.end());
            for (const auto& [label, attrs] : s->params)
                m.param_attrs[label].insert(attrs.begin(), attrs.end());
            for (const auto& rv : s->variants) {
                if (!m.variation_points.count(rv.of))
                    throw UnresolvedReference("variant '" + rv.name +
                                                  "' targets undeclared variation point '" + rv.of +
                                                  "'",
                                              s->span);
                auto frag = linked.processes.find(rv.fragment_ref);
                if (frag == linked.processes.end())
                    throw UnresolvedReference("variant '" + rv.name +
                                                  "' references unknown process '" +
                                                  rv.fragment_ref + "'",
                                              s->span);
                m.variants.push_back({rv.name, rv.of, frag->second, rv.is_default});
            }
            for (const auto& [feature, bindings] : s->binds) {
                if (m.features.index_of(feature) < 0)
                    throw UnresolvedReference("binding references unknown feature '" + feature + "'",
                                              s->span);
                auto& dst = m.bindings[feature];
                dst.insert(dst.end(), bindings.begin(), bindings.end());
            }
            linked.stereotyped.emplace(s->name, std::move(m));
        }
    }
}

/// Cross-declaration checks and assembly that need the whole import closure:
/// rule-tree conclusions must exist in the merged repertoire, and every
/// process with late-bound tasks becomes a worklet model.
inline void finalize_link(Linked& linked) {
    for (const auto& [task, tree] : linked.trees)
        for (const auto& n : tree.nodes)
            if (!linked.repertoire.contains(n.conclusion))
                throw UnresolvedReference("rule tree for task '" + task +
                                          "' concludes unknown worklet '" + n.conclusion + "'");

    for (const auto& [name, model] : linked.processes) {
        const auto& flags = linked.process_worklet_tasks.at(name);
        if (flags.empty()) continue;
        WorkletModel wm;
        wm.name = name;
        wm.parent = model;
        wm.worklet_tasks = flags;
        for (const auto& label : flags) {
            auto it = linked.trees.find(label);
            if (it != linked.trees.end()) wm.trees.emplace(label, it->second);
        }
        wm.repertoire = linked.repertoire;
        linked.worklet_models.emplace(name, std::move(wm));
    }
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImportError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void collect_closure(const std::filesystem::path& path, std::vector<std::string>& stack,
                            std::set<std::string>& visited, std::vector<Document>& closure) {
    std::error_code ec;
    std::filesystem::path canon = std::filesystem::weakly_canonical(path, ec);
    if (ec) canon = path;
    const std::string key = canon.string();

    if (std::find(stack.begin(), stack.end(), key) != stack.end()) {
        std::string chain;
        for (const auto& s : stack) chain += s + " -> ";
        throw ImportError("import cycle: " + chain + key);
    }
    if (!visited.insert(key).second) return; // diamond import: already linked once

    Document doc = parse_document(read_text_file(canon), path.string());
    stack.push_back(key);
    for (const auto& decl : doc.decls) {
        if (const auto* imp = std::get_if<ImportDecl>(&decl)) {
            try {
                collect_closure(canon.parent_path() / imp->path, stack, visited, closure);
            } catch (ImportError&) {
                throw;
            } catch (Error& e) {
                e.prepend_context("imported from " + doc.filename);
                throw;
            }
        }
    }
    stack.pop_back();
    closure.push_back(std::move(doc));
}

} // namespace detail

/// Loads a file and its imports (depth first; a file is linked only once, and
/// cycles raise ImportError), then links everything into the returned
/// document's `linked` registries.
inline Document load_file(const std::string& path) {
    std::vector<Document> closure;
    std::vector<std::string> stack;
    std::set<std::string> visited;
    detail::collect_closure(path, stack, visited, closure);

    Linked linked;
    for (const auto& doc : closure) detail::link_into(linked, doc);
    detail::finalize_link(linked);

    Document root = std::move(closure.back());
    root.linked = std::move(linked);
    return root;
}

/// Parses and links a self-contained source text (no imports).
inline Document parse_and_link(const std::string& source,
                               const std::string& filename = "<memory>") {
    Document doc = parse_document(source, filename);
    for (const auto& decl : doc.decls)
        if (const auto* imp = std::get_if<ImportDecl>(&decl))
            throw ImportError("imports need a file context; load '" + imp->path +
                                  "' via load_file",
                              imp->span);
    detail::link_into(doc.linked, doc);
    detail::finalize_link(doc.linked);
    return doc;
}

} // namespace bpvar::vardl
