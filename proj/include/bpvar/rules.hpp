#pragma once

#include <cctype>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bpvar/errors.hpp"

namespace bpvar {

/// Boolean expression over context variables:
///   expr  := term ("or" term)*
///   term  := factor ("and" factor)*
///   factor:= "not" factor | "(" expr ")" | IDENT ("=" | "!=") STRING
/// Used for option rules, edge guards and rule-tree conditions.
struct RuleExpr {
    enum class Kind { var_eq, var_ne, and_, or_, not_ };

    Kind kind = Kind::var_eq;
    std::string var;   // var_eq / var_ne
    std::string value; // var_eq / var_ne
    std::vector<RuleExpr> children;

    friend bool operator==(const RuleExpr&, const RuleExpr&) = default;
};

struct RuleEval {
    bool value = false;
    std::set<std::string> unset; // variables referenced but absent from the context
};

/// Evaluates fully (no short-circuit) so the set of reported unset variables
/// does not depend on operand order. A comparison against an unset variable
/// is false, whichever operator is used.
inline void eval_into(const RuleExpr& e, const std::map<std::string, std::string>& ctx, RuleEval& out) {
    switch (e.kind) {
        case RuleExpr::Kind::var_eq:
        case RuleExpr::Kind::var_ne: {
            auto it = ctx.find(e.var);
            if (it == ctx.end()) {
                out.unset.insert(e.var);
                out.value = false;
                return;
            }
            const bool eq = it->second == e.value;
            out.value = e.kind == RuleExpr::Kind::var_eq ? eq : !eq;
            return;
        }
        case RuleExpr::Kind::not_: {
            eval_into(e.children.front(), ctx, out);
            out.value = !out.value;
            return;
        }
        case RuleExpr::Kind::and_:
        case RuleExpr::Kind::or_: {
            const bool want_and = e.kind == RuleExpr::Kind::and_;
            bool acc = want_and;
            for (const auto& c : e.children) {
                RuleEval sub;
                sub.unset.swap(out.unset);
                eval_into(c, ctx, sub);
                out.unset.swap(sub.unset);
                out.unset.insert(sub.unset.begin(), sub.unset.end());
                acc = want_and ? (acc && sub.value) : (acc || sub.value);
            }
            out.value = acc;
            return;
        }
    }
}

inline RuleEval eval_rule(const RuleExpr& e, const std::map<std::string, std::string>& ctx) {
    RuleEval out;
    eval_into(e, ctx, out);
    return out;
}

inline std::string quote_string(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

/// Canonical rendering: minimal parentheses given or < and < not precedence.
inline std::string to_string(const RuleExpr& e) {
    auto wrap = [](const RuleExpr& child, const std::string& text, bool needs) {
        (void)child;
        return needs ? "(" + text + ")" : text;
    };
    switch (e.kind) {
        case RuleExpr::Kind::var_eq: return e.var + " = " + quote_string(e.value);
        case RuleExpr::Kind::var_ne: return e.var + " != " + quote_string(e.value);
        case RuleExpr::Kind::not_: {
            const RuleExpr& c = e.children.front();
            const bool needs = c.kind == RuleExpr::Kind::and_ || c.kind == RuleExpr::Kind::or_;
            return "not " + wrap(c, to_string(c), needs);
        }
        case RuleExpr::Kind::and_: {
            std::string out;
            for (std::size_t i = 0; i < e.children.size(); ++i) {
                const RuleExpr& c = e.children[i];
                if (i) out += " and ";
                out += wrap(c, to_string(c), c.kind == RuleExpr::Kind::or_);
            }
            return out;
        }
        case RuleExpr::Kind::or_: {
            std::string out;
            for (std::size_t i = 0; i < e.children.size(); ++i) {
                if (i) out += " or ";
                out += to_string(e.children[i]);
            }
            return out;
        }
    }
    return "";
}

namespace detail {

/// Minimal tokenizer/parser for rule expressions given as plain strings
/// (edge guards, rule-tree conditions). Reports positions 1-based within
/// the string, attached to `where` for error messages.
class RuleParser {
  public:
    RuleParser(const std::string& text, std::string where) : text_(text), where_(std::move(where)) {}

    RuleExpr parse() {
        skip_ws();
        RuleExpr e = parse_or();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return e;
    }

  private:
    RuleExpr parse_or() {
        RuleExpr first = parse_and();
        skip_ws();
        if (!peek_word("or")) return first;
        RuleExpr node;
        node.kind = RuleExpr::Kind::or_;
        node.children.push_back(std::move(first));
        while (eat_word("or")) {
            node.children.push_back(parse_and());
            skip_ws();
        }
        return node;
    }

    RuleExpr parse_and() {
        RuleExpr first = parse_factor();
        skip_ws();
        if (!peek_word("and")) return first;
        RuleExpr node;
        node.kind = RuleExpr::Kind::and_;
        node.children.push_back(std::move(first));
        while (eat_word("and")) {
            node.children.push_back(parse_factor());
            skip_ws();
        }
        return node;
    }

    RuleExpr parse_factor() {
        skip_ws();
        if (eat_word("not")) {
            RuleExpr node;
            node.kind = RuleExpr::Kind::not_;
            node.children.push_back(parse_factor());
            return node;
        }
        if (eat_char('(')) {
            RuleExpr inner = parse_or();
            skip_ws();
            if (!eat_char(')')) fail("expected ')'");
            return inner;
        }
        RuleExpr node;
        node.var = parse_ident();
        skip_ws();
        if (eat_char('=')) {
            node.kind = RuleExpr::Kind::var_eq;
        } else if (text_.compare(pos_, 2, "!=") == 0) {
            pos_ += 2;
            node.kind = RuleExpr::Kind::var_ne;
        } else {
            fail("expected '=' or '!=' after variable name");
        }
        skip_ws();
        node.value = parse_string();
        return node;
    }

    std::string parse_ident() {
        skip_ws();
        std::size_t begin = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        if (begin == pos_) fail("expected a variable name");
        std::string word = text_.substr(begin, pos_ - begin);
        if (word == "and" || word == "or" || word == "not") fail("'" + word + "' is a keyword");
        return word;
    }

    std::string parse_string() {
        if (!eat_char('"')) fail("expected a quoted string");
        std::string out;
        while (pos_ < text_.size() && text_[pos_] != '"') {
            char c = text_[pos_++];
            if (c == '\\' && pos_ < text_.size()) c = text_[pos_++];
            out += c;
        }
        if (!eat_char('"')) fail("unterminated string");
        return out;
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
        throw SyntaxError("in rule '" + text_ + "': " + msg, span);
    }

    const std::string& text_;
    std::string where_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Parses a rule expression from a plain string. `where` names the place the
/// string came from, for error messages (e.g. an edge or an option name).
inline RuleExpr parse_rule(const std::string& text, const std::string& where = "rule") {
    return detail::RuleParser(text, where).parse();
}

} // namespace bpvar
