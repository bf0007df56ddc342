#pragma once

#include <cctype>
#include <string>
#include <vector>

#include "bpvar/errors.hpp"
#include "bpvar/source_span.hpp"

namespace bpvar::vardl {

/// One lexical token. Keywords are not distinguished here — every word is an
/// `ident`, and the parser matches keyword text contextually, so statement
/// keywords stay usable as variable names inside rule expressions.
struct Token {
    enum class Kind { ident, string, punct, eof };

    Kind kind = Kind::eof;
    std::string text; // ident spelling, decoded string value, or punct spelling
    SourceSpan span;

    bool is_ident(const std::string& s) const { return kind == Kind::ident && text == s; }
    bool is_punct(const std::string& s) const { return kind == Kind::punct && text == s; }
};

namespace detail {

class Lexer {
public:
    Lexer(std::string source, std::string filename)
        : src_(std::move(source)), file_(std::move(filename)) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_trivia();
            if (eof()) {
                out.push_back({Token::Kind::eof, "", here(0)});
                return out;
            }
            const char c = peek();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                out.push_back(ident());
            } else if (c == '"') {
                out.push_back(string_lit());
            } else {
                out.push_back(punct());
            }
        }
    }

private:
    bool eof() const { return pos_ >= src_.size(); }
    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }

    char advance() {
        const char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    SourceSpan here(std::size_t length) const {
        SourceSpan s;
        s.file = file_;
        s.line = line_;
        s.column = col_;
        s.end_line = line_;
        s.end_column = col_ + static_cast<int>(length);
        return s;
    }

    void skip_trivia() {
        while (!eof()) {
            const char c = peek();
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else if (c == '/' && peek(1) == '/') {
                while (!eof() && peek() != '\n') advance();
            } else if (c == '/' && peek(1) == '*') {
                const SourceSpan open = here(2);
                advance();
                advance();
                while (!(peek() == '*' && peek(1) == '/')) {
                    if (eof()) throw SyntaxError("unterminated block comment", open);
                    advance();
                }
                advance();
                advance();
            } else {
                return;
            }
        }
    }

    Token ident() {
        SourceSpan span = here(0);
        std::string text;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_'))
            text += advance();
        span.end_line = line_;
        span.end_column = col_;
        return {Token::Kind::ident, std::move(text), std::move(span)};
    }

    Token string_lit() {
        SourceSpan span = here(0);
        advance(); // opening quote
        std::string text;
        while (true) {
            if (eof() || peek() == '\n') throw SyntaxError("unterminated string literal", span);
            char c = advance();
            if (c == '"') break;
            if (c == '\\') {
                if (eof()) throw SyntaxError("unterminated string literal", span);
                const char esc = advance();
                switch (esc) {
                    case '"': text += '"'; break;
                    case '\\': text += '\\'; break;
                    case 'n': text += '\n'; break;
                    case 't': text += '\t'; break;
                    default:
                        throw SyntaxError(std::string("unknown escape sequence '\\") + esc + "'",
                                          here(2));
                }
            } else {
                text += c;
            }
        }
        span.end_line = line_;
        span.end_column = col_;
        return {Token::Kind::string, std::move(text), std::move(span)};
    }

    Token punct() {
        SourceSpan span = here(1);
        const char c = peek();
        if (c == '-' && peek(1) == '>') {
            advance();
            advance();
            span.end_column = col_;
            return {Token::Kind::punct, "->", std::move(span)};
        }
        if (c == '!' && peek(1) == '=') {
            advance();
            advance();
            span.end_column = col_;
            return {Token::Kind::punct, "!=", std::move(span)};
        }
        static const std::string singles = "{}();,:=.";
        if (singles.find(c) == std::string::npos)
            throw SyntaxError(std::string("unexpected character '") + c + "'", span);
        advance();
        return {Token::Kind::punct, std::string(1, c), std::move(span)};
    }

    std::string src_;
    std::string file_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

} // namespace detail

inline std::vector<Token> lex(const std::string& source, const std::string& filename) {
    return detail::Lexer(source, filename).run();
}

} // namespace bpvar::vardl
