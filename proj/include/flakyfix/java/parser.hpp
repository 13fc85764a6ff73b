#pragma once

// Purpose-built parser for Java test classes. It recovers exactly what the
// pipeline needs: package, imports, fields, method declarations with precise
// byte spans, and nothing else. Generics, lambdas, and expressions pass
// through as opaque token runs inside spans; nested types and initializer
// blocks become opaque members. Parse failures throw and never yield a
// partial model.

#include <string>
#include <vector>

#include "flakyfix/errors.hpp"
#include "flakyfix/java/lexer.hpp"
#include "flakyfix/java/model.hpp"

namespace flakyfix::java {

namespace detail {

inline const std::set<std::string, std::less<>>& modifier_words() {
    static const std::set<std::string, std::less<>> kWords{
        "public", "protected", "private", "static",   "final",    "abstract",
        "native", "transient", "volatile", "strictfp", "default",  "synchronized",
    };
    return kWords;
}

class Cursor {
  public:
    Cursor(std::string_view source, std::vector<Token> tokens)
        : source_(source), tokens_(std::move(tokens)) {}

    const Token& at(std::size_t offset = 0) const {
        std::size_t idx = std::min(pos_ + offset, tokens_.size() - 1);
        return tokens_[idx];
    }

    std::string_view text(std::size_t offset = 0) const { return at(offset).text(source_); }

    bool is_punct(char c, std::size_t offset = 0) const {
        const Token& t = at(offset);
        return t.kind == TokenKind::Punct && t.end - t.begin == 1 && source_[t.begin] == c;
    }

    bool is_ident(std::string_view word, std::size_t offset = 0) const {
        const Token& t = at(offset);
        return t.kind == TokenKind::Identifier && t.text(source_) == word;
    }

    bool done() const { return at().kind == TokenKind::End; }

    void next() {
        if (pos_ + 1 < tokens_.size()) ++pos_;
    }

    std::size_t index() const { return pos_; }
    void seek(std::size_t idx) { pos_ = std::min(idx, tokens_.size() - 1); }
    const Token& token_at_index(std::size_t idx) const {
        return tokens_[std::min(idx, tokens_.size() - 1)];
    }
    std::size_t count() const { return tokens_.size(); }

    [[noreturn]] void reject(const std::string& what) const {
        fail(ErrorCode::Parse, "line " + std::to_string(at().line) + ": " + what);
    }

    /// Advances past a balanced bracket group whose opener is the current
    /// token. Balances the opener's own bracket class only.
    void skip_balanced() {
        char open = source_[at().begin];
        char close = open == '(' ? ')' : open == '{' ? '}' : open == '[' ? ']' : open == '<' ? '>' : 0;
        if (close == 0) reject("expected bracket");
        int depth = 0;
        while (!done()) {
            if (at().kind == TokenKind::Punct) {
                char c = source_[at().begin];
                if (c == open) ++depth;
                if (c == close) {
                    --depth;
                    if (depth == 0) {
                        next();
                        return;
                    }
                }
            }
            next();
        }
        reject(std::string("unbalanced '") + open + "'");
    }

  private:
    std::string_view source_;
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

/// Reads a dotted name (`a.b.C` or `a.b.*`), returning the joined text.
inline std::string read_qualified_name(Cursor& c) {
    if (c.at().kind != TokenKind::Identifier) c.reject("expected identifier");
    std::string name(c.text());
    c.next();
    while (c.is_punct('.')) {
        c.next();
        if (c.at().kind == TokenKind::Identifier) {
            name += '.';
            name += c.text();
            c.next();
        } else if (c.is_punct('*')) {
            name += ".*";
            c.next();
            break;
        } else {
            c.reject("malformed qualified name");
        }
    }
    return name;
}

/// Consumes one annotation starting at '@'; returns its exact source slice.
inline std::string read_annotation(Cursor& c, std::string_view source) {
    std::size_t begin = c.at().begin;
    c.next();  // '@'
    if (c.at().kind != TokenKind::Identifier) c.reject("expected annotation name");
    read_qualified_name(c);
    std::size_t end = c.token_at_index(c.index() - 1).end;
    if (c.is_punct('(')) {
        std::size_t open_idx = c.index();
        c.skip_balanced();
        end = c.token_at_index(c.index() - 1).end;
        (void)open_idx;
    }
    return std::string(source.substr(begin, end - begin));
}

/// Splits raw parameter-list text into (type text, name) pairs. Commas inside
/// generics, arrays, or annotation arguments do not split.
inline std::vector<std::pair<std::string, std::string>> parse_parameters(std::string_view raw) {
    std::vector<std::pair<std::string, std::string>> params;
    std::vector<std::string_view> pieces;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        char ch = raw[i];
        if (ch == '<' || ch == '(' || ch == '[') ++depth;
        if (ch == '>' || ch == ')' || ch == ']') --depth;
        if (ch == ',' && depth == 0) {
            pieces.push_back(raw.substr(start, i - start));
            start = i + 1;
        }
    }
    if (start < raw.size()) pieces.push_back(raw.substr(start));

    auto trim = [](std::string_view v) {
        while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
        while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
        return v;
    };
    for (auto piece : pieces) {
        piece = trim(piece);
        if (piece.empty()) continue;
        // name = trailing identifier run
        std::size_t end = piece.size();
        std::size_t begin = end;
        while (begin > 0 && ident_part(piece[begin - 1])) --begin;
        std::string name(piece.substr(begin, end - begin));
        std::string type(trim(piece.substr(0, begin)));
        params.emplace_back(std::move(type), std::move(name));
    }
    return params;
}

}  // namespace detail

/// Parses one compilation unit holding a single top-level class.
inline ClassModel parse_test_class(const std::string& source_text) {
    ClassModel model;
    model.source_text = source_text;
    model.line_starts.push_back(0);
    for (std::size_t i = 0; i < source_text.size(); ++i)
        if (source_text[i] == '\n') model.line_starts.push_back(i + 1);

    detail::Cursor c(model.source_text, lex(model.source_text));

    std::size_t after_package = 0;
    if (c.is_ident("package")) {
        c.next();
        model.package = detail::read_qualified_name(c);
        if (!c.is_punct(';')) c.reject("expected ';' after package declaration");
        after_package = c.at().end;
        c.next();
    }

    model.import_insert_offset = after_package;
    while (c.is_ident("import")) {
        ImportDecl decl;
        decl.span.begin = c.at().begin;
        decl.line = c.at().line;
        c.next();
        if (c.is_ident("static")) {
            decl.is_static = true;
            c.next();
        }
        decl.qualified_name = detail::read_qualified_name(c);
        if (!c.is_punct(';')) c.reject("expected ';' after import");
        decl.span.end = c.at().end;
        c.next();
        decl.raw_text = std::string(model.slice(decl.span));
        auto dot = decl.qualified_name.rfind('.');
        decl.simple_name =
            dot == std::string::npos ? decl.qualified_name : decl.qualified_name.substr(dot + 1);
        model.imports.push_back(std::move(decl));
        model.import_insert_offset = model.imports.back().span.end;
    }

    // class declaration: annotations and modifiers first
    while (c.is_punct('@')) detail::read_annotation(c, model.source_text);
    while (c.at().kind == TokenKind::Identifier &&
           detail::modifier_words().count(std::string(c.text())))
        c.next();
    if (!c.is_ident("class"))
        c.reject("expected a top-level class declaration, found '" + std::string(c.text()) + "'");
    c.next();
    if (c.at().kind != TokenKind::Identifier) c.reject("expected class name");
    model.class_name = std::string(c.text());
    c.next();
    if (c.is_punct('<')) c.skip_balanced();
    while (!c.is_punct('{')) {
        if (c.done()) c.reject("class body never opens");
        c.next();  // extends / implements clauses
    }
    model.body_span.begin = c.at().begin;

    // class body members
    std::size_t body_open_idx = c.index();
    c.next();
    while (true) {
        if (c.done()) c.reject("class body never closes");
        if (c.is_punct('}')) break;

        std::size_t member_begin = c.at().begin;
        int member_line = c.at().line;
        std::vector<std::string> annotations;
        while (c.is_punct('@')) {
            // `@interface` introduces a nested annotation type, not a marker
            if (c.is_ident("interface", 1)) break;
            annotations.push_back(detail::read_annotation(c, model.source_text));
        }
        std::vector<std::string> modifiers;
        while (c.at().kind == TokenKind::Identifier &&
               detail::modifier_words().count(std::string(c.text()))) {
            modifiers.emplace_back(c.text());
            c.next();
        }

        if (c.is_punct(';')) {  // stray semicolon member
            model.opaque_members.push_back({{member_begin, c.at().end}});
            c.next();
            continue;
        }

        bool nested_type = c.is_ident("class") || c.is_ident("interface") || c.is_ident("enum") ||
                           c.is_ident("record") || (c.is_punct('@') && c.is_ident("interface", 1));
        if (nested_type) {
            while (!c.is_punct('{')) {
                if (c.done()) c.reject("nested type body never opens");
                c.next();
            }
            c.skip_balanced();
            model.opaque_members.push_back({{member_begin, c.token_at_index(c.index() - 1).end}});
            continue;
        }

        if (c.is_punct('{')) {  // initializer block (modifiers may hold `static`)
            c.skip_balanced();
            model.opaque_members.push_back({{member_begin, c.token_at_index(c.index() - 1).end}});
            continue;
        }

        // Disambiguate method vs field: walk forward; '(' right after an
        // identifier means method, '=' ',' or ';' first means field. Angle
        // brackets are balanced (type position), parens cannot occur inside
        // a type.
        std::size_t type_begin_idx = c.index();
        std::size_t probe = c.index();
        int angle_depth = 0;
        bool is_method = false;
        std::size_t name_idx = 0;
        while (probe < c.count()) {
            const Token& t = c.token_at_index(probe);
            if (t.kind == TokenKind::End) c.reject("unexpected end of file in member");
            if (t.kind == TokenKind::Punct) {
                char ch = model.source_text[t.begin];
                if (ch == '<') ++angle_depth;
                if (ch == '>') --angle_depth;
                if (angle_depth == 0 && (ch == '=' || ch == ';')) break;
                if (angle_depth == 0 && ch == ',') break;
                if (ch == '(') {
                    is_method = true;
                    name_idx = probe - 1;
                    break;
                }
            }
            ++probe;
        }

        if (is_method) {
            MethodModel m;
            m.annotations = std::move(annotations);
            m.modifiers = std::move(modifiers);
            m.span.begin = member_begin;
            m.line_begin = member_line;
            const Token& name_tok = c.token_at_index(name_idx);
            if (name_tok.kind != TokenKind::Identifier) c.reject("expected method name before '('");
            m.name = std::string(name_tok.text(model.source_text));
            m.is_constructor = m.name == model.class_name && name_idx == type_begin_idx;
            if (!m.is_constructor) {
                if (name_idx == type_begin_idx) c.reject("method '" + m.name + "' lacks a return type");
                Span rt{c.token_at_index(type_begin_idx).begin, name_tok.begin};
                m.return_type = std::string(model.slice(rt));
                while (!m.return_type.empty() && std::isspace(static_cast<unsigned char>(m.return_type.back())))
                    m.return_type.pop_back();
            }
            c.seek(name_idx + 1);  // the '(' token
            std::size_t params_begin = c.at().end;
            c.skip_balanced();
            std::size_t params_end = c.token_at_index(c.index() - 1).begin;
            m.parameters = detail::parse_parameters(
                model.source_text.substr(params_begin, params_end - params_begin));
            // throws clause and anything else up to the body or ';'
            while (!c.is_punct('{') && !c.is_punct(';')) {
                if (c.done()) c.reject("method '" + m.name + "' has no body");
                c.next();
            }
            if (c.is_punct('{')) {
                std::size_t body_begin = c.at().begin;
                c.skip_balanced();
                std::size_t body_end = c.token_at_index(c.index() - 1).end;
                m.body_text = model.source_text.substr(body_begin, body_end - body_begin);
                m.span.end = body_end;
            } else {
                m.body_text.clear();
                m.span.end = c.at().end;
                c.next();
            }
            m.line_end = model.line_of(m.span.end - 1);
            model.methods.push_back(std::move(m));
            continue;
        }

        // field declaration, possibly with several declarators
        std::size_t decl_probe = c.index();
        angle_depth = 0;
        std::size_t first_name_idx = 0;
        while (decl_probe < c.count()) {
            const Token& t = c.token_at_index(decl_probe);
            if (t.kind == TokenKind::End) c.reject("unexpected end of file in field");
            if (t.kind == TokenKind::Punct) {
                char ch = model.source_text[t.begin];
                if (ch == '<') ++angle_depth;
                if (ch == '>') --angle_depth;
                if (ch == '[' || ch == ']') { ++decl_probe; continue; }
                if (angle_depth == 0 && (ch == '=' || ch == ',' || ch == ';')) {
                    first_name_idx = decl_probe - 1;
                    break;
                }
            }
            ++decl_probe;
        }
        const Token& first_name = c.token_at_index(first_name_idx);
        if (first_name.kind != TokenKind::Identifier) c.reject("expected field name");
        Span type_span{c.token_at_index(type_begin_idx).begin, first_name.begin};
        std::string type_text(model.slice(type_span));
        while (!type_text.empty() && std::isspace(static_cast<unsigned char>(type_text.back())))
            type_text.pop_back();
        if (type_text.empty()) c.reject("field '" + std::string(first_name.text(model.source_text)) + "' lacks a type");

        std::vector<std::string> names{std::string(first_name.text(model.source_text))};
        c.seek(first_name_idx + 1);
        // skip initializers / further declarators until ';' at bracket depth 0
        int depth = 0;
        while (true) {
            if (c.done()) c.reject("field declaration never terminated");
            if (c.at().kind == TokenKind::Punct) {
                char ch = model.source_text[c.at().begin];
                if (ch == '(' || ch == '{' || ch == '[') ++depth;
                if (ch == ')' || ch == '}' || ch == ']') --depth;
                if (depth == 0 && ch == ';') break;
                if (depth == 0 && ch == ',') {
                    if (c.at(1).kind == TokenKind::Identifier &&
                        (c.is_punct('=', 2) || c.is_punct(',', 2) || c.is_punct(';', 2)))
                        names.emplace_back(c.text(1));
                }
            }
            c.next();
        }
        Span field_span{member_begin, c.at().end};
        c.next();
        for (const auto& name : names) {
            FieldDecl f;
            f.name = name;
            f.type_text = type_text;
            f.modifiers = modifiers;
            f.is_static = std::find(modifiers.begin(), modifiers.end(), "static") != modifiers.end();
            f.span = field_span;
            f.line_begin = member_line;
            f.line_end = model.line_of(field_span.end - 1);
            model.fields.push_back(std::move(f));
        }
    }

    model.body_span.end = c.at().end;
    c.next();
    if (!c.done()) c.reject("trailing content after the top-level class");
    (void)body_open_idx;
    return model;
}

}  // namespace flakyfix::java
