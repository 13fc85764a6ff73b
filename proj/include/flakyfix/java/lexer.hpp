#pragma once

// Token-level scanner for the Java subset the analyzer understands. Comments
// and whitespace are skipped but never lost: tokens carry byte spans into the
// original text, and every consumer slices the original, so reconstruction is
// exact by construction.

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "flakyfix/errors.hpp"

namespace flakyfix::java {

enum class TokenKind { Identifier, Number, String, Char, Punct, End };

struct Token {
    TokenKind kind = TokenKind::End;
    std::size_t begin = 0;  // byte offset, inclusive
    std::size_t end = 0;    // byte offset, exclusive
    int line = 0;           // 1-based line of `begin`

    std::string_view text(std::string_view source) const {
        return source.substr(begin, end - begin);
    }
};

namespace detail {

inline bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

inline bool ident_part(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

}  // namespace detail

/// Tokenizes `source`. Multi-char operators come out as single-char Punct
/// tokens; structural consumers only care about brackets and separators.
/// Throws PARSE on unterminated strings, chars, or block comments.
inline std::vector<Token> lex(std::string_view source) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    int line = 1;
    const std::size_t n = source.size();

    auto advance_line = [&](char c) {
        if (c == '\n') ++line;
    };

    while (i < n) {
        char c = source[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance_line(c);
            ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && source[i + 1] == '/') {
            while (i < n && source[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && source[i + 1] == '*') {
            std::size_t start_line = line;
            i += 2;
            while (i + 1 < n && !(source[i] == '*' && source[i + 1] == '/')) {
                advance_line(source[i]);
                ++i;
            }
            if (i + 1 >= n)
                fail(ErrorCode::Parse,
                     "unterminated block comment starting at line " + std::to_string(start_line));
            i += 2;
            continue;
        }
        Token tok;
        tok.begin = i;
        tok.line = line;
        if (c == '"') {
            tok.kind = TokenKind::String;
            if (i + 2 < n && source[i + 1] == '"' && source[i + 2] == '"') {
                // text block: """ ... """
                i += 3;
                while (i + 2 < n && !(source[i] == '"' && source[i + 1] == '"' && source[i + 2] == '"')) {
                    advance_line(source[i]);
                    ++i;
                }
                if (i + 2 >= n)
                    fail(ErrorCode::Parse, "unterminated text block at line " + std::to_string(tok.line));
                i += 3;
            } else {
                ++i;
                while (i < n && source[i] != '"') {
                    if (source[i] == '\\' && i + 1 < n) ++i;
                    if (source[i] == '\n')
                        fail(ErrorCode::Parse,
                             "unterminated string literal at line " + std::to_string(tok.line));
                    ++i;
                }
                if (i >= n)
                    fail(ErrorCode::Parse,
                         "unterminated string literal at line " + std::to_string(tok.line));
                ++i;  // closing quote
            }
        } else if (c == '\'') {
            tok.kind = TokenKind::Char;
            ++i;
            while (i < n && source[i] != '\'') {
                if (source[i] == '\\' && i + 1 < n) ++i;
                ++i;
            }
            if (i >= n)
                fail(ErrorCode::Parse, "unterminated char literal at line " + std::to_string(tok.line));
            ++i;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            tok.kind = TokenKind::Number;
            // loose scan covering hex, binary, floats, underscores, suffixes
            while (i < n && (detail::ident_part(source[i]) || source[i] == '.')) {
                // '.' only continues a number when followed by a digit (avoids
                // swallowing `1.equals` style chains, which are not valid Java
                // anyway, and keeps ranges like `1..2` out of scope)
                if (source[i] == '.' &&
                    !(i + 1 < n && std::isdigit(static_cast<unsigned char>(source[i + 1]))))
                    break;
                ++i;
            }
        } else if (detail::ident_start(c)) {
            tok.kind = TokenKind::Identifier;
            while (i < n && detail::ident_part(source[i])) ++i;
        } else {
            tok.kind = TokenKind::Punct;
            ++i;
        }
        tok.end = i;
        tokens.push_back(tok);
    }
    Token end_tok;
    end_tok.kind = TokenKind::End;
    end_tok.begin = end_tok.end = n;
    end_tok.line = line;
    tokens.push_back(end_tok);
    return tokens;
}

}  // namespace flakyfix::java
