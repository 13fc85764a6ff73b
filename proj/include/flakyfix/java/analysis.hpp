#pragma once

// Localization analyses over the class model: statement extraction for stack
// frames, the backward def-use slice that finds order-sensitive statements,
// and related-code bundling for prompts. All are best-effort token-level
// analyses; they over-approximate dataflow and under-approximate semantics,
// which is the right trade for prompt construction.

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "flakyfix/errors.hpp"
#include "flakyfix/java/lexer.hpp"
#include "flakyfix/java/model.hpp"
#include "flakyfix/model.hpp"

namespace flakyfix::java {

/// Which types and calls count as "unordered". Extensible via a config file;
/// the built-in set matches share/unordered-apis.
struct UnorderedCatalog {
    std::set<std::string> type_simple_names;
    std::set<std::string> api_methods;      // suspicious wherever they are called
    std::set<std::string> iteration_sinks;  // suspicious only on unordered-typed receivers

    static UnorderedCatalog builtin() {
        UnorderedCatalog c;
        c.type_simple_names = {"HashMap", "HashSet", "Hashtable", "ConcurrentHashMap"};
        c.api_methods = {"getFields", "getDeclaredFields", "getMethods", "getDeclaredMethods"};
        c.iteration_sinks = {"keySet", "values", "entrySet", "iterator"};
        return c;
    }

    /// One qualified name per line, `#` comments. Entries whose last segment
    /// starts with an uppercase letter are types; last segments in the
    /// iteration-sink set stay receiver-sensitive; everything else is an API.
    static UnorderedCatalog from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) fail(ErrorCode::BadInput, "cannot read unordered-apis file: " + path);
        static const std::set<std::string> kSinkNames{"keySet", "values", "entrySet", "iterator"};
        UnorderedCatalog c;
        std::string line;
        while (std::getline(in, line)) {
            if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
            std::string entry;
            for (char ch : line)
                if (!std::isspace(static_cast<unsigned char>(ch))) entry += ch;
            if (entry.empty()) continue;
            auto dot = entry.rfind('.');
            std::string last = dot == std::string::npos ? entry : entry.substr(dot + 1);
            if (!last.empty() && std::isupper(static_cast<unsigned char>(last[0])))
                c.type_simple_names.insert(last);
            else if (kSinkNames.contains(last))
                c.iteration_sinks.insert(last);
            else
                c.api_methods.insert(last);
        }
        return c;
    }
};

namespace detail {

inline const std::set<std::string, std::less<>>& java_keywords() {
    static const std::set<std::string, std::less<>> kWords{
        "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class",
        "const", "continue", "default", "do", "double", "else", "enum", "extends", "final",
        "finally", "float", "for", "goto", "if", "implements", "import", "instanceof", "int",
        "interface", "long", "native", "new", "package", "private", "protected", "public",
        "return", "short", "static", "strictfp", "super", "switch", "synchronized", "this",
        "throw", "throws", "transient", "try", "void", "volatile", "while", "var", "record",
    };
    return kWords;
}

inline const std::set<std::string, std::less<>>& control_keywords() {
    static const std::set<std::string, std::less<>> kWords{
        "if", "else", "for", "while", "do", "switch", "try", "catch", "finally", "synchronized",
    };
    return kWords;
}

}  // namespace detail

/// One flat statement inside a method body. Control headers (`if (...)`,
/// `for (...)`) are statements of their own; nested blocks contribute their
/// inner statements to the same flat list, in source order.
struct Statement {
    Span span;
    int line_begin = 0;
    int line_end = 0;
    std::vector<Token> tokens;  // spans into the class source_text
};

/// Splits a method body into flat statements. Braces belonging to expressions
/// (array/anonymous-class initializers) stay inside their statement; braces
/// opening control blocks end the pending header statement.
inline std::vector<Statement> split_statements(const ClassModel& model, const MethodModel& method) {
    std::vector<Statement> out;
    if (method.body_text.empty()) return out;
    Span body{method.span.end - method.body_text.size(), method.span.end};

    std::vector<Token> all = lex(model.source_text);
    std::vector<Token> tokens;
    for (const auto& t : all)
        if (t.begin > body.begin && t.end < body.end) tokens.push_back(t);

    auto flush = [&](std::vector<Token>& pending) {
        if (pending.empty()) return;
        Statement st;
        st.tokens = pending;
        st.span = {pending.front().begin, pending.back().end};
        st.line_begin = pending.front().line;
        st.line_end = model.line_of(st.span.end - 1);
        out.push_back(std::move(st));
        pending.clear();
    };

    std::vector<Token> pending;
    int paren_depth = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Token& t = tokens[i];
        char ch = t.kind == TokenKind::Punct ? model.source_text[t.begin] : '\0';
        if (ch == '(') ++paren_depth;
        if (ch == ')') --paren_depth;
        if (paren_depth > 0) {
            pending.push_back(t);
            continue;
        }
        if (ch == ';') {
            pending.push_back(t);
            flush(pending);
            continue;
        }
        if (ch == '}') {
            flush(pending);
            continue;
        }
        if (ch == '{') {
            bool expression_brace = false;
            if (!pending.empty()) {
                std::string_view first = pending.front().text(model.source_text);
                bool control = pending.front().kind == TokenKind::Identifier &&
                               detail::control_keywords().count(std::string(first));
                if (!control) {
                    for (const auto& p : pending) {
                        std::string_view txt = p.text(model.source_text);
                        if (txt == "=" || txt == "new" || txt == "return") {
                            expression_brace = true;
                            break;
                        }
                    }
                }
            }
            if (expression_brace) {
                // balance through the matching '}' inside this statement
                int depth = 0;
                for (; i < tokens.size(); ++i) {
                    const Token& u = tokens[i];
                    pending.push_back(u);
                    if (u.kind != TokenKind::Punct) continue;
                    char uc = model.source_text[u.begin];
                    if (uc == '{') ++depth;
                    if (uc == '}') {
                        --depth;
                        if (depth == 0) break;
                    }
                }
            } else {
                flush(pending);
            }
            continue;
        }
        pending.push_back(t);
    }
    flush(pending);
    return out;
}

/// Raw statement text with line breaks and their indentation collapsed to
/// single spaces, so multi-line statements read as one line.
inline std::string joined_text(const ClassModel& model, const Statement& st) {
    std::string_view raw = model.slice(st.span);
    std::string out;
    std::size_t i = 0;
    while (i < raw.size()) {
        if (raw[i] == '\n' || raw[i] == '\r') {
            while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
            if (!out.empty() && out.back() != ' ') out += ' ';
            continue;
        }
        out += raw[i++];
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

struct LocatedStatement {
    const MethodModel* method = nullptr;
    std::string statement;  // joined text; empty when the line holds no statement
    int line = 0;           // first line of the statement (0 when empty)
};

/// Maps a stack-frame line to its enclosing method and full statement text.
/// The class_fqn must match the model; a line inside the class but outside
/// every method raises NO_ENCLOSING_METHOD so the caller can walk on to the
/// next frame.
inline LocatedStatement locate_statement(const ClassModel& model, const std::string& class_fqn,
                                         int line) {
    if (class_fqn != model.fqn())
        fail(ErrorCode::BadInput,
             "locate_statement called with " + class_fqn + " against model of " + model.fqn());
    const MethodModel* method = nullptr;
    for (const auto& m : model.methods) {
        if (line >= m.line_begin && line <= m.line_end) {
            method = &m;
            break;
        }
    }
    if (!method)
        fail(ErrorCode::NoEnclosingMethod,
             "line " + std::to_string(line) + " is outside every method of " + model.fqn());
    for (const auto& st : split_statements(model, *method)) {
        if (line >= st.line_begin && line <= st.line_end)
            return {method, joined_text(model, st), st.line_begin};
    }
    return {method, "", 0};  // degenerate: brace or blank line inside the method
}

namespace detail {

struct StatementFacts {
    std::set<std::string> defs;       // declared or assigned variables
    std::set<std::string> receivers;  // x in `x.method(...)`
    std::set<std::string> uses;       // every non-keyword identifier
    std::string declared_name;        // non-empty for local declarations
    std::string declared_type;        // simple name of declared type
    std::string constructed_type;     // simple name after `new`
};

inline StatementFacts analyze_statement(const ClassModel& model, const Statement& st) {
    StatementFacts f;
    const auto& toks = st.tokens;
    auto text = [&](std::size_t i) { return toks[i].text(model.source_text); };
    auto is_punct = [&](std::size_t i, char c) {
        return toks[i].kind == TokenKind::Punct && text(i).size() == 1 && text(i)[0] == c;
    };

    // declaration: Type ... name ('='|';') with name preceded by type tokens
    int angle = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (toks[i].kind != TokenKind::Punct) continue;
        char c = text(i)[0];
        if (c == '<') ++angle;
        if (c == '>') --angle;
        if (angle == 0 && (c == '=' || c == ';') && i >= 2 &&
            toks[i - 1].kind == TokenKind::Identifier) {
            // token before the name must close a type: identifier, '>' or ']'
            const Token& before = toks[i - 2];
            std::string_view bt = before.text(model.source_text);
            bool type_tail = before.kind == TokenKind::Identifier || bt == ">" || bt == "]";
            if (type_tail && !java_keywords().count(std::string(text(i - 1)))) {
                std::string_view first = text(0);
                if (toks[0].kind == TokenKind::Identifier && !control_keywords().count(std::string(first)) &&
                    first != "return" && first != "throw") {
                    f.declared_name = std::string(text(i - 1));
                    // simple type name: last identifier before the name, with
                    // generic argument lists skipped as balanced <...> runs so
                    // `Map<String, String> m` yields Map, not String
                    for (std::size_t j = i - 1; j-- > 0;) {
                        std::string_view jt = text(j);
                        if (jt == ">") {
                            int depth = 0;
                            while (true) {
                                std::string_view at = text(j);
                                if (at == ">") ++depth;
                                if (at == "<") --depth;
                                if (depth == 0 || j == 0) break;
                                --j;
                            }
                            if (j == 0) break;
                            continue;
                        }
                        if (toks[j].kind == TokenKind::Identifier) {
                            f.declared_type = std::string(text(j));
                            break;
                        }
                        if (jt == "]" || jt == "[" || jt == ".") continue;
                        break;
                    }
                    f.defs.insert(f.declared_name);
                }
            }
            break;
        }
    }

    // enhanced-for header: `for (Type name : expr)` defines name, so the
    // slice can cross the loop from body uses to the iterated expression
    if (!toks.empty() && text(0) == "for") {
        for (std::size_t i = 2; i < toks.size(); ++i) {
            if (is_punct(i, ':') && toks[i - 1].kind == TokenKind::Identifier &&
                !java_keywords().count(std::string(text(i - 1)))) {
                f.defs.insert(std::string(text(i - 1)));
                break;
            }
        }
    }

    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (toks[i].kind != TokenKind::Identifier) continue;
        std::string word(text(i));
        if (word == "new" && i + 1 < toks.size()) {
            // simple name of the constructed type: last identifier of the
            // dotted run after `new`
            std::size_t j = i + 1;
            std::string last;
            while (j < toks.size()) {
                if (toks[j].kind == TokenKind::Identifier) {
                    last = std::string(text(j));
                    ++j;
                    if (j < toks.size() && is_punct(j, '.')) {
                        ++j;
                        continue;
                    }
                }
                break;
            }
            if (!last.empty()) f.constructed_type = last;
        }
        if (java_keywords().count(word)) continue;
        f.uses.insert(word);
        // assignment: ident (=|+=|-=|...) — '=' directly or compound op then '='
        if (i + 1 < toks.size() && toks[i + 1].kind == TokenKind::Punct) {
            if (is_punct(i + 1, '=') && !(i + 2 < toks.size() && is_punct(i + 2, '=')))
                f.defs.insert(word);
            else if (i + 2 < toks.size() && is_punct(i + 2, '=') &&
                     (is_punct(i + 1, '+') || is_punct(i + 1, '-') || is_punct(i + 1, '*') ||
                      is_punct(i + 1, '/') || is_punct(i + 1, '|') || is_punct(i + 1, '&')))
                f.defs.insert(word);
        }
        // receiver: ident '.' method '('  (first link of the chain)
        if (i + 3 < toks.size() && is_punct(i + 1, '.') &&
            toks[i + 2].kind == TokenKind::Identifier && is_punct(i + 3, '(')) {
            bool after_dot = i > 0 && is_punct(i - 1, '.');
            if (!after_dot) f.receivers.insert(word);
        }
    }
    return f;
}

}  // namespace detail

/// Backward def-use slice from the statement covering sink_line, classifying
/// sliced statements against the unordered catalog. Best-effort and pure:
/// wrong guesses cost prompt space, never correctness.
inline std::vector<SuspectStatement> find_unordered_suspects(const ClassModel& model,
                                                             const MethodModel& method,
                                                             int sink_line,
                                                             const UnorderedCatalog& catalog) {
    auto statements = split_statements(model, method);
    std::size_t sink_idx = statements.size();
    for (std::size_t i = 0; i < statements.size(); ++i) {
        if (sink_line >= statements[i].line_begin && sink_line <= statements[i].line_end) {
            sink_idx = i;
            break;
        }
    }
    if (sink_idx == statements.size()) return {};

    std::vector<detail::StatementFacts> facts;
    facts.reserve(statements.size());
    for (const auto& st : statements) facts.push_back(detail::analyze_statement(model, st));

    // variables of unordered type, by declaration or construction
    std::set<std::string> unordered_vars;
    for (const auto& f : facts) {
        if (f.declared_name.empty()) continue;
        if (catalog.type_simple_names.contains(f.declared_type) ||
            catalog.type_simple_names.contains(f.constructed_type))
            unordered_vars.insert(f.declared_name);
    }

    // slice membership
    std::vector<bool> selected(statements.size(), false);
    selected[sink_idx] = true;
    std::set<std::string> worklist = facts[sink_idx].uses;
    for (std::size_t i = sink_idx; i-- > 0;) {
        const auto& f = facts[i];
        bool touches = false;
        for (const auto& d : f.defs)
            if (worklist.contains(d)) touches = true;
        for (const auto& r : f.receivers)
            if (worklist.contains(r)) touches = true;
        if (!touches) continue;
        selected[i] = true;
        worklist.insert(f.uses.begin(), f.uses.end());
        worklist.insert(f.receivers.begin(), f.receivers.end());
    }

    std::vector<SuspectStatement> suspects;
    for (std::size_t i = 0; i < statements.size(); ++i) {
        if (!selected[i]) continue;
        const auto& st = statements[i];
        const auto& f = facts[i];
        auto text = [&](std::size_t k) { return st.tokens[k].text(model.source_text); };
        auto is_punct = [&](std::size_t k, char c) {
            return st.tokens[k].kind == TokenKind::Punct && text(k).size() == 1 && text(k)[0] == c;
        };

        std::optional<SuspectStatement::Reason> reason;
        if (catalog.type_simple_names.contains(f.constructed_type))
            reason = SuspectStatement::Reason::UnorderedCollectionCtor;

        if (!reason) {
            for (std::size_t k = 0; k + 1 < st.tokens.size() && !reason; ++k) {
                if (st.tokens[k].kind != TokenKind::Identifier || !is_punct(k + 1, '(')) continue;
                std::string callee(text(k));
                if (catalog.api_methods.contains(callee))
                    reason = SuspectStatement::Reason::UnorderedApiCall;
                else if (catalog.iteration_sinks.contains(callee) && k >= 2 && is_punct(k - 1, '.') &&
                         st.tokens[k - 2].kind == TokenKind::Identifier &&
                         unordered_vars.contains(std::string(text(k - 2))))
                    reason = SuspectStatement::Reason::UnorderedApiCall;
            }
        }

        if (!reason) {
            for (std::size_t k = 0; k + 1 < st.tokens.size() && !reason; ++k) {
                if (st.tokens[k].kind != TokenKind::Identifier) continue;
                std::string word(text(k));
                // x.toString() / String.valueOf(x) / "..." + x on unordered x
                if (word == "toString" && k >= 2 && is_punct(k - 1, '.') &&
                    st.tokens[k - 2].kind == TokenKind::Identifier &&
                    unordered_vars.contains(std::string(text(k - 2))))
                    reason = SuspectStatement::Reason::StringifiedUnorderedValue;
                if (word == "valueOf" && k + 2 < st.tokens.size() && is_punct(k + 1, '(') &&
                    st.tokens[k + 2].kind == TokenKind::Identifier &&
                    unordered_vars.contains(std::string(text(k + 2))))
                    reason = SuspectStatement::Reason::StringifiedUnorderedValue;
                if (unordered_vars.contains(word)) {
                    bool plus_before = k >= 1 && is_punct(k - 1, '+');
                    bool plus_after = k + 1 < st.tokens.size() && is_punct(k + 1, '+');
                    bool has_string = false;
                    for (const auto& t : st.tokens)
                        if (t.kind == TokenKind::String) has_string = true;
                    if ((plus_before || plus_after) && has_string)
                        reason = SuspectStatement::Reason::StringifiedUnorderedValue;
                }
            }
        }

        if (reason) {
            SuspectStatement s;
            s.line = st.line_begin;
            s.source = joined_text(model, st);
            s.reason = *reason;
            suspects.push_back(std::move(s));
        }
    }
    return suspects;
}

/// Prompt material: the flaky method plus, for OD victims, the polluters,
/// shared fields, and helper closure.
struct RelatedCode {
    std::string flaky_source;
    std::vector<std::pair<std::string, std::string>> polluters;  // (class#method, source)
    std::vector<std::string> fields;                             // raw declaration slices
    std::vector<std::pair<std::string, std::string>> helpers;    // (Class.method, source)

    bool operator==(const RelatedCode&) const = default;
};

namespace detail {

/// Names of same-class methods called from `method`, token-level: identifier
/// directly followed by '(' and not preceded by '.' or `new`, plus explicit
/// `this.name(...)` calls.
inline std::set<std::string> called_method_names(const ClassModel& model, const MethodModel& method) {
    std::set<std::string> names;
    for (const auto& st : split_statements(model, method)) {
        const auto& toks = st.tokens;
        for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
            if (toks[i].kind != TokenKind::Identifier) continue;
            std::string_view next = toks[i + 1].text(model.source_text);
            if (!(toks[i + 1].kind == TokenKind::Punct && next == "(")) continue;
            std::string name(toks[i].text(model.source_text));
            if (java_keywords().count(name)) continue;
            bool qualified = false;
            if (i > 0) {
                std::string_view prev = toks[i - 1].text(model.source_text);
                if (prev == ".") {
                    qualified = true;
                    if (i >= 2 && toks[i - 2].text(model.source_text) == "this") qualified = false;
                }
                if (prev == "new") qualified = true;  // constructor, not a helper call
            }
            if (!qualified) names.insert(name);
        }
    }
    return names;
}

inline void collect_helpers(const ClassModel& model, const std::vector<const MethodModel*>& seeds,
                            std::vector<std::pair<std::string, std::string>>& out) {
    std::set<std::string> seed_names;
    for (const auto* m : seeds) seed_names.insert(m->name);

    std::set<std::string> included;
    std::vector<const MethodModel*> frontier = seeds;
    while (!frontier.empty()) {
        std::vector<const MethodModel*> next;
        for (const auto* m : frontier) {
            for (const auto& callee : called_method_names(model, *m)) {
                const MethodModel* target = model.find_method(callee);
                if (!target || target->is_test() || target->is_constructor) continue;
                if (seed_names.contains(target->name)) continue;
                if (included.insert(target->name).second) next.push_back(target);
            }
        }
        frontier = std::move(next);
    }

    // lifecycle methods count as helpers outright
    for (const auto& m : model.methods)
        if (m.is_lifecycle()) included.insert(m.name);

    for (const auto& m : model.methods)  // declaration order
        if (included.contains(m.name))
            out.emplace_back(model.class_name + "." + m.name, std::string(model.slice(m.span)));
}

}  // namespace detail

/// polluter_models maps class FQN → model for polluters outside the victim's
/// class; the victim's own model is always consulted first.
inline RelatedCode extract_related_code(const ClassModel& model, const FlakyTestCase& tc,
                                        const std::map<std::string, const ClassModel*>& polluter_models) {
    const MethodModel* flaky = model.find_method(tc.test.method);
    if (!flaky)
        fail(ErrorCode::TargetNotFound,
             "flaky method " + tc.test.fqn_method() + " not found in " + model.fqn());

    RelatedCode rc;
    rc.flaky_source = std::string(model.slice(flaky->span));
    if (tc.category != FlakinessCategory::OdVictim) return rc;

    auto model_for = [&](const TestId& id) -> const ClassModel& {
        if (id.class_fqn == model.fqn()) return model;
        auto it = polluter_models.find(id.class_fqn);
        if (it == polluter_models.end() || !it->second)
            fail(ErrorCode::TargetNotFound, "no model provided for polluter class " + id.class_fqn);
        return *it->second;
    };

    std::vector<const ClassModel*> involved{&model};
    std::map<const ClassModel*, std::vector<const MethodModel*>> seeds;
    seeds[&model].push_back(flaky);
    for (const auto& p : tc.polluters) {
        const ClassModel& pm = model_for(p);
        const MethodModel* method = pm.find_method(p.method);
        if (!method)
            fail(ErrorCode::TargetNotFound,
                 "polluter " + p.fqn_method() + " not found in " + pm.fqn());
        rc.polluters.emplace_back(p.fqn_method(), std::string(pm.slice(method->span)));
        if (std::find(involved.begin(), involved.end(), &pm) == involved.end())
            involved.push_back(&pm);
        seeds[&pm].push_back(method);
    }

    for (const ClassModel* cls : involved) {
        std::set<std::pair<std::size_t, std::size_t>> seen_spans;
        for (const auto& f : cls->fields) {
            if (seen_spans.insert({f.span.begin, f.span.end}).second)
                rc.fields.push_back(std::string(cls->slice(f.span)));
        }
        auto& cls_seeds = seeds[cls];
        for (const auto& m : cls->methods)
            if (m.is_lifecycle()) cls_seeds.push_back(&m);
        detail::collect_helpers(*cls, cls_seeds, rc.helpers);
    }
    return rc;
}

}  // namespace flakyfix::java
