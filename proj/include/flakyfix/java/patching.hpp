#pragma once

// Patch materialization: declaration-consistency diffs and surgical source
// rewriting. apply_patch touches only replaced method spans and the import
// block; every other byte survives verbatim.

#include <algorithm>
#include <string>
#include <vector>

#include "flakyfix/errors.hpp"
#include "flakyfix/java/lexer.hpp"
#include "flakyfix/java/model.hpp"
#include "flakyfix/java/parser.hpp"

namespace flakyfix::java {

enum class DeclFacet { Modifiers, ReturnType, Parameters, Annotations };

inline std::string_view to_string(DeclFacet f) {
    switch (f) {
        case DeclFacet::Modifiers: return "MODIFIERS";
        case DeclFacet::ReturnType: return "RETURN_TYPE";
        case DeclFacet::Parameters: return "PARAMETERS";
        case DeclFacet::Annotations: return "ANNOTATIONS";
    }
    return "?";
}

struct DeclDiscrepancy {
    DeclFacet facet = DeclFacet::Modifiers;
    std::string original;
    std::string patched;

    bool operator==(const DeclDiscrepancy&) const = default;
};

namespace detail {

/// Whitespace-insensitive form: lexes the text and joins token texts with
/// single spaces, so `Map<String,String>` equals `Map<String, String>`.
/// '@' and '.' join tightly, keeping `@Test` and `a.b.C` readable.
inline std::string normalized_tokens(std::string_view text) {
    std::string out;
    for (const auto& t : lex(text)) {
        if (t.kind == TokenKind::End) break;
        std::string_view piece = t.text(text);
        bool tight = piece == "." || (!out.empty() && (out.back() == '.' || out.back() == '@'));
        if (!out.empty() && !tight) out += ' ';
        out += std::string(piece);
    }
    return out;
}

inline std::string sorted_join(std::vector<std::string> items) {
    for (auto& s : items) s = normalized_tokens(s);
    std::sort(items.begin(), items.end());
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ' ';
        out += items[i];
    }
    return out;
}

}  // namespace detail

/// Compares declaration facets of two same-named methods. Facets: modifiers
/// (order-insensitive), return type, parameter types (names excluded: a
/// rename cannot break call sites), annotations (order-insensitive). Bodies
/// are never compared.
inline std::vector<DeclDiscrepancy> declaration_diff(const MethodModel& original,
                                                     const MethodModel& patched) {
    if (original.name != patched.name)
        fail(ErrorCode::BadInput, "declaration_diff across different methods: " + original.name +
                                      " vs " + patched.name);
    std::vector<DeclDiscrepancy> out;

    std::string om = detail::sorted_join(original.modifiers);
    std::string pm = detail::sorted_join(patched.modifiers);
    if (om != pm) out.push_back({DeclFacet::Modifiers, om, pm});

    std::string ort = detail::normalized_tokens(original.return_type);
    std::string prt = detail::normalized_tokens(patched.return_type);
    if (ort != prt) out.push_back({DeclFacet::ReturnType, ort, prt});

    auto type_list = [](const MethodModel& m) {
        std::string out_types;
        for (std::size_t i = 0; i < m.parameters.size(); ++i) {
            if (i) out_types += ", ";
            out_types += detail::normalized_tokens(m.parameters[i].first);
        }
        return out_types;
    };
    std::string op = type_list(original);
    std::string pp = type_list(patched);
    if (op != pp) out.push_back({DeclFacet::Parameters, op, pp});

    std::string oa = detail::sorted_join(original.annotations);
    std::string pa = detail::sorted_join(patched.annotations);
    if (oa != pa) out.push_back({DeclFacet::Annotations, oa, pa});

    return out;
}

/// Parses one method declaration in isolation (as the only member of a
/// wrapper class). Throws PATCH_SYNTAX when the text is not a single method.
inline MethodModel parse_method_snippet(const std::string& method_text) {
    std::string wrapped = "class __PatchWrapper {\n" + method_text + "\n}\n";
    ClassModel wrapper;
    try {
        wrapper = parse_test_class(wrapped);
    } catch (const Error& e) {
        fail(ErrorCode::PatchSyntax, std::string("patch block does not parse: ") + e.what());
    }
    if (wrapper.methods.size() != 1 || !wrapper.fields.empty() || !wrapper.opaque_members.empty())
        fail(ErrorCode::PatchSyntax, "patch block must contain exactly one method declaration");
    return wrapper.methods[0];
}

/// Substitutes replaced methods at their spans, appends added helper methods
/// before the class's closing brace, and rewrites the import block. Output is
/// re-parsed before it is returned; garbage never reaches the compiler.
inline std::string apply_patch(const ClassModel& model, const PatchCandidate& patch) {
    patch.validate(model);

    struct Edit {
        Span span;            // replaced region (may be empty for insertions)
        std::string text;
    };
    std::vector<Edit> edits;

    for (const auto& [name, text] : patch.method_replacements) {
        MethodModel parsed = parse_method_snippet(text);
        if (parsed.name != name)
            fail(ErrorCode::PatchSyntax,
                 "patch block labeled '" + name + "' declares method '" + parsed.name + "'");
        if (const MethodModel* target = model.find_method(name)) {
            edits.push_back({target->span, text});
        } else {
            // new helper: insert before the class's closing brace
            Span at{model.body_span.end - 1, model.body_span.end - 1};
            edits.push_back({at, "    " + text + "\n\n"});
        }
    }

    for (const auto& removed : patch.removed_imports) {
        for (const auto& existing : model.imports) {
            if (existing.qualified_name == removed.qualified_name &&
                existing.is_static == removed.is_static) {
                Span s = existing.span;
                if (s.end < model.source_text.size() && model.source_text[s.end] == '\n') ++s.end;
                edits.push_back({s, ""});
            }
        }
    }

    std::vector<ImportDecl> to_add;
    for (const auto& add : patch.new_imports) {
        bool present = false;
        for (const auto& existing : model.imports)
            if (existing.qualified_name == add.qualified_name && existing.is_static == add.is_static)
                present = true;
        for (const auto& queued : to_add)
            if (queued.qualified_name == add.qualified_name && queued.is_static == add.is_static)
                present = true;
        if (!present) to_add.push_back(add);
    }
    std::stable_sort(to_add.begin(), to_add.end(), [](const ImportDecl& a, const ImportDecl& b) {
        return a.qualified_name < b.qualified_name;
    });
    if (!to_add.empty()) {
        std::string block;
        for (const auto& imp : to_add) {
            block += model.import_insert_offset == 0 ? "" : "\n";
            block += "import ";
            if (imp.is_static) block += "static ";
            block += imp.qualified_name + ";";
            if (model.import_insert_offset == 0) block += "\n";
        }
        edits.push_back({{model.import_insert_offset, model.import_insert_offset}, block});
    }

    std::sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) {
        if (a.span.begin != b.span.begin) return a.span.begin < b.span.begin;
        return a.span.end < b.span.end;
    });
    for (std::size_t i = 1; i < edits.size(); ++i)
        if (edits[i].span.begin < edits[i - 1].span.end)
            fail(ErrorCode::BadInput, "overlapping patch edits");

    std::string out = model.source_text;
    for (std::size_t i = edits.size(); i-- > 0;) {
        const Edit& e = edits[i];
        out.replace(e.span.begin, e.span.size(), e.text);
    }

    try {
        parse_test_class(out);
    } catch (const Error& e) {
        fail(ErrorCode::PatchSyntax, std::string("patched class fails to parse: ") + e.what());
    }
    return out;
}

}  // namespace flakyfix::java
