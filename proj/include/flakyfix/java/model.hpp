#pragma once

// Structural model of one test class. Every element carries the exact byte
// span it came from; nothing is normalized in place, so the original file can
// always be rebuilt from the model and edits stay surgical.

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "flakyfix/errors.hpp"

namespace flakyfix::java {

struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive

    bool operator==(const Span&) const = default;
    std::size_t size() const { return end - begin; }
};

struct ImportDecl {
    std::string raw_text;        // exact slice, `import` through `;`
    bool is_static = false;
    std::string qualified_name;  // dotted path, possibly ending `.*`
    std::string simple_name;     // last segment; member name for static imports
    Span span;
    int line = 0;

    bool operator==(const ImportDecl&) const = default;
};

/// Builds an ImportDecl from a qualified name (no span: synthesized imports).
inline ImportDecl make_import(const std::string& qualified, bool is_static = false) {
    ImportDecl d;
    d.is_static = is_static;
    d.qualified_name = qualified;
    auto dot = qualified.rfind('.');
    d.simple_name = dot == std::string::npos ? qualified : qualified.substr(dot + 1);
    d.raw_text = std::string("import ") + (is_static ? "static " : "") + qualified + ";";
    return d;
}

struct FieldDecl {
    std::string name;
    std::string type_text;
    std::vector<std::string> modifiers;
    bool is_static = false;
    Span span;  // whole declaration; shared by all declarators of one statement
    int line_begin = 0;
    int line_end = 0;
};

struct MethodModel {
    std::string name;
    std::vector<std::string> annotations;  // raw text, e.g. "@Test", "@Before"
    std::vector<std::string> modifiers;
    std::string return_type;  // raw text; empty for constructors
    std::vector<std::pair<std::string, std::string>> parameters;  // (type text, name)
    std::string body_text;    // exact slice including braces; empty if no body
    Span span;                // first annotation through closing brace (or `;`)
    int line_begin = 0;
    int line_end = 0;
    bool is_constructor = false;

    bool has_annotation(std::string_view simple) const {
        for (const auto& a : annotations) {
            // match "@Name" or "@pkg.Name", ignoring any "(...)" argument tail
            std::string_view v = a;
            v.remove_prefix(1);
            if (auto paren = v.find('('); paren != std::string_view::npos) v = v.substr(0, paren);
            while (!v.empty() && (v.back() == ' ' || v.back() == '\t' || v.back() == '\n')) v.remove_suffix(1);
            if (auto dot = v.rfind('.'); dot != std::string_view::npos) v = v.substr(dot + 1);
            if (v == simple) return true;
        }
        return false;
    }

    bool is_test() const { return has_annotation("Test") || has_annotation("ParameterizedTest"); }

    bool is_lifecycle() const {
        for (auto name : {"Before", "After", "BeforeEach", "AfterEach", "BeforeClass", "AfterClass",
                          "BeforeAll", "AfterAll"})
            if (has_annotation(name)) return true;
        return false;
    }
};

/// Span of a member the parser deliberately does not model (nested types,
/// initializer blocks). Tracked so losslessness checks can account for every
/// byte of the class body.
struct OpaqueMember {
    Span span;
};

struct ClassModel {
    std::string package;      // empty for the default package
    std::string class_name;
    std::vector<ImportDecl> imports;
    std::vector<FieldDecl> fields;
    std::vector<MethodModel> methods;
    std::vector<OpaqueMember> opaque_members;
    std::string source_text;
    std::vector<std::size_t> line_starts;  // byte offset where line i+1 starts
    Span body_span;  // class body from `{` to `}` inclusive
    std::size_t import_insert_offset = 0;  // byte offset where a new import block line goes

    std::string fqn() const {
        return package.empty() ? class_name : package + "." + class_name;
    }

    int line_count() const { return static_cast<int>(line_starts.size()); }

    /// Byte span of a 1-based line, excluding its trailing newline.
    Span line_span(int line) const {
        if (line < 1 || line > line_count())
            fail(ErrorCode::BadInput, "line " + std::to_string(line) + " outside file");
        std::size_t begin = line_starts[static_cast<std::size_t>(line - 1)];
        std::size_t end = line == line_count() ? source_text.size()
                                               : line_starts[static_cast<std::size_t>(line)] - 1;
        return {begin, end};
    }

    int line_of(std::size_t offset) const {
        // last line whose start is <= offset
        int lo = 1, hi = line_count();
        while (lo < hi) {
            int mid = (lo + hi + 1) / 2;
            if (line_starts[static_cast<std::size_t>(mid - 1)] <= offset)
                lo = mid;
            else
                hi = mid - 1;
        }
        return lo;
    }

    std::string_view slice(Span s) const {
        return std::string_view(source_text).substr(s.begin, s.size());
    }

    const MethodModel* find_method(std::string_view name) const {
        for (const auto& m : methods)
            if (m.name == name) return &m;
        return nullptr;
    }

    /// Self-consistency: every recorded span slices to its recorded text and
    /// members are disjoint and ordered. Returns the original text, byte for
    /// byte, proving the model lost nothing.
    const std::string& reconstruct() const {
        std::vector<Span> spans;
        for (const auto& i : imports) {
            if (slice(i.span) != i.raw_text)
                fail(ErrorCode::Parse, "import span out of sync for " + i.qualified_name);
            spans.push_back(i.span);
        }
        for (const auto& m : methods) {
            if (!m.body_text.empty() && slice(m.span).find(m.body_text) == std::string_view::npos)
                fail(ErrorCode::Parse, "method body out of sync for " + m.name);
            spans.push_back(m.span);
        }
        for (const auto& f : fields) spans.push_back(f.span);
        for (const auto& o : opaque_members) spans.push_back(o.span);
        std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
            return a.begin < b.begin;
        });
        std::size_t prev_end = 0;
        Span prev{0, 0};
        for (const auto& s : spans) {
            if (s.begin < prev_end && !(s == prev))  // identical spans: multi-declarator fields
                fail(ErrorCode::Parse, "overlapping member spans");
            prev_end = std::max(prev_end, s.end);
            prev = s;
            if (s.end > source_text.size()) fail(ErrorCode::Parse, "span past end of source");
        }
        return source_text;
    }
};

/// One localized suspicion for Implementation-Dependent flakiness.
struct SuspectStatement {
    enum class Reason { UnorderedCollectionCtor, UnorderedApiCall, StringifiedUnorderedValue };

    int line = 0;          // first line of the statement
    std::string source;    // joined statement text
    Reason reason = Reason::UnorderedCollectionCtor;

    bool operator==(const SuspectStatement&) const = default;
};

inline std::string_view to_string(SuspectStatement::Reason r) {
    switch (r) {
        case SuspectStatement::Reason::UnorderedCollectionCtor: return "UNORDERED_COLLECTION_CTOR";
        case SuspectStatement::Reason::UnorderedApiCall: return "UNORDERED_API_CALL";
        case SuspectStatement::Reason::StringifiedUnorderedValue: return "STRINGIFIED_UNORDERED_VALUE";
    }
    return "?";
}

/// Everything the LLM proposed for one iteration, already split into edits.
struct PatchCandidate {
    std::map<std::string, std::string> method_replacements;  // name → full declaration text
    std::set<std::string> added_methods;  // subset of keys above that are new helpers
    std::vector<ImportDecl> new_imports;
    std::vector<ImportDecl> removed_imports;
    std::vector<std::array<std::string, 3>> build_dependencies;  // {group, artifact, version}
    std::string raw_response;

    void validate(const ClassModel& target) const {
        for (const auto& [name, text] : method_replacements) {
            if (added_methods.contains(name)) continue;
            if (!target.find_method(name))
                fail(ErrorCode::UnknownTarget,
                     "patch replaces method '" + name + "' absent from " + target.class_name);
        }
        for (const auto& in : new_imports)
            for (const auto& out : removed_imports)
                if (in.qualified_name == out.qualified_name && in.is_static == out.is_static)
                    fail(ErrorCode::BadInput,
                         "import '" + in.qualified_name + "' both added and removed");
    }
};

}  // namespace flakyfix::java
