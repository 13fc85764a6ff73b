#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flakyfix/errors.hpp"
#include "flakyfix/inspector.hpp"
#include "flakyfix/model.hpp"

namespace flakyfix {

/// One rendered prompt, kept as sections so feedback iterations can swap the
/// volatile parts without touching the rest. Rendering order is fixed:
/// instruction, problem definition, related code, failure location, rules.
struct Prompt {
    std::string instruction;
    std::string problem_definition;
    std::string related_code;
    std::string failure_location;
    std::vector<std::string> rules;  // exactly 6, unnumbered; render() numbers them
    FlakinessCategory category = FlakinessCategory::Id;
    int iteration = 1;
    int char_budget = 24000;

    bool operator==(const Prompt&) const = default;

    std::string render() const {
        std::string out;
        out += "## Instruction\n\n" + instruction + "\n\n";
        out += "## Problem Definition\n\n" + problem_definition + "\n\n";
        out += "## Related Code\n\n" + related_code + "\n\n";
        out += "## Failure Location\n\n" + failure_location + "\n\n";
        out += "## Rules\n\n";
        for (std::size_t i = 0; i < rules.size(); ++i)
            out += std::to_string(i + 1) + ". " + rules[i] + "\n";
        return out;
    }

    void validate() const {
        if (rules.size() != 6)
            fail(ErrorCode::BadInput,
                 "prompt carries " + std::to_string(rules.size()) + " rules; exactly 6 required");
        if (iteration < 1 || iteration > 5)
            fail(ErrorCode::BadInput, "prompt iteration " + std::to_string(iteration) +
                                          " outside 1..5");
        if (char_budget < 1) fail(ErrorCode::BadInput, "prompt char budget must be positive");
        if (instruction.empty() || problem_definition.empty())
            fail(ErrorCode::BadInput, "prompt with empty instruction or problem definition");
        if (render().size() > static_cast<std::size_t>(char_budget))
            fail(ErrorCode::BadInput, "rendered prompt exceeds its own char budget");
    }
};

/// Category-specific template text: the editable parts of a prompt. Rules
/// are stored unnumbered.
struct PromptTemplate {
    std::string instruction;
    std::string problem_definition;
    std::vector<std::string> rules;

    bool operator==(const PromptTemplate&) const = default;
};

namespace detail {

inline std::string strip_rule_number(std::string line) {
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i > 0 && i + 1 < line.size() && line[i] == '.' && line[i + 1] == ' ')
        return line.substr(i + 2);
    return line;
}

inline std::string trim_blank_edges(const std::string& text) {
    std::size_t begin = 0, end = text.size();
    while (begin < end && (text[begin] == '\n' || text[begin] == '\r')) ++begin;
    while (end > begin && (text[end - 1] == '\n' || text[end - 1] == '\r' || text[end - 1] == ' '))
        --end;
    return text.substr(begin, end - begin);
}

/// Template file grammar: optional '#' comment/blank preamble, then the
/// three bracketed sections in any order, each exactly once.
inline PromptTemplate parse_template(const std::string& text, const std::string& what) {
    std::map<std::string, std::string> sections;
    std::string current;
    bool in_preamble = true;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;

        if (line == "[INSTRUCTION]" || line == "[PROBLEM_DEFINITION]" || line == "[RULES]") {
            current = line.substr(1, line.size() - 2);
            if (sections.count(current))
                fail(ErrorCode::BadInput, what + ": duplicate section " + line);
            sections[current] = "";
            in_preamble = false;
            continue;
        }
        if (in_preamble) {
            if (line.empty() || line[0] == '#') continue;
            fail(ErrorCode::BadInput, what + ": preamble must be '#' comments, found: " + line);
        }
        sections[current] += line + "\n";
    }
    for (const char* required : {"INSTRUCTION", "PROBLEM_DEFINITION", "RULES"})
        if (!sections.count(required))
            fail(ErrorCode::BadInput, what + ": missing [" + std::string(required) + "] section");

    PromptTemplate tmpl;
    tmpl.instruction = trim_blank_edges(sections["INSTRUCTION"]);
    tmpl.problem_definition = trim_blank_edges(sections["PROBLEM_DEFINITION"]);
    std::string rules = sections["RULES"];
    std::size_t rp = 0;
    while (rp < rules.size()) {
        auto nl = rules.find('\n', rp);
        std::string line = rules.substr(rp, nl - rp);
        rp = nl == std::string::npos ? rules.size() : nl + 1;
        if (!trim_blank_edges(line).empty()) tmpl.rules.push_back(strip_rule_number(line));
    }
    if (tmpl.rules.size() != 6)
        fail(ErrorCode::BadInput, what + ": [RULES] lists " + std::to_string(tmpl.rules.size()) +
                                      " rules; exactly 6 required");
    if (tmpl.instruction.empty() || tmpl.problem_definition.empty())
        fail(ErrorCode::BadInput, what + ": empty instruction or problem definition");
    return tmpl;
}

inline std::string read_template_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(ErrorCode::BadInput, "cannot read template file " + p.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

/// Replaces {{name}} placeholders; an unknown or unterminated placeholder is
/// a configuration error, not something to pass through to the provider.
inline std::string substitute(std::string text, const std::map<std::string, std::string>& vars) {
    std::size_t pos = 0;
    while ((pos = text.find("{{", pos)) != std::string::npos) {
        auto end = text.find("}}", pos);
        if (end == std::string::npos)
            fail(ErrorCode::BadInput, "unterminated placeholder in template text");
        std::string key = text.substr(pos + 2, end - pos - 2);
        auto it = vars.find(key);
        if (it == vars.end()) fail(ErrorCode::BadInput, "unknown placeholder '" + key + "'");
        text.replace(pos, end + 2 - pos, it->second);
        pos += it->second.size();
    }
    return text;
}

}  // namespace detail

/// The three per-category templates. builtin() embeds the same text that
/// ships in share/templates/ (a test pins the two against each other);
/// from_dir() loads user-edited copies.
struct TemplateSet {
    PromptTemplate od_victim;
    PromptTemplate od_brittle;
    PromptTemplate id;

    bool operator==(const TemplateSet&) const = default;

    const PromptTemplate& for_category(FlakinessCategory c) const {
        switch (c) {
            case FlakinessCategory::OdVictim: return od_victim;
            case FlakinessCategory::OdBrittle: return od_brittle;
            case FlakinessCategory::Id: return id;
        }
        fail(ErrorCode::BadInput, "unknown flakiness category");
    }

    static TemplateSet from_dir(const std::filesystem::path& dir) {
        TemplateSet set;
        set.od_victim = detail::parse_template(detail::read_template_file(dir / "od_victim.tmpl"),
                                               "od_victim.tmpl");
        set.od_brittle = detail::parse_template(
            detail::read_template_file(dir / "od_brittle.tmpl"), "od_brittle.tmpl");
        set.id = detail::parse_template(detail::read_template_file(dir / "id.tmpl"), "id.tmpl");
        return set;
    }

    static const TemplateSet& builtin();
};

namespace detail {

inline const char* kVictimTemplate = R"tmpl([INSTRUCTION]
Act as a software testing expert. Repair the order-dependent flaky test shown
below. The test is a victim: it passes when executed alone but fails when it
runs after other tests, because those tests leave shared state behind.
General advice: clean or isolate the shared state so the victim sees the
environment it expects, either by resetting it in the victim, in the
polluter, or in a setup or teardown helper, and keep every assertion
meaningful.
[PROBLEM_DEFINITION]
The victim test {{test}} passes in isolation but fails when executed after
the polluter tests {{polluters}}. Repair the flakiness so that {{test}}
passes in every execution order.
[RULES]
1. Solve the problem with implicit Chain-of-Thoughts: think the repair through step by step internally, but output only the final answer.
2. Update the imports and build files if needed.
3. Generate syntactically correct code.
4. Ensure all the arguments are correct.
5. Use compatible types for all variables.
6. Follow the specified formatting: reply only with fenced code blocks; use one block opened with ```METHOD <name> for each rewritten or added method (complete declaration, annotations included), an optional block opened with ```IMPORTS listing one import statement per line (prefix a line with - to drop that import), and an optional block opened with ```BUILD_DEPS listing one group:artifact:version coordinate per line.
)tmpl";

inline const char* kBrittleTemplate = R"tmpl([INSTRUCTION]
Act as a software testing expert. Repair the order-dependent flaky test shown
below. The test is brittle: it fails when executed alone or first, because it
silently relies on state that some other test normally prepares. General
advice: make the test establish every precondition it needs by itself, for
example in its own body or in a setup method, instead of inheriting leftover
state from other tests.
[PROBLEM_DEFINITION]
The brittle test {{test}} fails when executed in isolation. Repair the
flakiness so that {{test}} passes on its own and in every execution order.
[RULES]
1. Solve the problem with implicit Chain-of-Thoughts: think the repair through step by step internally, but output only the final answer.
2. Update the imports and build files if needed.
3. Generate syntactically correct code.
4. Ensure all the arguments are correct.
5. Use compatible types for all variables.
6. Follow the specified formatting: reply only with fenced code blocks; use one block opened with ```METHOD <name> for each rewritten or added method (complete declaration, annotations included), an optional block opened with ```IMPORTS listing one import statement per line (prefix a line with - to drop that import), and an optional block opened with ```BUILD_DEPS listing one group:artifact:version coordinate per line.
)tmpl";

inline const char* kIdTemplate = R"tmpl([INSTRUCTION]
Act as a software testing expert. Repair the implementation-dependent flaky
test shown below. The test assumes a deterministic element order that the
runtime never guarantees, for example the iteration order of hash-based
collections or the order of reflection results. General advice: use
order-preserving or sorted data structures, or compare results in an
order-insensitive way, without weakening what the test verifies.
[PROBLEM_DEFINITION]
The flaky test {{test}} fails intermittently because it depends on an
unspecified internal ordering. Repair the flakiness so that {{test}} passes
under every element ordering.
[RULES]
1. Solve the problem with implicit Chain-of-Thoughts: think the repair through step by step internally, but output only the final answer.
2. Update the imports and build files if needed.
3. Generate syntactically correct code.
4. Ensure all the arguments are correct.
5. Use compatible types for all variables.
6. Follow the specified formatting: reply only with fenced code blocks; use one block opened with ```METHOD <name> for each rewritten or added method (complete declaration, annotations included), an optional block opened with ```IMPORTS listing one import statement per line (prefix a line with - to drop that import), and an optional block opened with ```BUILD_DEPS listing one group:artifact:version coordinate per line.
)tmpl";

}  // namespace detail

inline const TemplateSet& TemplateSet::builtin() {
    static const TemplateSet set = [] {
        TemplateSet s;
        s.od_victim = detail::parse_template(detail::kVictimTemplate, "builtin od_victim");
        s.od_brittle = detail::parse_template(detail::kBrittleTemplate, "builtin od_brittle");
        s.id = detail::parse_template(detail::kIdTemplate, "builtin id");
        return s;
    }();
    return set;
}

/// Renders CI.1 to CI.3 as role-prefixed lines. One line per item; CI.2 is
/// omitted for degraded bundles, CI.3 depends on the category: suspect
/// statements for ID, a shared-state summary for OD_VICTIM, nothing for
/// OD_BRITTLE.
inline std::string render_failure_location(const ContextBundle& context,
                                           FlakinessCategory category) {
    std::vector<std::string> lines;
    lines.push_back("Error (CI.1): " + context.error_message);
    if (context.failing_assertion) {
        const auto& fa = *context.failing_assertion;
        std::string line = "Failed assertion (CI.2): " + fa.class_fqn + "#" + fa.method +
                           " line " + std::to_string(fa.line);
        if (!fa.statement.empty()) line += ": " + fa.statement;
        lines.push_back(line);
    }
    switch (category) {
        case FlakinessCategory::Id:
            for (const auto& s : context.suspects)
                lines.push_back("Flakiness suspect (CI.3): line " + std::to_string(s.line) + " [" +
                                std::string(java::to_string(s.reason)) + "]: " + s.source);
            break;
        case FlakinessCategory::OdVictim:
            for (const auto& f : context.related_code.fields)
                lines.push_back("Flakiness suspect (CI.3): shared field: " + f);
            for (const auto& h : context.related_code.helpers)
                lines.push_back("Flakiness suspect (CI.3): helper method: " + h.first);
            break;
        case FlakinessCategory::OdBrittle:
            break;
    }
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) out += lines[i] + (i + 1 < lines.size() ? "\n" : "");
    return out;
}

namespace detail {

/// Related-code blocks kept apart so the budget trim can drop whole methods.
struct RelatedBlocks {
    std::string flaky;
    std::vector<std::string> polluters;
    std::vector<std::string> fields;   // single declarations, grouped under one header
    std::vector<std::string> helpers;  // one block per helper method

    std::string render() const {
        std::vector<std::string> blocks;
        blocks.push_back(flaky);
        for (const auto& p : polluters) blocks.push_back(p);
        if (!fields.empty()) {
            std::string b = "// Shared state";
            for (const auto& f : fields) b += "\n" + f;
            blocks.push_back(b);
        }
        for (const auto& h : helpers) blocks.push_back(h);
        std::string out;
        for (std::size_t i = 0; i < blocks.size(); ++i)
            out += blocks[i] + (i + 1 < blocks.size() ? "\n\n" : "");
        return out;
    }
};

inline RelatedBlocks related_blocks(const FlakyTestCase& tc, const ContextBundle& context) {
    RelatedBlocks blocks;
    blocks.flaky = "// Flaky test: " + tc.test.fqn_method() + "\n" +
                   context.related_code.flaky_source;
    for (const auto& [name, source] : context.related_code.polluters)
        blocks.polluters.push_back("// Polluter: " + name + "\n" + source);
    blocks.fields = context.related_code.fields;
    for (const auto& [name, source] : context.related_code.helpers)
        blocks.helpers.push_back("// Helper: " + name + "\n" + source);
    return blocks;
}

}  // namespace detail

/// Fills the category template with the case and the inspector's context.
/// When the rendering exceeds char_budget, whole related-code blocks are
/// dropped, least-relevant first (helpers from the back, then fields); the
/// flaky test and its polluters are never dropped. Still over budget after
/// that → PROMPT_OVERFLOW.
inline Prompt build_prompt(const FlakyTestCase& tc, const ContextBundle& context,
                           const TemplateSet& templates = TemplateSet::builtin(),
                           int iteration = 1, int char_budget = 24000) {
    tc.validate();
    context.validate();
    const PromptTemplate& tmpl = templates.for_category(tc.category);

    std::map<std::string, std::string> vars{{"test", tc.test.fqn_method()}};
    if (tc.category == FlakinessCategory::OdVictim) {
        std::string joined;
        for (std::size_t i = 0; i < tc.polluters.size(); ++i)
            joined += tc.polluters[i].fqn_method() + (i + 1 < tc.polluters.size() ? ", " : "");
        vars["polluters"] = joined;
    }

    Prompt prompt;
    prompt.instruction = detail::substitute(tmpl.instruction, vars);
    prompt.problem_definition = detail::substitute(tmpl.problem_definition, vars);
    prompt.failure_location = render_failure_location(context, tc.category);
    prompt.rules = tmpl.rules;
    prompt.category = tc.category;
    prompt.iteration = iteration;
    prompt.char_budget = char_budget;

    auto blocks = detail::related_blocks(tc, context);
    prompt.related_code = blocks.render();
    while (prompt.render().size() > static_cast<std::size_t>(char_budget)) {
        if (!blocks.helpers.empty()) {
            blocks.helpers.pop_back();
        } else if (!blocks.fields.empty()) {
            blocks.fields.pop_back();
        } else {
            fail(ErrorCode::PromptOverflow,
                 "prompt for " + tc.test.fqn_method() + " exceeds the " +
                     std::to_string(char_budget) + "-character budget after trimming");
        }
        prompt.related_code = blocks.render();
    }

    prompt.validate();
    return prompt;
}

/// What the orchestrator knows after a failing iteration, shaped for prompt
/// augmentation. `current_code` is the latest patched code as applied to the
/// working copy; exactly one of diagnostics / fresh_context matters,
/// matching the iteration's outcome.
struct FeedbackContext {
    std::string current_code;
    std::vector<CompilationDiagnostic> diagnostics;
    std::optional<ContextBundle> fresh_context;
};

/// One-line feedback rendering of a compiler complaint.
inline std::string render_diagnostic_line(const CompilationDiagnostic& d) {
    std::string detail = d.symbol.empty() ? d.raw_message : d.symbol;
    return "Compiler error: " + d.file + ":" + std::to_string(d.line) + " " +
           std::string(to_string(d.kind)) + " " + detail;
}

/// Evolves the previous prompt for the next iteration: related code becomes
/// the model's own latest attempt, failure location becomes either at most
/// `max_diagnostics` compiler one-liners or a fresh CI rendering, the
/// iteration counter moves up, everything else stays put. Augmented prompts
/// have no whole blocks left to drop, so a budget excess is an immediate
/// PROMPT_OVERFLOW.
inline Prompt augment_with_feedback(const Prompt& previous, const IterationRecord& record,
                                    const FeedbackContext& ctx, int max_diagnostics = 5) {
    if (record.outcome == OutcomeKind::TestPass)
        fail(ErrorCode::BadInput, "augment_with_feedback on a passing iteration");
    if (max_diagnostics < 1) fail(ErrorCode::BadInput, "max_diagnostics must be positive");
    if (ctx.current_code.empty())
        fail(ErrorCode::BadInput, "feedback requires the current patched code");

    Prompt next = previous;
    next.iteration = previous.iteration + 1;
    next.related_code = ctx.current_code;

    if (record.outcome == OutcomeKind::CompilationError) {
        if (ctx.diagnostics.empty())
            fail(ErrorCode::BadInput, "COMPILATION_ERROR feedback without diagnostics");
        std::string out;
        std::size_t count =
            std::min<std::size_t>(ctx.diagnostics.size(), static_cast<std::size_t>(max_diagnostics));
        for (std::size_t i = 0; i < count; ++i)
            out += render_diagnostic_line(ctx.diagnostics[i]) + (i + 1 < count ? "\n" : "");
        next.failure_location = out;
    } else {
        if (!ctx.fresh_context)
            fail(ErrorCode::BadInput, "TEST_FAILURE feedback without a fresh context bundle");
        next.failure_location = render_failure_location(*ctx.fresh_context, previous.category);
    }

    if (next.render().size() > static_cast<std::size_t>(next.char_budget))
        fail(ErrorCode::PromptOverflow,
             "augmented prompt exceeds the " + std::to_string(next.char_budget) +
                 "-character budget");
    next.validate();
    return next;
}

}  // namespace flakyfix
