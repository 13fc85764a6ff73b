#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "flakyfix/errors.hpp"
#include "flakyfix/java/analysis.hpp"
#include "flakyfix/java/parser.hpp"
#include "flakyfix/model.hpp"
#include "flakyfix/runner/backend.hpp"

namespace flakyfix {

// Order labels used as per_order_results keys. Stable strings: they end up in
// session reports.
inline constexpr std::string_view kOrderPollutersFirst = "polluters-then-victim";
inline constexpr std::string_view kOrderVictimFirst = "victim-then-polluters";
inline constexpr std::string_view kOrderIsolated = "isolated";

enum class SuspicionKind { AssertionDeleted, TryCatchWrapped, TriviallyTrueAssertion };

inline std::string_view to_string(SuspicionKind k) {
    switch (k) {
        case SuspicionKind::AssertionDeleted: return "ASSERTION_DELETED";
        case SuspicionKind::TryCatchWrapped: return "TRY_CATCH_WRAPPED";
        case SuspicionKind::TriviallyTrueAssertion: return "TRIVIALLY_TRUE_ASSERTION";
    }
    return "?";
}

inline SuspicionKind suspicion_kind_from_string(std::string_view s) {
    if (s == "ASSERTION_DELETED") return SuspicionKind::AssertionDeleted;
    if (s == "TRY_CATCH_WRAPPED") return SuspicionKind::TryCatchWrapped;
    if (s == "TRIVIALLY_TRUE_ASSERTION") return SuspicionKind::TriviallyTrueAssertion;
    fail(ErrorCode::BadInput, "unknown suspicion kind '" + std::string(s) + "'");
}

/// Evidence is always an excerpt of the patched method text: the flag points
/// at code the reviewer will actually see in the patch.
struct SuspicionFlag {
    SuspicionKind kind = SuspicionKind::AssertionDeleted;
    std::string evidence;

    bool operator==(const SuspicionFlag&) const = default;
};

/// Another test in the suite touches state the OD pair was assumed to own.
struct SharedStateWarning {
    std::string test;   // class#method of the outside test
    std::string field;  // the shared field it references

    bool operator==(const SharedStateWarning&) const = default;
    auto operator<=>(const SharedStateWarning&) const = default;
};

/// Verdict on one stitched patch. TEST_PASS is the only accepting kind;
/// TEST_FAILURE cycles the patch back through the feedback loop. The
/// validator is never invoked on a patch that failed to compile, so
/// COMPILATION_ERROR never appears here.
struct ValidationOutcome {
    FlakinessCategory category = FlakinessCategory::Id;
    OutcomeKind kind = OutcomeKind::TestFailure;
    std::map<std::string, RunResult> per_order_results;  // victim's result per order label
    std::map<std::string, RunResult> polluter_results;   // polluters-then-victim order only
    std::vector<RunResult> shaken_results;               // one entry per shaken round (ID)
    std::uint64_t shake_seed = 0;                        // recorded for reproducibility
    std::vector<TestId> co_victims_fixed;
    std::vector<SuspicionFlag> warnings;

    bool operator==(const ValidationOutcome&) const = default;

    /// The failure that feeds the next ContextBundle: the victim's failing
    /// order first, then a broken polluter, then the first failing shaken
    /// round. Empty on TEST_PASS.
    std::optional<RunResult> first_failure() const {
        for (const auto& [label, result] : per_order_results)
            if (result.kind != OutcomeKind::TestPass) return result;
        for (const auto& [who, result] : polluter_results)
            if (result.kind != OutcomeKind::TestPass) return result;
        for (const auto& r : shaken_results)
            if (r.kind != OutcomeKind::TestPass) return r;
        return std::nullopt;
    }

    void validate() const {
        if (kind == OutcomeKind::CompilationError)
            fail(ErrorCode::BadInput, "validation outcome cannot be COMPILATION_ERROR");
        auto all_pass = [](const std::map<std::string, RunResult>& results) {
            for (const auto& [label, r] : results)
                if (r.kind != OutcomeKind::TestPass) return false;
            return true;
        };
        switch (category) {
            case FlakinessCategory::OdVictim: {
                if (!per_order_results.count(std::string(kOrderPollutersFirst)) ||
                    !per_order_results.count(std::string(kOrderVictimFirst)))
                    fail(ErrorCode::BadInput, "OD_VICTIM outcome must record both orders");
                bool accepted = all_pass(per_order_results) && all_pass(polluter_results);
                if ((kind == OutcomeKind::TestPass) != accepted)
                    fail(ErrorCode::BadInput,
                         "OD_VICTIM kind disagrees with the recorded order results");
                break;
            }
            case FlakinessCategory::OdBrittle: {
                if (per_order_results.size() != 1 ||
                    !per_order_results.count(std::string(kOrderIsolated)))
                    fail(ErrorCode::BadInput, "OD_BRITTLE outcome must record the isolated run");
                if ((kind == OutcomeKind::TestPass) != all_pass(per_order_results))
                    fail(ErrorCode::BadInput,
                         "OD_BRITTLE kind disagrees with the isolated result");
                break;
            }
            case FlakinessCategory::Id: {
                if (shaken_results.empty())
                    fail(ErrorCode::BadInput, "ID outcome without shaken rounds");
                bool any_fail = false;
                for (const auto& r : shaken_results)
                    any_fail |= r.kind != OutcomeKind::TestPass;
                if ((kind == OutcomeKind::TestPass) != !any_fail)
                    fail(ErrorCode::BadInput, "ID kind disagrees with the shaken rounds");
                break;
            }
        }
        if (kind != OutcomeKind::TestPass && !co_victims_fixed.empty())
            fail(ErrorCode::BadInput, "co-victims recorded on a rejected patch");
    }
};

/// Decides whether the patched working copy removes the flakiness.
///
/// OD_VICTIM: the victim runs in [polluters..., victim] and
/// [victim, polluters...]; accepted iff it passes in both. The polluters'
/// own results in the first order are recorded and must also pass: a patch
/// that repairs the victim by breaking its polluter is no repair.
/// OD_BRITTLE: accepted iff the test passes in isolation.
/// ID: `rounds` shaken rounds under `seed`; accepted iff none fails.
///
/// Requires a copy that already compiles; infra failures propagate to the
/// caller, which owns the retry policy.
inline ValidationOutcome validate_patch(const FlakyTestCase& tc, runner::Runner& runner,
                                        runner::WorkingCopy& copy, int rounds = 5,
                                        std::uint64_t seed = 0) {
    tc.validate();
    ValidationOutcome outcome;
    outcome.category = tc.category;

    switch (tc.category) {
        case FlakinessCategory::OdVictim: {
            std::vector<TestId> polluters_first = tc.polluters;
            polluters_first.push_back(tc.test);
            std::vector<TestId> victim_first{tc.test};
            victim_first.insert(victim_first.end(), tc.polluters.begin(), tc.polluters.end());

            auto first = runner.run_ordered(copy, polluters_first);
            auto second = runner.run_ordered(copy, victim_first);
            outcome.per_order_results.emplace(std::string(kOrderPollutersFirst),
                                              runner::result_for(first, tc.test));
            outcome.per_order_results.emplace(std::string(kOrderVictimFirst),
                                              runner::result_for(second, tc.test));
            for (const auto& p : tc.polluters)
                outcome.polluter_results.emplace(p.fqn_method(), runner::result_for(first, p));
            break;
        }
        case FlakinessCategory::OdBrittle:
            outcome.per_order_results.emplace(std::string(kOrderIsolated),
                                              runner.run_isolated(copy, tc.test));
            break;
        case FlakinessCategory::Id:
            if (rounds < 1) fail(ErrorCode::BadInput, "ID validation needs at least one round");
            outcome.shaken_results = runner.run_shaken(copy, tc.test, rounds, seed);
            outcome.shake_seed = seed;
            break;
    }

    bool accepted = true;
    for (const auto& [label, r] : outcome.per_order_results)
        accepted &= r.kind == OutcomeKind::TestPass;
    for (const auto& [who, r] : outcome.polluter_results)
        accepted &= r.kind == OutcomeKind::TestPass;
    for (const auto& r : outcome.shaken_results)
        accepted &= r.kind == OutcomeKind::TestPass;
    outcome.kind = accepted ? OutcomeKind::TestPass : OutcomeKind::TestFailure;

    outcome.validate();
    return outcome;
}

/// A polluter may pollute several victims; once the main validation accepts
/// a patch, each co-victim W gets its own [polluters..., W] run, and the ones
/// that now pass are returned so the orchestrator can close their cases
/// without separate repairs. Each run is one ordered batch in a fresh
/// runtime, sequentially, so one co-victim cannot pollute the next.
inline std::vector<TestId> covictim_sweep(const FlakyTestCase& tc, runner::Runner& runner,
                                          runner::WorkingCopy& copy) {
    tc.validate();
    std::vector<TestId> fixed;
    for (const auto& w : tc.co_victims) {
        std::vector<TestId> sequence = tc.polluters;
        sequence.push_back(w);
        auto results = runner.run_ordered(copy, sequence);
        if (runner::result_for(results, w).kind == OutcomeKind::TestPass) fixed.push_back(w);
    }
    return fixed;
}

namespace detail {

/// Identifiers actually used by a method, statement by statement.
inline std::set<std::string> identifiers_used(const java::ClassModel& model,
                                              const java::MethodModel& method) {
    std::set<std::string> used;
    for (const auto& st : java::split_statements(model, method)) {
        auto facts = java::analyze_statement(model, st);
        used.insert(facts.uses.begin(), facts.uses.end());
    }
    return used;
}

}  // namespace detail

/// Field names both the victim and the polluter reference — the state the OD
/// pair communicates through, and the input overfit_guard scans the rest of
/// the suite for. Fields of either class count.
inline std::set<std::string> shared_state_fields(const java::ClassModel& victim_class,
                                                 const std::string& victim_method,
                                                 const java::ClassModel& polluter_class,
                                                 const std::string& polluter_method) {
    const java::MethodModel* victim = victim_class.find_method(victim_method);
    if (!victim)
        fail(ErrorCode::TargetNotFound, "victim method " + victim_method + " not found");
    const java::MethodModel* polluter = polluter_class.find_method(polluter_method);
    if (!polluter)
        fail(ErrorCode::TargetNotFound, "polluter method " + polluter_method + " not found");

    std::set<std::string> field_names;
    for (const auto& f : victim_class.fields) field_names.insert(f.name);
    for (const auto& f : polluter_class.fields) field_names.insert(f.name);

    std::set<std::string> victim_uses = detail::identifiers_used(victim_class, *victim);
    std::set<std::string> polluter_uses = detail::identifiers_used(polluter_class, *polluter);

    std::set<std::string> shared;
    for (const auto& name : field_names)
        if (victim_uses.count(name) && polluter_uses.count(name)) shared.insert(name);
    return shared;
}

/// Overfitting check: the shared state between the OD tests must be unique
/// to them. Scans every other test method in the suite for references to any
/// shared field; each hit becomes a warning naming (test, field). Warnings
/// annotate the report, they never block acceptance.
///
/// `suite_models` maps class FQN to parsed model; the tests named by `tc`
/// (victim, polluters, co-victims) are the owners of the state and exempt.
inline std::vector<SharedStateWarning> overfit_guard(
    const FlakyTestCase& tc, const std::map<std::string, const java::ClassModel*>& suite_models,
    const std::set<std::string>& shared_fields) {
    if (shared_fields.empty()) return {};

    std::set<std::string> exempt{tc.test.fqn_method()};
    for (const auto& p : tc.polluters) exempt.insert(p.fqn_method());
    for (const auto& w : tc.co_victims) exempt.insert(w.fqn_method());

    std::vector<SharedStateWarning> warnings;
    for (const auto& [fqn, model] : suite_models) {
        if (!model) continue;
        for (const auto& method : model->methods) {
            if (!method.is_test()) continue;
            if (exempt.count(fqn + "#" + method.name)) continue;
            std::set<std::string> used = detail::identifiers_used(*model, method);
            for (const auto& field : shared_fields)
                if (used.count(field))
                    warnings.push_back({fqn + "#" + method.name, field});
        }
    }
    std::sort(warnings.begin(), warnings.end());
    return warnings;
}

namespace detail {

inline bool is_assertion_name(std::string_view name) {
    return name.rfind("assert", 0) == 0 || name == "fail";
}

/// One assertion call site inside a method.
struct AssertionCall {
    std::string statement;                       // joined statement text
    std::set<std::string> subjects;              // identifiers inside the arguments
    std::vector<std::vector<std::string>> args;  // top-level argument token texts
    std::string name;                            // the assert* identifier
    std::size_t begin = 0;                       // byte offset of the name token
};

inline java::ClassModel wrap_method(const std::string& method_text) {
    return java::parse_test_class("class __Probe {\n" + method_text + "\n}\n");
}

inline std::vector<AssertionCall> assertion_calls(const java::ClassModel& model,
                                                  const java::MethodModel& method) {
    std::vector<AssertionCall> calls;
    for (const auto& st : java::split_statements(model, method)) {
        const auto& toks = st.tokens;
        for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
            if (toks[i].kind != java::TokenKind::Identifier) continue;
            std::string_view name = toks[i].text(model.source_text);
            if (!is_assertion_name(name)) continue;
            std::string_view next = toks[i + 1].text(model.source_text);
            if (!(toks[i + 1].kind == java::TokenKind::Punct && next == "(")) continue;

            AssertionCall call;
            call.name = std::string(name);
            call.begin = toks[i].begin;
            call.statement = java::joined_text(model, st);
            call.args.emplace_back();
            int depth = 0;
            for (std::size_t j = i + 1; j < toks.size(); ++j) {
                std::string_view t = toks[j].text(model.source_text);
                if (toks[j].kind == java::TokenKind::Punct) {
                    if (t == "(") {
                        if (depth++ == 0) continue;  // the call's own paren
                    } else if (t == ")") {
                        if (--depth == 0) break;
                    } else if (t == "," && depth == 1) {
                        call.args.emplace_back();
                        continue;
                    }
                }
                call.args.back().emplace_back(t);
                if (toks[j].kind == java::TokenKind::Identifier &&
                    !java::detail::java_keywords().count(std::string(t)) && t != "true" &&
                    t != "false" && t != "this")
                    call.subjects.insert(std::string(t));
            }
            if (call.args.size() == 1 && call.args.front().empty()) call.args.clear();
            calls.push_back(std::move(call));
        }
    }
    return calls;
}

inline bool literal_argument(const std::vector<std::string>& arg) {
    if (arg.empty()) return false;
    if (arg.front() == "new") return true;
    if (arg.size() != 1) return false;
    char c = arg.front().front();
    return c == '"' || c == '\'' || (c >= '0' && c <= '9');
}

/// Syntactically constant-true assertions: assertTrue(true), equal argument
/// token sequences under an equality assert, assertNotNull of a literal.
inline bool constant_true(const AssertionCall& call) {
    auto has_arg = [&](std::string_view text) {
        for (const auto& a : call.args)
            if (a.size() == 1 && a.front() == text) return true;
        return false;
    };
    if (call.name == "assertTrue") return has_arg("true");
    if (call.name == "assertFalse") return has_arg("false");
    if (call.name == "assertEquals" || call.name == "assertSame" ||
        call.name == "assertArrayEquals") {
        for (std::size_t i = 0; i < call.args.size(); ++i)
            for (std::size_t j = i + 1; j < call.args.size(); ++j)
                if (!call.args[i].empty() && call.args[i] == call.args[j]) return true;
        return false;
    }
    if (call.name == "assertNotNull") {
        for (const auto& a : call.args)
            if (literal_argument(a)) return true;
    }
    return false;
}

/// Byte span of a try body whose catch would eat an assertion failure:
/// catch type covers AssertionError and the handler neither rethrows nor
/// fails the test itself.
struct SwallowingTry {
    std::size_t body_begin = 0;
    std::size_t body_end = 0;
};

inline std::vector<SwallowingTry> swallowing_try_regions(const java::ClassModel& model,
                                                         const java::MethodModel& method) {
    std::vector<java::Token> all = java::lex(model.source_text);
    std::vector<java::Token> toks;
    for (const auto& t : all)
        if (t.begin >= method.span.begin && t.end <= method.span.end) toks.push_back(t);

    auto text = [&](std::size_t i) { return toks[i].text(model.source_text); };
    auto match_braces = [&](std::size_t open) {  // open indexes a '{'; returns index of its '}'
        int depth = 0;
        for (std::size_t i = open; i < toks.size(); ++i) {
            if (toks[i].kind != java::TokenKind::Punct) continue;
            if (text(i) == "{") ++depth;
            if (text(i) == "}" && --depth == 0) return i;
        }
        return toks.size();
    };

    std::vector<SwallowingTry> regions;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (toks[i].kind != java::TokenKind::Identifier || text(i) != "try") continue;
        std::size_t open = i + 1;
        if (open < toks.size() && text(open) == "(") {  // try-with-resources
            int depth = 0;
            for (; open < toks.size(); ++open) {
                if (text(open) == "(") ++depth;
                if (text(open) == ")" && --depth == 0) break;
            }
            ++open;
        }
        if (open >= toks.size() || text(open) != "{") continue;
        std::size_t close = match_braces(open);
        if (close >= toks.size()) continue;

        bool swallows = false;
        std::size_t cursor = close + 1;
        while (cursor < toks.size() && text(cursor) == "catch") {
            std::set<std::string> types;
            std::string last_identifier;
            std::size_t j = cursor + 1;
            for (; j < toks.size() && text(j) != ")"; ++j)
                if (toks[j].kind == java::TokenKind::Identifier) {
                    if (!last_identifier.empty()) types.insert(last_identifier);
                    last_identifier = std::string(text(j));
                }
            // the final identifier is the parameter name, everything before
            // it that we collected is (part of) the caught types
            std::size_t handler_open = j + 1;
            if (handler_open >= toks.size() || text(handler_open) != "{") break;
            std::size_t handler_close = match_braces(handler_open);

            bool covers_assertion = types.count("AssertionError") || types.count("Error") ||
                                    types.count("Throwable");
            bool rescues = false;
            for (std::size_t k = handler_open + 1; k < handler_close; ++k) {
                std::string_view t = text(k);
                if (t == "throw" || is_assertion_name(t)) rescues = true;
            }
            if (covers_assertion && !rescues) swallows = true;
            cursor = handler_close + 1;
        }
        if (swallows) regions.push_back({toks[open].begin, toks[close].end});
    }
    return regions;
}

}  // namespace detail

/// Lints a patched method against its original for the classic false-positive
/// shapes: assertions deleted outright, assertions wrapped in a try whose
/// catch eats the failure, and assertions that can no longer fail. Flags
/// annotate the report; they never reject a patch, because legitimate fixes
/// do restructure assertions.
///
/// All three checks compare against the original, so a method diffed against
/// itself never flags: pre-existing oddities are not the patch's doing.
inline std::vector<SuspicionFlag> suspicious_patch_flags(const std::string& original_method,
                                                         const std::string& patched_method) {
    java::ClassModel before = detail::wrap_method(original_method);
    java::ClassModel after = detail::wrap_method(patched_method);
    if (before.methods.empty() || after.methods.empty())
        fail(ErrorCode::Parse, "suspicious_patch_flags needs parseable methods");

    auto calls_of = [](const java::ClassModel& model) {
        std::vector<detail::AssertionCall> calls;
        for (const auto& m : model.methods) {
            auto found = detail::assertion_calls(model, m);
            calls.insert(calls.end(), found.begin(), found.end());
        }
        return calls;
    };
    std::vector<detail::AssertionCall> original_calls = calls_of(before);
    std::vector<detail::AssertionCall> patched_calls = calls_of(after);

    auto statements_of = [](const std::vector<detail::AssertionCall>& calls) {
        std::set<std::string> out;
        for (const auto& c : calls) out.insert(c.statement);
        return out;
    };
    std::set<std::string> original_statements = statements_of(original_calls);
    std::set<std::string> patched_statements = statements_of(patched_calls);

    std::vector<SuspicionFlag> flags;

    // ASSERTION_DELETED: fewer assertion calls, and at least one vanished
    // assertion whose subjects no surviving assertion mentions.
    if (patched_calls.size() < original_calls.size()) {
        for (const auto& gone : original_calls) {
            if (patched_statements.count(gone.statement)) continue;
            bool replaced = false;
            for (const auto& kept : patched_calls)
                for (const auto& subject : gone.subjects)
                    replaced |= kept.subjects.count(subject) > 0;
            if (!replaced) {
                auto eol = patched_method.find('\n');
                std::string signature = patched_method.substr(
                    0, eol == std::string::npos ? patched_method.size() : eol);
                flags.push_back({SuspicionKind::AssertionDeleted, signature});
                break;  // one flag per method, not per assertion
            }
        }
    }

    // TRY_CATCH_WRAPPED: an assertion the original ran bare now sits inside
    // a try whose catch swallows the failure.
    auto inside_swallowing_try = [](const java::ClassModel& model,
                                    const detail::AssertionCall& call) {
        for (const auto& m : model.methods)
            for (const auto& region : detail::swallowing_try_regions(model, m))
                if (call.begin > region.body_begin && call.begin < region.body_end) return true;
        return false;
    };
    for (const auto& call : patched_calls) {
        if (!inside_swallowing_try(after, call)) continue;
        bool was_bare = false;
        for (const auto& orig : original_calls)
            if (orig.statement == call.statement && !inside_swallowing_try(before, orig))
                was_bare = true;
        if (was_bare) flags.push_back({SuspicionKind::TryCatchWrapped, call.statement});
    }

    // TRIVIALLY_TRUE_ASSERTION: a new or rewritten assertion that cannot fail.
    for (const auto& call : patched_calls) {
        if (!detail::constant_true(call)) continue;
        if (original_statements.count(call.statement)) continue;  // pre-existing
        flags.push_back({SuspicionKind::TriviallyTrueAssertion, call.statement});
    }

    return flags;
}

}  // namespace flakyfix
