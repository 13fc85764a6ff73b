#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flakyfix/errors.hpp"
#include "flakyfix/java/analysis.hpp"
#include "flakyfix/java/model.hpp"
#include "flakyfix/model.hpp"
#include "flakyfix/runner/backend.hpp"

namespace flakyfix {

/// CI.2: the failed assertion pinned to a statement in parsed source.
struct FailingAssertion {
    std::string class_fqn;  // class whose model the line maps into
    std::string method;     // enclosing method name
    int line = 0;           // first line of the statement (frame line for brace/blank hits)
    std::string statement;  // joined text; empty when the frame line holds no statement

    bool operator==(const FailingAssertion&) const = default;
};

/// The three contextual information items distilled from one reproduction:
/// the raw error text, the located failed assertion, and the potential
/// sources of flakiness. `related_code` rides along so the prompt layer
/// never re-parses sources.
struct ContextBundle {
    std::string error_message;                          // CI.1, verbatim runner text
    std::optional<FailingAssertion> failing_assertion;  // CI.2; absent when degraded
    std::vector<java::SuspectStatement> suspects;       // CI.3 for ID cases
    java::RelatedCode related_code;                     // flaky source; + polluters/fields/helpers for OD_VICTIM
    std::vector<std::string> warnings;

    bool operator==(const ContextBundle&) const = default;

    /// No stack frame mapped into the test's own code; prompting proceeds
    /// with the error message alone.
    bool degraded() const { return !failing_assertion.has_value(); }

    void validate() const {
        if (error_message.empty()) fail(ErrorCode::BadInput, "context bundle without error message");
        if (failing_assertion) {
            if (failing_assertion->class_fqn.empty() || failing_assertion->method.empty())
                fail(ErrorCode::BadInput, "failing assertion without class/method");
            if (failing_assertion->line < 1)
                fail(ErrorCode::BadInput, "failing assertion with non-positive line");
        } else {
            bool flagged = false;
            for (const auto& w : warnings)
                if (w.find("CONTEXT_DEGRADED") != std::string::npos) flagged = true;
            if (!flagged)
                fail(ErrorCode::BadInput, "degraded bundle must carry a CONTEXT_DEGRADED warning");
        }
    }
};

/// Runs the test in the way its category says it should fail. Engaged result
/// iff the flakiness was observed (kind == TEST_FAILURE); disengaged means
/// NOT_REPRODUCED and the session ends with that status. Requires a project
/// that already compiles.
///
/// OD_VICTIM: one ordered run [polluters..., victim], the victim's result.
/// Polluters keep their input-list order. OD_BRITTLE: the test in isolation.
/// ID: `rounds` shaken rounds, stopping at the first failing one.
inline std::optional<RunResult> reproduce(const FlakyTestCase& tc, runner::Runner& runner,
                                          runner::WorkingCopy& copy, int rounds = 5,
                                          std::uint64_t seed = 0) {
    tc.validate();
    if (rounds < 1) fail(ErrorCode::BadInput, "reproduce needs at least one shaken round");

    auto keep_if_failure = [](const RunResult& r) -> std::optional<RunResult> {
        if (r.kind == OutcomeKind::TestFailure) return r;
        return std::nullopt;
    };

    switch (tc.category) {
        case FlakinessCategory::OdVictim: {
            std::vector<TestId> sequence = tc.polluters;
            sequence.push_back(tc.test);
            auto results = runner.run_ordered(copy, sequence);
            return keep_if_failure(runner::result_for(results, tc.test));
        }
        case FlakinessCategory::OdBrittle:
            return keep_if_failure(runner.run_isolated(copy, tc.test));
        case FlakinessCategory::Id: {
            auto results = runner.run_shaken(copy, tc.test, rounds, seed);
            for (const auto& r : results)
                if (r.kind == OutcomeKind::TestFailure) return r;
            return std::nullopt;
        }
    }
    fail(ErrorCode::BadInput, "unknown flakiness category");
}

namespace detail {

inline std::string package_of(const std::string& class_fqn) {
    auto dot = class_fqn.rfind('.');
    return dot == std::string::npos ? std::string() : class_fqn.substr(0, dot);
}

/// Walks frames innermost-first and maps the first one inside `model` to a
/// statement. NO_ENCLOSING_METHOD (frame on a field, brace outside methods,
/// or a synthetic line) just moves the walk to the next frame.
inline std::optional<FailingAssertion> locate_in_frames(const std::vector<StackFrame>& frames,
                                                        const java::ClassModel& model) {
    for (const auto& f : frames) {
        if (f.class_fqn != model.fqn()) continue;
        try {
            auto st = java::locate_statement(model, f.class_fqn, f.line);
            return FailingAssertion{f.class_fqn, st.method->name,
                                    st.line > 0 ? st.line : f.line, st.statement};
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoEnclosingMethod) throw;
        }
    }
    return std::nullopt;
}

}  // namespace detail

/// Distills one reproduced TEST_FAILURE into a ContextBundle. Pure function
/// of (case, result, models, catalog).
///
/// `models` maps class FQN to parsed model and must contain the test class;
/// polluter classes must be present for OD_VICTIM, same-package helper
/// classes may be present to catch assertions raised outside the test class.
///
/// CI.2 selection prefers frames in the test class itself (assertion-library
/// internals sit above it and never match), falling back to same-package
/// classes with models; when nothing maps, the bundle is degraded: CI.2
/// absent plus a CONTEXT_DEGRADED warning.
inline ContextBundle extract_context(const FlakyTestCase& tc, const RunResult& result,
                                     const std::map<std::string, const java::ClassModel*>& models,
                                     const java::UnorderedCatalog& catalog =
                                         java::UnorderedCatalog::builtin()) {
    tc.validate();
    result.validate();
    if (result.kind != OutcomeKind::TestFailure)
        fail(ErrorCode::BadInput, "extract_context requires a TEST_FAILURE result");

    auto model_it = models.find(tc.test.class_fqn);
    if (model_it == models.end() || !model_it->second)
        fail(ErrorCode::TargetNotFound, "no model provided for test class " + tc.test.class_fqn);
    const java::ClassModel& test_model = *model_it->second;

    ContextBundle bundle;
    bundle.error_message = *result.failure_message;

    bundle.failing_assertion = detail::locate_in_frames(result.stack_frames, test_model);
    if (!bundle.failing_assertion) {
        const std::string pkg = detail::package_of(tc.test.class_fqn);
        for (const auto& f : result.stack_frames) {
            if (f.class_fqn == tc.test.class_fqn) continue;
            if (detail::package_of(f.class_fqn) != pkg) continue;
            auto it = models.find(f.class_fqn);
            if (it == models.end() || !it->second) continue;
            bundle.failing_assertion = detail::locate_in_frames({f}, *it->second);
            if (bundle.failing_assertion) break;
        }
    }
    if (!bundle.failing_assertion)
        bundle.warnings.push_back("CONTEXT_DEGRADED: no stack frame maps into " +
                                  tc.test.class_fqn +
                                  " or a same-package helper; prompting proceeds without the "
                                  "failed assertion");

    bundle.related_code = java::extract_related_code(test_model, tc, models);

    if (tc.category == FlakinessCategory::Id) {
        const java::MethodModel* flaky = test_model.find_method(tc.test.method);
        // extract_related_code above already rejected a missing flaky method
        int sink_line = 0;
        if (bundle.failing_assertion && bundle.failing_assertion->class_fqn == test_model.fqn()) {
            sink_line = bundle.failing_assertion->line;
        } else {
            // degraded or helper-class assertion: slice from the method's
            // last statement so every candidate stays in scope
            auto statements = java::split_statements(test_model, *flaky);
            if (!statements.empty()) sink_line = statements.back().line_begin;
        }
        if (sink_line > 0)
            bundle.suspects = java::find_unordered_suspects(test_model, *flaky, sink_line, catalog);
    }

    bundle.validate();
    return bundle;
}

}  // namespace flakyfix
