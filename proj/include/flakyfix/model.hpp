#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flakyfix/errors.hpp"

namespace flakyfix {

/// Identity of one test method inside a Maven-style multi-module project.
struct TestId {
    std::string class_fqn;    // dot-separated, e.g. org.example.FooTest
    std::string method;       // bare method name
    std::string module_path;  // module dir relative to project root; "." for single-module

    bool operator==(const TestId&) const = default;
    auto operator<=>(const TestId&) const = default;

    /// Canonical "class#method" form used in CSV rows, script tables, and logs.
    std::string fqn_method() const { return class_fqn + "#" + method; }
};

enum class FlakinessCategory { Id, OdVictim, OdBrittle };

inline std::string_view to_string(FlakinessCategory c) {
    switch (c) {
        case FlakinessCategory::Id: return "ID";
        case FlakinessCategory::OdVictim: return "OD_VICTIM";
        case FlakinessCategory::OdBrittle: return "OD_BRITTLE";
    }
    return "?";
}

inline FlakinessCategory category_from_string(std::string_view s) {
    if (s == "ID") return FlakinessCategory::Id;
    if (s == "OD_VICTIM") return FlakinessCategory::OdVictim;
    if (s == "OD_BRITTLE") return FlakinessCategory::OdBrittle;
    fail(ErrorCode::BadInput, "unknown flakiness category '" + std::string(s) + "'");
}

/// One repair target as handed to the pipeline. Detection is out of scope:
/// category and polluters arrive as input.
struct FlakyTestCase {
    TestId test;
    FlakinessCategory category = FlakinessCategory::Id;
    std::vector<TestId> polluters;   // ordered; non-empty iff OD_VICTIM
    std::vector<TestId> co_victims;  // other victims sharing a polluter

    bool operator==(const FlakyTestCase&) const = default;

    void validate() const {
        if (test.class_fqn.empty() || test.method.empty())
            fail(ErrorCode::BadInput, "test id incomplete for '" + test.fqn_method() + "'");
        if (category == FlakinessCategory::OdVictim && polluters.empty())
            fail(ErrorCode::BadInput, "OD_VICTIM case '" + test.fqn_method() + "' has no polluters");
        if (category != FlakinessCategory::OdVictim && !polluters.empty())
            fail(ErrorCode::BadInput, "non-victim case '" + test.fqn_method() + "' lists polluters");
        auto contains = [&](const std::vector<TestId>& v) {
            return std::find(v.begin(), v.end(), test) != v.end();
        };
        if (contains(polluters))
            fail(ErrorCode::BadInput, "'" + test.fqn_method() + "' listed as its own polluter");
        if (contains(co_victims))
            fail(ErrorCode::BadInput, "'" + test.fqn_method() + "' listed as its own co-victim");
    }
};

enum class OutcomeKind { TestPass, TestFailure, CompilationError };

inline std::string_view to_string(OutcomeKind k) {
    switch (k) {
        case OutcomeKind::TestPass: return "TEST_PASS";
        case OutcomeKind::TestFailure: return "TEST_FAILURE";
        case OutcomeKind::CompilationError: return "COMPILATION_ERROR";
    }
    return "?";
}

inline OutcomeKind outcome_from_string(std::string_view s) {
    if (s == "TEST_PASS") return OutcomeKind::TestPass;
    if (s == "TEST_FAILURE") return OutcomeKind::TestFailure;
    if (s == "COMPILATION_ERROR") return OutcomeKind::CompilationError;
    fail(ErrorCode::Decode, "unknown outcome kind '" + std::string(s) + "'");
}

enum class DiagnosticKind { MissingSymbol, PackageNotFound, AmbiguousReference, Other };

inline std::string_view to_string(DiagnosticKind k) {
    switch (k) {
        case DiagnosticKind::MissingSymbol: return "MISSING_SYMBOL";
        case DiagnosticKind::PackageNotFound: return "PACKAGE_NOT_FOUND";
        case DiagnosticKind::AmbiguousReference: return "AMBIGUOUS_REFERENCE";
        case DiagnosticKind::Other: return "OTHER";
    }
    return "?";
}

inline DiagnosticKind diagnostic_kind_from_string(std::string_view s) {
    if (s == "MISSING_SYMBOL") return DiagnosticKind::MissingSymbol;
    if (s == "PACKAGE_NOT_FOUND") return DiagnosticKind::PackageNotFound;
    if (s == "AMBIGUOUS_REFERENCE") return DiagnosticKind::AmbiguousReference;
    if (s == "OTHER") return DiagnosticKind::Other;
    fail(ErrorCode::Decode, "unknown diagnostic kind '" + std::string(s) + "'");
}

/// One parsed compiler complaint. `file` is relative to the project root.
/// `symbol` is empty unless the kind implies one (MISSING_SYMBOL always,
/// PACKAGE_NOT_FOUND carries the package, AMBIGUOUS_REFERENCE the reference).
struct CompilationDiagnostic {
    std::string file;
    int line = 0;
    DiagnosticKind kind = DiagnosticKind::Other;
    std::string symbol;
    std::string raw_message;

    bool operator==(const CompilationDiagnostic&) const = default;

    void validate() const {
        if (raw_message.empty()) fail(ErrorCode::BadInput, "diagnostic with empty raw_message");
        if (kind == DiagnosticKind::MissingSymbol && symbol.empty())
            fail(ErrorCode::BadInput, "MISSING_SYMBOL diagnostic without symbol");
    }
};

struct StackFrame {
    std::string class_fqn;
    std::string method;
    std::string file;
    int line = 0;

    bool operator==(const StackFrame&) const = default;
};

/// Classified outcome of one compile or test execution.
struct RunResult {
    OutcomeKind kind = OutcomeKind::TestPass;
    std::vector<CompilationDiagnostic> diagnostics;
    std::optional<std::string> failure_message;
    std::vector<StackFrame> stack_frames;  // innermost first
    double duration_s = 0.0;

    bool operator==(const RunResult&) const = default;

    void validate() const {
        bool compile_error = kind == OutcomeKind::CompilationError;
        if (compile_error != !diagnostics.empty())
            fail(ErrorCode::BadInput, "COMPILATION_ERROR iff diagnostics non-empty violated");
        if (kind == OutcomeKind::TestFailure && !failure_message)
            fail(ErrorCode::BadInput, "TEST_FAILURE without failure_message");
        if (duration_s < 0) fail(ErrorCode::BadInput, "negative duration");
        for (const auto& d : diagnostics) d.validate();
    }
};

/// The deciding rule is the RunResult's own kind: the runner has already
/// folded diagnostics/failure text into it, and RunResult::validate() pins
/// the kind to that evidence.
inline OutcomeKind classify_outcome(const RunResult& raw) { return raw.kind; }

enum class RepairStatus {
    Fixed,
    ExhaustedIterations,
    ExhaustedIdenticalErrors,
    NotReproduced,
    ProviderError,
};

inline std::string_view to_string(RepairStatus s) {
    switch (s) {
        case RepairStatus::Fixed: return "FIXED";
        case RepairStatus::ExhaustedIterations: return "EXHAUSTED_ITERATIONS";
        case RepairStatus::ExhaustedIdenticalErrors: return "EXHAUSTED_IDENTICAL_ERRORS";
        case RepairStatus::NotReproduced: return "NOT_REPRODUCED";
        case RepairStatus::ProviderError: return "PROVIDER_ERROR";
    }
    return "?";
}

inline RepairStatus repair_status_from_string(std::string_view s) {
    if (s == "FIXED") return RepairStatus::Fixed;
    if (s == "EXHAUSTED_ITERATIONS") return RepairStatus::ExhaustedIterations;
    if (s == "EXHAUSTED_IDENTICAL_ERRORS") return RepairStatus::ExhaustedIdenticalErrors;
    if (s == "NOT_REPRODUCED") return RepairStatus::NotReproduced;
    if (s == "PROVIDER_ERROR") return RepairStatus::ProviderError;
    fail(ErrorCode::Decode, "unknown repair status '" + std::string(s) + "'");
}

/// Kinds of repair the stitcher can perform on an uncompilable patch.
enum class StitchKind { RevertDeclaration, AddImport, AddBuildDep, ExcludeImport };

inline std::string_view to_string(StitchKind k) {
    switch (k) {
        case StitchKind::RevertDeclaration: return "REVERT_DECLARATION";
        case StitchKind::AddImport: return "ADD_IMPORT";
        case StitchKind::AddBuildDep: return "ADD_BUILD_DEP";
        case StitchKind::ExcludeImport: return "EXCLUDE_IMPORT";
    }
    return "?";
}

inline StitchKind stitch_kind_from_string(std::string_view s) {
    if (s == "REVERT_DECLARATION") return StitchKind::RevertDeclaration;
    if (s == "ADD_IMPORT") return StitchKind::AddImport;
    if (s == "ADD_BUILD_DEP") return StitchKind::AddBuildDep;
    if (s == "EXCLUDE_IMPORT") return StitchKind::ExcludeImport;
    fail(ErrorCode::Decode, "unknown stitch kind '" + std::string(s) + "'");
}

/// One applied stitch, with the diagnostic that motivated it when known.
/// `detail` is kind-specific: method name, qualified import, g:a:v coordinate.
struct StitchAction {
    StitchKind kind = StitchKind::AddImport;
    std::string detail;
    std::optional<CompilationDiagnostic> resolved_diagnostic;

    bool operator==(const StitchAction&) const = default;
};

/// One trip through the generate→apply→compile→validate loop.
struct IterationRecord {
    int index = 0;  // 1-based
    std::string prompt_text;
    std::string response_text;
    std::vector<StitchAction> stitch_actions;
    OutcomeKind outcome = OutcomeKind::TestFailure;
    std::optional<std::string> diagnostic_key;  // present iff outcome is COMPILATION_ERROR

    bool operator==(const IterationRecord&) const = default;
};

/// Full record of one repair attempt for one flaky test.
struct RepairSession {
    FlakyTestCase test_case;
    std::vector<IterationRecord> iterations;
    RepairStatus status = RepairStatus::NotReproduced;
    std::optional<std::string> final_patch;  // unified diff against the original working copy
    std::string note;                        // free-form, e.g. co-victim sweep provenance
    double wall_time_s = 0.0;
    std::int64_t llm_tokens_in = 0;
    std::int64_t llm_tokens_out = 0;

    bool operator==(const RepairSession&) const = default;

    void validate() const {
        test_case.validate();
        if (iterations.size() > 5)
            fail(ErrorCode::BadInput, "session records " + std::to_string(iterations.size()) +
                                          " iterations; limit is 5");
        for (std::size_t i = 0; i < iterations.size(); ++i) {
            const auto& it = iterations[i];
            if (it.index != static_cast<int>(i) + 1)
                fail(ErrorCode::BadInput, "iteration indices not contiguous from 1");
            if ((it.outcome == OutcomeKind::CompilationError) != it.diagnostic_key.has_value())
                fail(ErrorCode::BadInput,
                     "diagnostic_key present iff COMPILATION_ERROR violated at iteration " +
                         std::to_string(it.index));
        }
        if (status == RepairStatus::Fixed) {
            if (!final_patch) fail(ErrorCode::BadInput, "FIXED session without final_patch");
            bool swept = iterations.empty() && !note.empty();
            if (!swept && (iterations.empty() ||
                           iterations.back().outcome != OutcomeKind::TestPass))
                fail(ErrorCode::BadInput, "FIXED session whose last iteration did not pass");
        }
        if (llm_tokens_in < 0 || llm_tokens_out < 0 || wall_time_s < 0)
            fail(ErrorCode::BadInput, "negative accounting value");
    }
};

/// Normalized fingerprint of a set of compilation diagnostics. Two compile
/// failures are "the identical error" iff their keys are equal. Line numbers
/// are deliberately excluded: a patch that moves the same mistake is not
/// progress. Entry = file|KIND|symbol (or first token of the message when no
/// symbol is recorded), entries sorted and deduplicated, joined by newlines.
inline std::string diagnostic_key(const std::vector<CompilationDiagnostic>& diagnostics) {
    std::vector<std::string> entries;
    entries.reserve(diagnostics.size());
    for (const auto& d : diagnostics) {
        std::string tail = d.symbol;
        if (tail.empty()) {
            auto begin = d.raw_message.find_first_not_of(" \t\r\n");
            if (begin != std::string::npos) {
                auto end = d.raw_message.find_first_of(" \t\r\n", begin);
                tail = d.raw_message.substr(begin, end == std::string::npos ? end : end - begin);
            }
        }
        entries.push_back(d.file + "|" + std::string(to_string(d.kind)) + "|" + tail);
    }
    std::sort(entries.begin(), entries.end());
    entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
    std::string key;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i) key += '\n';
        key += entries[i];
    }
    return key;
}

}  // namespace flakyfix
