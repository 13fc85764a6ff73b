#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "flakyfix/model.hpp"
#include "flakyfix/runner/working_copy.hpp"

namespace flakyfix::runner {

enum class BackendKind { Maven, Scripted };

inline std::string_view to_string(BackendKind k) {
    return k == BackendKind::Maven ? "MAVEN" : "SCRIPTED";
}

struct RunnerCapabilities {
    BackendKind kind = BackendKind::Scripted;
    bool supports_ordered_runs = true;
    bool supports_shaker = true;
};

/// Desk-scale defaults; the hour-long builds the evaluation excluded are
/// out of scope, so a stuck toolchain should fail fast.
struct RunnerTimeouts {
    double compile_s = 600.0;
    double test_s = 300.0;  // per test in the sequence
    double shaker_s = 900.0;
};

/// Per-test outcomes in execution order. A vector of pairs rather than a map:
/// the validator needs both lookup by id and the executed order.
using OrderedResults = std::vector<std::pair<TestId, RunResult>>;

inline const RunResult& result_for(const OrderedResults& results, const TestId& test) {
    for (const auto& [id, result] : results)
        if (id == test) return result;
    fail(ErrorCode::TestNotFound, "no result recorded for " + test.fqn_method());
}

/// Execution backend. The Maven backend drives the real toolchain; the
/// scripted backend replays a fixture table so pipeline tests are
/// deterministic and JDK-free. Callers hold exclusive access to the working
/// copy for the duration of each call.
class Runner {
  public:
    virtual ~Runner() = default;

    virtual RunnerCapabilities capabilities() const = 0;

    /// TEST_PASS here means "compiled"; COMPILATION_ERROR carries parsed
    /// diagnostics. Toolchain absence and timeouts raise Infra instead.
    virtual RunResult compile(WorkingCopy& copy) = 0;

    /// Runs `sequence` in exactly that order within one runtime instance.
    virtual OrderedResults run_ordered(WorkingCopy& copy,
                                       const std::vector<TestId>& sequence) = 0;

    /// Runs `test` under the nondeterminism shaker. Result length is `rounds`
    /// for the scripted backend; the Maven backend prepends the shaker's own
    /// clean baseline run, giving rounds + 1.
    virtual std::vector<RunResult> run_shaken(WorkingCopy& copy, const TestId& test, int rounds,
                                              std::uint64_t seed) = 0;

    RunResult run_isolated(WorkingCopy& copy, const TestId& test) {
        auto results = run_ordered(copy, {test});
        return result_for(results, test);
    }
};

}  // namespace flakyfix::runner
