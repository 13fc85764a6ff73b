#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flakyfix/runner/backend.hpp"

namespace flakyfix::runner {

/// Fixture backend: every outcome comes from a JSON script table, keyed by
/// the requested order (or shaker seed) and by predicates over the working
/// copy's current file contents. The content predicates are what let one
/// table describe both the broken project and its patched state — a rule like
/// `when_contains LinkedHashMap → PASS` flips the compile verdict the moment
/// the patch lands, with no real compiler involved.
///
/// Table shape:
///   {
///     "tests": ["com.acme.FooTest#bar", ...],
///     "compile": [ { "when_contains": [{"file": F, "text": T}],
///                    "when_lacks":    [...],
///                    "diagnostics":   [...] } ],          // empty/absent → compiled
///     "ordered": [ { "sequence": ["C#m", ...], "when_*": ...,
///                    "failures": {"C#m": {"message": M, "frames": [...]}} } ],
///     "shaken":  [ { "test": "C#m", "seed": 7, "when_*": ...,
///                    "failing_rounds": [2], "message": M, "frames": [...] } ]
///   }
/// Rules are tried in file order; the first whose guards hold wins. No match
/// means success (compiles / all pass): tables only spell out the failures.
class ScriptedRunner : public Runner {
  public:
    static ScriptedRunner from_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) fail(ErrorCode::BadInput, "script table not readable: " + path.string());
        nlohmann::json table;
        try {
            in >> table;
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::BadInput, "script table is not valid JSON: " + std::string(e.what()));
        }
        return ScriptedRunner(table);
    }

    explicit ScriptedRunner(const nlohmann::json& table) {
        if (!table.is_object()) fail(ErrorCode::BadInput, "script table root must be an object");
        for (const auto& t : table.value("tests", nlohmann::json::array()))
            known_tests_.insert(as_string(t, "tests entry"));
        for (const auto& r : table.value("compile", nlohmann::json::array())) {
            CompileRule rule;
            load_guards(r, rule.contains, rule.lacks);
            for (const auto& d : r.value("diagnostics", nlohmann::json::array()))
                rule.diagnostics.push_back(load_diagnostic(d));
            compile_rules_.push_back(std::move(rule));
        }
        for (const auto& r : table.value("ordered", nlohmann::json::array())) {
            OrderedRule rule;
            load_guards(r, rule.contains, rule.lacks);
            if (!r.contains("sequence"))
                fail(ErrorCode::BadInput, "ordered rule without sequence");
            for (const auto& s : r.at("sequence"))
                rule.sequence.push_back(as_string(s, "sequence entry"));
            // items() keeps a reference; the container must outlive the loop
            nlohmann::json failures = r.value("failures", nlohmann::json::object());
            for (const auto& [key, f] : failures.items())
                rule.failures.emplace(key, load_failure(f));
            ordered_rules_.push_back(std::move(rule));
        }
        for (const auto& r : table.value("shaken", nlohmann::json::array())) {
            ShakenRule rule;
            load_guards(r, rule.contains, rule.lacks);
            rule.test = as_string(r.at("test"), "shaken test");
            if (r.contains("seed")) rule.seed = r.at("seed").get<std::uint64_t>();
            for (const auto& n : r.value("failing_rounds", nlohmann::json::array()))
                rule.failing_rounds.insert(n.get<int>());
            if (!rule.failing_rounds.empty()) rule.failure = load_failure(r);
            shaken_rules_.push_back(std::move(rule));
        }
    }

    RunnerCapabilities capabilities() const override {
        return {BackendKind::Scripted, true, true};
    }

    RunResult compile(WorkingCopy& copy) override {
        for (const auto& rule : compile_rules_) {
            if (!guards_hold(copy, rule.contains, rule.lacks)) continue;
            if (rule.diagnostics.empty()) break;
            RunResult result;
            result.kind = OutcomeKind::CompilationError;
            result.diagnostics = rule.diagnostics;
            result.duration_s = kCompileCost;
            return result;
        }
        RunResult ok;
        ok.kind = OutcomeKind::TestPass;
        ok.duration_s = kCompileCost;
        return ok;
    }

    OrderedResults run_ordered(WorkingCopy& copy, const std::vector<TestId>& sequence) override {
        if (sequence.empty()) fail(ErrorCode::BadInput, "run_ordered: empty sequence");
        for (const auto& test : sequence)
            if (!known_tests_.count(test.fqn_method()))
                fail(ErrorCode::TestNotFound, "scripted backend knows no test " + test.fqn_method());

        const OrderedRule* rule = nullptr;
        for (const auto& candidate : ordered_rules_) {
            if (candidate.sequence.size() != sequence.size()) continue;
            bool same = true;
            for (std::size_t i = 0; i < sequence.size(); ++i)
                same = same && candidate.sequence[i] == sequence[i].fqn_method();
            if (same && guards_hold(copy, candidate.contains, candidate.lacks)) {
                rule = &candidate;
                break;
            }
        }

        OrderedResults results;
        executed_orders_.emplace_back();
        for (const auto& test : sequence) {
            executed_orders_.back().push_back(test);  // simulated execution, in order
            RunResult result;
            result.duration_s = kTestCost;
            result.kind = OutcomeKind::TestPass;
            if (rule) {
                auto hit = rule->failures.find(test.fqn_method());
                if (hit != rule->failures.end()) {
                    result.kind = OutcomeKind::TestFailure;
                    result.failure_message = hit->second.message;
                    result.stack_frames = hit->second.frames;
                }
            }
            results.emplace_back(test, result);
        }
        return results;
    }

    std::vector<RunResult> run_shaken(WorkingCopy& copy, const TestId& test, int rounds,
                                      std::uint64_t seed) override {
        if (rounds < 1) fail(ErrorCode::BadInput, "run_shaken: rounds must be >= 1");
        if (!known_tests_.count(test.fqn_method()))
            fail(ErrorCode::TestNotFound, "scripted backend knows no test " + test.fqn_method());

        const ShakenRule* rule = nullptr;
        for (const auto& candidate : shaken_rules_) {
            if (candidate.test != test.fqn_method()) continue;
            if (candidate.seed && *candidate.seed != seed) continue;
            if (!guards_hold(copy, candidate.contains, candidate.lacks)) continue;
            rule = &candidate;
            break;
        }

        std::vector<RunResult> results;
        for (int round = 1; round <= rounds; ++round) {
            RunResult result;
            result.duration_s = kTestCost;
            if (rule && rule->failing_rounds.count(round)) {
                result.kind = OutcomeKind::TestFailure;
                result.failure_message = rule->failure.message;
                result.stack_frames = rule->failure.frames;
            } else {
                result.kind = OutcomeKind::TestPass;
            }
            results.push_back(std::move(result));
        }
        return results;
    }

    /// Every sequence this runner has executed, in the order the tests were
    /// actually evaluated. Exists so tests can assert order fidelity.
    const std::vector<std::vector<TestId>>& executed_orders() const { return executed_orders_; }

  private:
    static constexpr double kCompileCost = 0.05;
    static constexpr double kTestCost = 0.01;

    struct Guard {
        std::string file;
        std::string text;
    };
    struct Failure {
        std::string message;
        std::vector<StackFrame> frames;
    };
    struct CompileRule {
        std::vector<Guard> contains, lacks;
        std::vector<CompilationDiagnostic> diagnostics;
    };
    struct OrderedRule {
        std::vector<Guard> contains, lacks;
        std::vector<std::string> sequence;
        std::map<std::string, Failure> failures;
    };
    struct ShakenRule {
        std::vector<Guard> contains, lacks;
        std::string test;
        std::optional<std::uint64_t> seed;
        std::set<int> failing_rounds;
        Failure failure;
    };

    static std::string as_string(const nlohmann::json& j, const char* what) {
        if (!j.is_string()) fail(ErrorCode::BadInput, std::string("script table: ") + what + " must be a string");
        return j.get<std::string>();
    }

    static void load_guards(const nlohmann::json& rule, std::vector<Guard>& contains,
                            std::vector<Guard>& lacks) {
        auto load = [](const nlohmann::json& list, std::vector<Guard>& out) {
            for (const auto& g : list) {
                if (!g.contains("file") || !g.contains("text"))
                    fail(ErrorCode::BadInput, "script table guard needs file and text");
                out.push_back({g.at("file").get<std::string>(), g.at("text").get<std::string>()});
            }
        };
        load(rule.value("when_contains", nlohmann::json::array()), contains);
        load(rule.value("when_lacks", nlohmann::json::array()), lacks);
    }

    static CompilationDiagnostic load_diagnostic(const nlohmann::json& d) {
        CompilationDiagnostic diag;
        diag.file = d.at("file").get<std::string>();
        diag.line = d.value("line", 0);
        diag.kind = diagnostic_kind_from_string(d.value("kind", "OTHER"));
        diag.symbol = d.value("symbol", "");
        diag.raw_message = d.at("message").get<std::string>();
        diag.validate();
        return diag;
    }

    static Failure load_failure(const nlohmann::json& f) {
        Failure failure;
        if (!f.contains("message"))
            fail(ErrorCode::BadInput, "script table failure without message");
        failure.message = f.at("message").get<std::string>();
        for (const auto& fr : f.value("frames", nlohmann::json::array())) {
            StackFrame frame;
            frame.class_fqn = fr.at("class").get<std::string>();
            frame.method = fr.at("method").get<std::string>();
            frame.file = fr.value("file", "");
            frame.line = fr.value("line", 0);
            failure.frames.push_back(std::move(frame));
        }
        return failure;
    }

    bool guards_hold(const WorkingCopy& copy, const std::vector<Guard>& contains,
                     const std::vector<Guard>& lacks) const {
        for (const auto& g : contains)
            if (!copy.contains_text(g.file, g.text)) return false;
        for (const auto& g : lacks)
            if (copy.contains_text(g.file, g.text)) return false;
        return true;
    }

    std::set<std::string> known_tests_;
    std::vector<CompileRule> compile_rules_;
    std::vector<OrderedRule> ordered_rules_;
    std::vector<ShakenRule> shaken_rules_;
    std::vector<std::vector<TestId>> executed_orders_;
};

}  // namespace flakyfix::runner
