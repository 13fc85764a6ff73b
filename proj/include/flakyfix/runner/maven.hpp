#pragma once

#include <cstdint>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "flakyfix/runner/backend.hpp"
#include "flakyfix/runner/diagnostics.hpp"
#include "flakyfix/runner/subprocess.hpp"

namespace flakyfix::runner {

namespace detail {

inline std::string base64_decode(const std::string& text) {
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::string out;
    int buffer = 0, bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\r' || c == '\n') continue;
        int v = value_of(c);
        if (v < 0) fail(ErrorCode::Infra, "ordered-driver output corrupt: bad base64");
        buffer = (buffer << 6) | v;
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<char>((buffer >> bits) & 0xFF));
        }
    }
    return out;
}

/// `at com.acme.FooTest.testBar(FooTest.java:42)` → StackFrame. Frames with
/// unknown source (native, generated) are skipped.
inline std::optional<StackFrame> parse_at_frame(const std::string& line) {
    static const std::regex at_line(R"(^\s*at ([\w.$]+)\.([\w$<>]+)\(([\w$.]+\.java):(\d+)\)\s*$)");
    std::smatch m;
    if (!std::regex_match(line, m, at_line)) return std::nullopt;
    StackFrame frame;
    frame.class_fqn = m[1];
    frame.method = m[2];
    frame.file = m[3];
    frame.line = std::stoi(m[4]);
    return frame;
}

}  // namespace detail

struct MavenConfig {
    std::string executable = "mvn";
    RunnerTimeouts timeouts;
    std::string nondex_plugin = "edu.illinois:nondex-maven-plugin:2.1.1";
};

/// Generates the transient JUnit driver that realizes run_ordered's contract:
/// one JVM, explicit order, per-test sentinel lines on stdout. Failure
/// messages travel base64-encoded so multi-line expected/actual texts survive
/// line-oriented log parsing byte-for-byte.
inline std::string generate_ordered_driver(const std::vector<TestId>& sequence) {
    std::ostringstream src;
    src << "// Transient driver written by the flaky-test repair runner; deleted after the run.\n"
        << "import java.util.Base64;\n"
        << "import org.junit.Test;\n"
        << "import org.junit.runner.JUnitCore;\n"
        << "import org.junit.runner.Request;\n"
        << "import org.junit.runner.Result;\n"
        << "import org.junit.runner.notification.Failure;\n"
        << "\n"
        << "public class FlakyfixOrderedIT {\n"
        << "    @Test\n"
        << "    public void runInDeclaredOrder() throws Exception {\n";
    for (const auto& test : sequence)
        src << "        runOne(\"" << test.class_fqn << "\", \"" << test.method << "\");\n";
    src << "    }\n"
        << "\n"
        << "    private static void runOne(String className, String method) throws Exception {\n"
        << "        String id = className + \"#\" + method;\n"
        << "        Class<?> cls;\n"
        << "        try {\n"
        << "            cls = Class.forName(className);\n"
        << "        } catch (ClassNotFoundException e) {\n"
        << "            System.out.println(\"FLAKYFIX-RESULT \" + id + \" NOTFOUND\");\n"
        << "            return;\n"
        << "        }\n"
        << "        Result result = new JUnitCore().run(Request.method(cls, method));\n"
        << "        if (result.wasSuccessful()) {\n"
        << "            System.out.println(\"FLAKYFIX-RESULT \" + id + \" PASS\");\n"
        << "            return;\n"
        << "        }\n"
        << "        Failure failure = result.getFailures().get(0);\n"
        << "        String message = String.valueOf(failure.getMessage());\n"
        << "        if (message.startsWith(\"No tests found\")) {\n"
        << "            System.out.println(\"FLAKYFIX-RESULT \" + id + \" NOTFOUND\");\n"
        << "            return;\n"
        << "        }\n"
        << "        String encoded = Base64.getEncoder().encodeToString(message.getBytes(\"UTF-8\"));\n"
        << "        System.out.println(\"FLAKYFIX-RESULT \" + id + \" FAIL \" + encoded);\n"
        << "        for (StackTraceElement frame : failure.getException().getStackTrace()) {\n"
        << "            if (frame.getFileName() == null) continue;\n"
        << "            System.out.println(\"FLAKYFIX-FRAME \" + frame.getClassName() + \" \"\n"
        << "                    + frame.getMethodName() + \" \" + frame.getFileName() + \" \"\n"
        << "                    + frame.getLineNumber());\n"
        << "        }\n"
        << "    }\n"
        << "}\n";
    return src.str();
}

/// Real-toolchain backend. Compilation goes through `mvn test-compile`,
/// ordered runs through the generated driver above, shaking through the
/// NonDex plugin. Everything is a subprocess; nothing of Maven's is linked in.
class MavenRunner : public Runner {
  public:
    explicit MavenRunner(MavenConfig config = {}) : config_(std::move(config)) {}

    RunnerCapabilities capabilities() const override {
        return {BackendKind::Maven, true, true};
    }

    RunResult compile(WorkingCopy& copy) override {
        std::vector<std::string> argv{config_.executable, "-B", "test-compile"};
        append_module(argv, copy);
        CommandResult run = invoke(argv, copy.root(), config_.timeouts.compile_s, "compile");
        RunResult result;
        result.duration_s = run.duration_s;
        if (run.exit_code == 0) {
            result.kind = OutcomeKind::TestPass;
            return result;
        }
        result.diagnostics = parse_compiler_output(run.output, copy.root());
        if (result.diagnostics.empty())
            fail(ErrorCode::Infra,
                 "maven failed without compiler diagnostics; output tail: " + tail(run.output));
        result.kind = OutcomeKind::CompilationError;
        return result;
    }

    OrderedResults run_ordered(WorkingCopy& copy, const std::vector<TestId>& sequence) override {
        if (sequence.empty()) fail(ErrorCode::BadInput, "run_ordered: empty sequence");
        for (const auto& test : sequence)
            if (test.module_path != sequence.front().module_path)
                fail(ErrorCode::BadInput, "ordered sequence spans modules");

        std::string driver_rel = driver_relative_path(copy);
        copy.write_text(driver_rel, generate_ordered_driver(sequence));
        std::vector<std::string> argv{config_.executable,
                                      "-B",
                                      "test",
                                      "-Dtest=FlakyfixOrderedIT",
                                      "-DfailIfNoTests=false",
                                      "-Dsurefire.failIfNoSpecifiedTests=false"};
        append_module(argv, copy);
        CommandResult run = invoke(argv, copy.root(),
                                   config_.timeouts.test_s * static_cast<double>(sequence.size()),
                                   "ordered run");
        copy.remove_file(driver_rel);
        return parse_ordered_output(run, sequence);
    }

    std::vector<RunResult> run_shaken(WorkingCopy& copy, const TestId& test, int rounds,
                                      std::uint64_t seed) override {
        if (rounds < 1) fail(ErrorCode::BadInput, "run_shaken: rounds must be >= 1");
        std::vector<std::string> argv{config_.executable, "-B", config_.nondex_plugin + ":nondex",
                                      "-Dtest=" + test.class_fqn + "#" + test.method,
                                      "-DnondexRuns=" + std::to_string(rounds)};
        argv.push_back("-DnondexSeed=" + std::to_string(seed));
        append_module(argv, copy);
        CommandResult run = invoke(argv, copy.root(), config_.timeouts.shaker_s, "shaken run");
        return parse_shaken_output(run, rounds);
    }

  private:
    void append_module(std::vector<std::string>& argv, const WorkingCopy& copy) const {
        if (!copy.module_path().empty() && copy.module_path() != ".") {
            argv.push_back("-pl");
            argv.push_back(copy.module_path());
            argv.push_back("-am");
        }
    }

    CommandResult invoke(std::vector<std::string> argv, const std::filesystem::path& cwd,
                         double timeout_s, const char* what) const {
        CommandSpec spec;
        spec.argv = std::move(argv);
        spec.cwd = cwd;
        spec.timeout_s = timeout_s;
        CommandResult run = run_command(spec);
        if (run.spawn_failed)
            fail(ErrorCode::Infra, "build tool not found: " + config_.executable + " (" +
                                       run.spawn_error + "); install Maven or configure the executable");
        if (run.timed_out)
            fail(ErrorCode::Infra, std::string(what) + " timed out after " +
                                       std::to_string(static_cast<long>(timeout_s)) + " s");
        return run;
    }

    static std::string driver_relative_path(const WorkingCopy& copy) {
        std::string prefix;
        if (!copy.module_path().empty() && copy.module_path() != ".")
            prefix = copy.module_path() + "/";
        return prefix + "src/test/java/FlakyfixOrderedIT.java";
    }

    static std::string tail(const std::string& output, std::size_t n = 400) {
        return output.size() <= n ? output : output.substr(output.size() - n);
    }

    OrderedResults parse_ordered_output(const CommandResult& run,
                                        const std::vector<TestId>& sequence) const {
        struct Sentinel {
            std::string id, verdict, payload;
            std::vector<StackFrame> frames;
        };
        std::vector<Sentinel> sentinels;
        for (const auto& line : detail::split_lines(run.output)) {
            std::size_t at = line.find("FLAKYFIX-RESULT ");
            if (at != std::string::npos) {
                std::istringstream fields(line.substr(at + 16));
                Sentinel s;
                fields >> s.id >> s.verdict >> s.payload;
                sentinels.push_back(std::move(s));
                continue;
            }
            at = line.find("FLAKYFIX-FRAME ");
            if (at != std::string::npos && !sentinels.empty()) {
                std::istringstream fields(line.substr(at + 15));
                StackFrame frame;
                fields >> frame.class_fqn >> frame.method >> frame.file >> frame.line;
                sentinels.back().frames.push_back(std::move(frame));
            }
        }
        if (sentinels.size() != sequence.size())
            fail(ErrorCode::Infra, "ordered driver reported " + std::to_string(sentinels.size()) +
                                       " results for " + std::to_string(sequence.size()) +
                                       " tests; output tail: " + tail(run.output));

        OrderedResults results;
        double per_test = run.duration_s / static_cast<double>(sequence.size());
        for (std::size_t i = 0; i < sequence.size(); ++i) {
            const Sentinel& s = sentinels[i];
            if (s.id != sequence[i].fqn_method())
                fail(ErrorCode::Infra, "ordered driver ran " + s.id + " where " +
                                           sequence[i].fqn_method() + " was requested");
            if (s.verdict == "NOTFOUND")
                fail(ErrorCode::TestNotFound, s.id + " not found in the working copy");
            RunResult result;
            result.duration_s = per_test;
            if (s.verdict == "PASS") {
                result.kind = OutcomeKind::TestPass;
            } else if (s.verdict == "FAIL") {
                result.kind = OutcomeKind::TestFailure;
                result.failure_message = detail::base64_decode(s.payload);
                result.stack_frames = s.frames;
            } else {
                fail(ErrorCode::Infra, "ordered driver emitted unknown verdict '" + s.verdict + "'");
            }
            results.emplace_back(sequence[i], result);
        }
        return results;
    }

    std::vector<RunResult> parse_shaken_output(const CommandResult& run, int rounds) const {
        static const std::regex summary(
            R"(Tests run: (\d+), Failures: (\d+), Errors: (\d+), Skipped: (\d+))");
        static const std::regex throwable(
            R"(^\s*(?:\[ERROR\]\s*)?(?:java\.lang\.AssertionError|org\.junit\.ComparisonFailure|junit\.framework\.AssertionFailedError|org\.opentest4j\.AssertionFailedError)(?:: )?(.*)$)");

        // Round chunks are delimited by surefire summary lines: everything
        // since the previous summary belongs to the round the summary closes.
        std::vector<RunResult> results;
        std::vector<std::string> chunk;
        for (const auto& line : detail::split_lines(run.output)) {
            std::smatch m;
            if (std::regex_search(line, m, summary)) {
                RunResult result;
                result.duration_s = run.duration_s;
                bool failed = std::stoi(m[2]) + std::stoi(m[3]) > 0;
                if (failed) {
                    result.kind = OutcomeKind::TestFailure;
                    std::string message;
                    for (const auto& prior : chunk) {
                        std::smatch tm;
                        if (message.empty() && std::regex_match(prior, tm, throwable))
                            message = tm[1];
                        if (auto frame = detail::parse_at_frame(prior))
                            result.stack_frames.push_back(std::move(*frame));
                    }
                    if (message.empty())
                        message = "test failed under shaken round " +
                                  std::to_string(results.size() + 1);
                    result.failure_message = message;
                } else {
                    result.kind = OutcomeKind::TestPass;
                }
                results.push_back(std::move(result));
                chunk.clear();
            } else {
                chunk.push_back(line);
            }
        }

        if (results.empty() && shaker_unavailable(run.output))
            fail(ErrorCode::Infra,
                 "NonDex plugin unavailable: add " + config_.nondex_plugin +
                     " to the build or pre-install it (mvn " + config_.nondex_plugin + ":help)");
        if (static_cast<int>(results.size()) != rounds + 1)
            fail(ErrorCode::Infra, "shaker reported " + std::to_string(results.size()) +
                                       " rounds where " + std::to_string(rounds + 1) +
                                       " were expected; output tail: " + tail(run.output));
        double per_round = run.duration_s / static_cast<double>(results.size());
        for (auto& r : results) r.duration_s = per_round;
        return results;
    }

    bool shaker_unavailable(const std::string& output) const {
        if (output.find(config_.nondex_plugin) == std::string::npos &&
            output.find("nondex") == std::string::npos)
            return true;  // goal never even resolved
        for (const char* marker : {"Could not find goal", "could not be resolved",
                                   "No plugin found for prefix", "Failed to resolve"})
            if (output.find(marker) != std::string::npos) return true;
        return false;
    }

    MavenConfig config_;
};

}  // namespace flakyfix::runner
