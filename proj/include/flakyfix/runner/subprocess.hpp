#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "flakyfix/errors.hpp"

namespace flakyfix::runner {

struct CommandSpec {
    std::vector<std::string> argv;  // argv[0] resolved via PATH
    std::filesystem::path cwd;
    double timeout_s = 600.0;
    std::vector<std::pair<std::string, std::string>> env;  // extra vars, inherited base
};

struct CommandResult {
    int exit_code = 0;        // WEXITSTATUS, or -signal when terminated
    bool timed_out = false;   // process killed after timeout_s
    bool spawn_failed = false;  // exec never happened (binary missing, cwd invalid)
    std::string spawn_error;    // strerror text when spawn_failed
    std::string output;         // stdout and stderr interleaved in arrival order
    double duration_s = 0.0;
};

/// Runs one subprocess to completion (or timeout) with merged output capture.
/// stdout and stderr share one pipe so compiler diagnostics keep their
/// relative order. Timeout kills the whole process group: Maven forks
/// surefire JVMs, and an orphaned JVM would outlive the repair session.
inline CommandResult run_command(const CommandSpec& spec) {
    if (spec.argv.empty()) fail(ErrorCode::BadInput, "run_command: empty argv");
    if (spec.timeout_s <= 0) fail(ErrorCode::BadInput, "run_command: non-positive timeout");

    int out_pipe[2];
    if (pipe(out_pipe) != 0) fail(ErrorCode::Infra, "pipe() failed");
    int err_pipe[2];  // exec-failure channel, closed by a successful exec
    if (pipe2(err_pipe, O_CLOEXEC) != 0) fail(ErrorCode::Infra, "pipe2() failed");

    auto started = std::chrono::steady_clock::now();
    pid_t pid = fork();
    if (pid < 0) fail(ErrorCode::Infra, "fork() failed");

    if (pid == 0) {
        setpgid(0, 0);
        close(out_pipe[0]);
        close(err_pipe[0]);
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(out_pipe[1], STDERR_FILENO);
        close(out_pipe[1]);
        if (!spec.cwd.empty() && chdir(spec.cwd.c_str()) != 0) {
            int code = errno;
            (void)!write(err_pipe[1], &code, sizeof code);
            _exit(127);
        }
        for (const auto& [key, value] : spec.env) setenv(key.c_str(), value.c_str(), 1);
        std::vector<char*> argv;
        argv.reserve(spec.argv.size() + 1);
        for (const auto& a : spec.argv) argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        execvp(argv[0], argv.data());
        int code = errno;
        (void)!write(err_pipe[1], &code, sizeof code);
        _exit(127);
    }

    close(out_pipe[1]);
    close(err_pipe[1]);

    CommandResult result;
    auto deadline = started + std::chrono::duration<double>(spec.timeout_s);
    char buf[4096];
    bool open = true;
    while (open) {
        auto now = std::chrono::steady_clock::now();
        if (!result.timed_out && now >= deadline) {
            result.timed_out = true;
            kill(-pid, SIGKILL);
            kill(pid, SIGKILL);
        }
        int wait_ms = result.timed_out
                          ? 100
                          : static_cast<int>(
                                std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now)
                                    .count()) +
                                1;
        pollfd pfd{out_pipe[0], POLLIN, 0};
        int rc = poll(&pfd, 1, wait_ms < 1 ? 1 : wait_ms);
        if (rc > 0) {
            ssize_t n = read(out_pipe[0], buf, sizeof buf);
            if (n > 0)
                result.output.append(buf, static_cast<std::size_t>(n));
            else
                open = false;  // EOF or error: all writers gone
        }
    }
    close(out_pipe[0]);

    int spawn_errno = 0;
    if (read(err_pipe[0], &spawn_errno, sizeof spawn_errno) == sizeof spawn_errno) {
        result.spawn_failed = true;
        result.spawn_error = std::strerror(spawn_errno);
    }
    close(err_pipe[0]);

    int status = 0;
    waitpid(pid, &status, 0);
    if (WIFEXITED(status))
        result.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        result.exit_code = -WTERMSIG(status);
    result.duration_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

}  // namespace flakyfix::runner
