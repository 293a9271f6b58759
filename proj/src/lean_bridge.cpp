#include "hermes/lean_bridge.hpp"

#include "hermes/errors.hpp"
#include "hermes/util.hpp"

#include <nlohmann/json.hpp>

#include <cerrno>
#include <csignal>
#include <cstring>
#include <mutex>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace hermes {

using nlohmann::json;

const char* severity_name(Severity severity) {
    switch (severity) {
        case Severity::error: return "error";
        case Severity::warning: return "warning";
        case Severity::info: return "info";
    }
    return "info";
}

Severity severity_from_name(const std::string& name) {
    if (name == "error") return Severity::error;
    if (name == "warning") return Severity::warning;
    return Severity::info;
}

bool CompilerReport::has_error() const {
    for (const auto& m : messages) {
        if (m.severity == Severity::error) return true;
    }
    return false;
}

bool CompilerReport::has_sorry() const {
    for (const auto& m : messages) {
        if (m.severity == Severity::warning &&
            m.text.find("sorry") != std::string::npos) {
            return true;
        }
    }
    return false;
}

bool CompilerReport::compiles() const {
    return !timed_out && !has_error();
}

const char* proof_status_name(ProofStatus status) {
    switch (status) {
        case ProofStatus::proved: return "proved";
        case ProofStatus::failed: return "failed";
        case ProofStatus::timed_out: return "timed_out";
    }
    return "failed";
}

ProofOutcome ProofOutcome::from_report(const CompilerReport& report) {
    ProofOutcome outcome;
    outcome.report = report;
    if (report.timed_out) {
        outcome.status = ProofStatus::timed_out;
    } else if (report.has_error() || report.has_sorry()) {
        outcome.status = ProofStatus::failed;
    } else {
        outcome.status = ProofStatus::proved;
    }
    return outcome;
}

namespace {

void ignore_sigpipe_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

CompilerReport parse_reply(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw CheckerCrashed("checker produced unparseable output: " + text.substr(0, 200));
    }
    CompilerReport report;
    if (j.contains("messages") && j["messages"].is_array()) {
        for (const auto& m : j["messages"]) {
            CompilerMessage msg;
            msg.severity = severity_from_name(m.value("severity", "info"));
            if (m.contains("pos") && m["pos"].is_object()) {
                msg.line = m["pos"].value("line", 0);
                msg.column = m["pos"].value("column", 0);
            }
            msg.text = m.value("data", m.value("text", ""));
            report.messages.push_back(std::move(msg));
        }
    }
    // Real REPLs report sorries out-of-band; fold them into a warning so
    // the sorry check has a single place to look.
    if (j.contains("sorries") && j["sorries"].is_array() && !j["sorries"].empty() &&
        !report.has_sorry()) {
        CompilerMessage msg;
        msg.severity = Severity::warning;
        msg.text = "declaration uses 'sorry'";
        const auto& first = j["sorries"].front();
        if (first.is_object() && first.contains("pos") && first["pos"].is_object()) {
            msg.line = first["pos"].value("line", 0);
            msg.column = first["pos"].value("column", 0);
        }
        report.messages.push_back(std::move(msg));
    }
    return report;
}

} // namespace

CheckerHandle::~CheckerHandle() {
    terminate();
}

CheckerHandle::CheckerHandle(CheckerHandle&& other) noexcept {
    *this = std::move(other);
}

CheckerHandle& CheckerHandle::operator=(CheckerHandle&& other) noexcept {
    if (this != &other) {
        terminate();
        config_ = std::move(other.config_);
        pid_ = other.pid_;
        stdin_fd_ = other.stdin_fd_;
        stdout_fd_ = other.stdout_fd_;
        alive_ = other.alive_;
        served_ = other.served_;
        buffer_ = std::move(other.buffer_);
        started_at_ = other.started_at_;
        other.pid_ = -1;
        other.stdin_fd_ = -1;
        other.stdout_fd_ = -1;
        other.alive_ = false;
    }
    return *this;
}

CheckerHandle CheckerHandle::start(const CheckerConfig& config) {
    ignore_sigpipe_once();
    if (config.executable_path.empty()) {
        throw SpawnFailure("checker executable path is empty");
    }

    int in_pipe[2];  // parent -> child
    int out_pipe[2]; // child -> parent
    int status_pipe[2];
    if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0 || ::pipe(status_pipe) != 0) {
        throw SpawnFailure(std::string("pipe failed: ") + std::strerror(errno));
    }
    ::fcntl(status_pipe[1], F_SETFD, FD_CLOEXEC);

    pid_t pid = ::fork();
    if (pid < 0) {
        throw SpawnFailure(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        ::close(status_pipe[0]);
        if (!config.project_root.empty() &&
            ::chdir(config.project_root.c_str()) != 0) {
            int err = errno;
            ssize_t n = ::write(status_pipe[1], &err, sizeof(err));
            (void)n;
            ::_exit(127);
        }
        for (const auto& [key, value] : config.env) {
            ::setenv(key.c_str(), value.c_str(), 1);
        }
        std::vector<char*> argv;
        argv.push_back(const_cast<char*>(config.executable_path.c_str()));
        for (const auto& a : config.args) argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        ::execvp(config.executable_path.c_str(), argv.data());
        int err = errno;
        ssize_t n = ::write(status_pipe[1], &err, sizeof(err));
        (void)n;
        ::_exit(127);
    }

    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::close(status_pipe[1]);

    int child_errno = 0;
    ssize_t n = ::read(status_pipe[0], &child_errno, sizeof(child_errno));
    ::close(status_pipe[0]);
    if (n > 0) {
        ::close(in_pipe[1]);
        ::close(out_pipe[0]);
        ::waitpid(pid, nullptr, 0);
        throw SpawnFailure("cannot start checker '" + config.executable_path +
                           "': " + std::strerror(child_errno));
    }

    CheckerHandle handle;
    handle.config_ = config;
    handle.pid_ = pid;
    handle.stdin_fd_ = in_pipe[1];
    handle.stdout_fd_ = out_pipe[0];
    handle.alive_ = true;
    handle.started_at_ = std::chrono::steady_clock::now();

    // Readiness probe: an empty request must come back within the handshake
    // window. The header is skipped here so probes stay cheap.
    double window = config.handshake_timeout > 0 ? config.handshake_timeout
                                                 : config.default_timeout;
    try {
        std::string reply = handle.read_probe_reply(window);
        (void)reply;
    } catch (const CheckerCrashed& e) {
        handle.terminate();
        throw SpawnFailure(std::string("checker exited during handshake: ") + e.what());
    }
    return handle;
}

// Sends the probe and waits for any complete JSON reply.
std::string CheckerHandle::read_probe_reply(double window) {
    std::string line = json{{"cmd", ""}}.dump();
    line += "\n\n";
    if (::write(stdin_fd_, line.data(), line.size()) < 0) {
        throw CheckerCrashed(std::string("write failed: ") + std::strerror(errno));
    }
    try {
        return read_reply(window);
    } catch (const HandshakeTimeout&) {
        terminate();
        throw;
    }
}

CompilerReport CheckerHandle::check_compiles(const std::string& source, double timeout) {
    return request(source, timeout, true);
}

ProofOutcome CheckerHandle::check_proof(const std::string& source, double timeout) {
    return ProofOutcome::from_report(request(source, timeout, true));
}

CompilerReport CheckerHandle::request(const std::string& source, double timeout, bool count) {
    if (!alive_) throw CheckerCrashed("handle is not live");
    if (timeout < 0) timeout = config_.default_timeout;

    std::string snippet = config_.startup_header.empty()
                              ? source
                              : config_.startup_header + "\n" + source;
    std::string line = json{{"cmd", snippet}}.dump();
    line += "\n\n";

    auto start = std::chrono::steady_clock::now();
    ssize_t written = ::write(stdin_fd_, line.data(), line.size());
    if (written < 0 || static_cast<size_t>(written) != line.size()) {
        alive_ = false;
        terminate();
        throw CheckerCrashed(std::string("write to checker failed: ") + std::strerror(errno));
    }

    CompilerReport report;
    try {
        std::string reply = read_reply(timeout);
        report = parse_reply(reply);
    } catch (const HandshakeTimeout&) {
        // Deadline passed mid-request. The REPL cannot abandon work, so the
        // subprocess is terminated and the timeout reported in-band.
        terminate();
        report.timed_out = true;
    }
    report.elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (count) ++served_;
    return report;
}

// Accumulates stdout until a complete JSON object parses. Throws
// HandshakeTimeout at the deadline (callers translate it) and
// CheckerCrashed on EOF.
std::string CheckerHandle::read_reply(double timeout_seconds) {
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                        std::chrono::duration<double>(timeout_seconds));

    auto try_extract = [&]() -> std::string {
        size_t begin = buffer_.find_first_not_of(" \t\r\n");
        if (begin == std::string::npos) {
            buffer_.clear();
            return {};
        }
        // Replies are newline-terminated; test each newline-terminated prefix.
        size_t search_from = begin;
        size_t nl;
        while ((nl = buffer_.find('\n', search_from)) != std::string::npos) {
            std::string candidate = buffer_.substr(begin, nl - begin);
            if (json::accept(candidate)) {
                buffer_.erase(0, nl + 1);
                return candidate;
            }
            search_from = nl + 1;
        }
        return {};
    };

    std::string found = try_extract();
    if (!found.empty()) return found;

    char chunk[4096];
    for (;;) {
        auto now = std::chrono::steady_clock::now();
        if (now >= deadline) throw HandshakeTimeout("checker reply timed out");
        int wait_ms = static_cast<int>(
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count());
        if (wait_ms < 1) wait_ms = 1;

        struct pollfd pfd{stdout_fd_, POLLIN, 0};
        int rc = ::poll(&pfd, 1, wait_ms);
        if (rc < 0) {
            if (errno == EINTR) continue;
            alive_ = false;
            throw CheckerCrashed(std::string("poll failed: ") + std::strerror(errno));
        }
        if (rc == 0) continue; // loop re-checks the deadline

        ssize_t n = ::read(stdout_fd_, chunk, sizeof(chunk));
        if (n < 0) {
            if (errno == EINTR) continue;
            alive_ = false;
            throw CheckerCrashed(std::string("read failed: ") + std::strerror(errno));
        }
        if (n == 0) {
            alive_ = false;
            int status = 0;
            ::waitpid(pid_, &status, WNOHANG);
            throw CheckerCrashed("checker subprocess exited mid-request");
        }
        buffer_.append(chunk, static_cast<size_t>(n));
        found = try_extract();
        if (!found.empty()) return found;
    }
}

void CheckerHandle::terminate() {
    alive_ = false;
    if (stdin_fd_ >= 0) {
        ::close(stdin_fd_);
        stdin_fd_ = -1;
    }
    if (stdout_fd_ >= 0) {
        ::close(stdout_fd_);
        stdout_fd_ = -1;
    }
    if (pid_ > 0) {
        ::kill(pid_, SIGTERM);
        // Grace period, then force.
        for (int i = 0; i < 20; ++i) {
            int status = 0;
            pid_t r = ::waitpid(pid_, &status, WNOHANG);
            if (r == pid_ || r < 0) {
                pid_ = -1;
                return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, nullptr, 0);
        pid_ = -1;
    }
}

} // namespace hermes
