#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

#include <sys/types.h>

namespace hermes {

// Configuration for one checker subprocess. The executable speaks the REPL
// line protocol: one JSON request {"cmd": source} per line, one JSON reply
// {"messages": [...], "env": n} back (multi-line replies are tolerated).
struct CheckerConfig {
    std::string executable_path;
    std::vector<std::string> args;
    std::string project_root;      // working directory; empty = inherit
    double default_timeout = 60.0; // seconds, per request
    std::string startup_header;    // prepended to every snippet
    std::vector<std::pair<std::string, std::string>> env; // extra env vars
    double handshake_timeout = 0;  // 0 = use default_timeout
};

enum class Severity { error, warning, info };

const char* severity_name(Severity severity);
Severity severity_from_name(const std::string& name);

struct CompilerMessage {
    Severity severity = Severity::info;
    int line = 0;   // 1-based, 0 when the checker gave no position
    int column = 0;
    std::string text;
};

struct CompilerReport {
    std::vector<CompilerMessage> messages;
    double elapsed = 0.0;
    bool timed_out = false;

    bool compiles() const;  // finished with no error-severity message
    bool has_error() const;
    bool has_sorry() const; // a sorry-usage warning is present
};

enum class ProofStatus { proved, failed, timed_out };

const char* proof_status_name(ProofStatus status);

struct ProofOutcome {
    ProofStatus status = ProofStatus::failed;
    CompilerReport report;

    static ProofOutcome from_report(const CompilerReport& report);
};

// Owns one checker subprocess. Single-owner, movable, not safe for
// concurrent use; one request in flight at a time. All pooling and
// parallelism live in the scheduler.
class CheckerHandle {
public:
    CheckerHandle() = default;
    ~CheckerHandle();

    CheckerHandle(CheckerHandle&& other) noexcept;
    CheckerHandle& operator=(CheckerHandle&& other) noexcept;
    CheckerHandle(const CheckerHandle&) = delete;
    CheckerHandle& operator=(const CheckerHandle&) = delete;

    // Spawns the subprocess and probes it with an empty request. Throws
    // SpawnFailure or HandshakeTimeout.
    static CheckerHandle start(const CheckerConfig& config);

    // timeout < 0 selects config.default_timeout. A timeout is reported
    // in-band (report.timed_out); the subprocess is terminated and the
    // handle goes dead, since the REPL cannot abandon a request midway.
    CompilerReport check_compiles(const std::string& source, double timeout = -1.0);
    ProofOutcome check_proof(const std::string& source, double timeout = -1.0);

    void terminate();
    bool alive() const { return alive_; }
    pid_t pid() const { return pid_; }
    long long requests_served() const { return served_; }
    std::chrono::steady_clock::time_point started_at() const { return started_at_; }

private:
    CompilerReport request(const std::string& source, double timeout, bool count);
    std::string read_reply(double timeout_seconds);
    std::string read_probe_reply(double window);

    CheckerConfig config_;
    pid_t pid_ = -1;
    int stdin_fd_ = -1;
    int stdout_fd_ = -1;
    bool alive_ = false;
    long long served_ = 0;
    std::string buffer_;
    std::chrono::steady_clock::time_point started_at_{};
};

} // namespace hermes
