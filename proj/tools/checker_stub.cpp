// Fake Lean REPL for tests. Speaks the line protocol and reacts to
// directives embedded in the submitted source:
//
//   STUB_OK             reply with no messages
//   STUB_ERROR(text)    reply with one error message
//   STUB_WARN           reply with one warning
//   STUB_SLEEP_MS(n)    wait n ms before replying (composes with the rest)
//   STUB_HANG           never reply
//   STUB_CRASH          exit without replying
//   STUB_OK_GOAL_ONLY   ok unless the source mentions "_neg"
//   STUB_OK_NEG_ONLY    ok only if the source mentions "_neg"
//
// A source containing "sorry" gets the usual warning. An empty request is
// the readiness probe and succeeds. Anything else is rejected, so tests
// cannot accidentally "prove" an unscripted snippet.
//
// STUB_COUNTER_FILE: flock-guarded "cur max" in-flight counter, shared by
// all stub processes, for concurrency assertions.
// STUB_SIGNAL_LOG: a line is appended when SIGTERM arrives.

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <string>
#include <thread>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

using nlohmann::json;

namespace {

volatile sig_atomic_t g_term = 0;
int g_signal_log_fd = -1;

void on_sigterm(int) {
    if (g_signal_log_fd >= 0) {
        ssize_t n = ::write(g_signal_log_fd, "SIGTERM\n", 8);
        (void)n;
    }
    g_term = 1;
}

void bump_counter(int delta) {
    const char* path = ::getenv("STUB_COUNTER_FILE");
    if (!path || !*path) return;
    int fd = ::open(path, O_RDWR | O_CREAT, 0644);
    if (fd < 0) return;
    ::flock(fd, LOCK_EX);
    char buf[64];
    ssize_t n = ::pread(fd, buf, sizeof(buf) - 1, 0);
    int cur = 0, max = 0;
    if (n > 0) {
        buf[n] = '\0';
        std::sscanf(buf, "%d %d", &cur, &max);
    }
    cur += delta;
    if (cur < 0) cur = 0;
    if (cur > max) max = cur;
    int len = std::snprintf(buf, sizeof(buf), "%d %d\n", cur, max);
    if (::ftruncate(fd, 0) == 0) {
        ssize_t w = ::pwrite(fd, buf, static_cast<size_t>(len), 0);
        (void)w;
    }
    ::flock(fd, LOCK_UN);
    ::close(fd);
}

// Sleeps in small slices so SIGTERM is noticed promptly. Returns false if
// interrupted.
bool interruptible_sleep_ms(long ms) {
    auto end = std::chrono::steady_clock::now() + std::chrono::milliseconds(ms);
    while (std::chrono::steady_clock::now() < end) {
        if (g_term) return false;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return !g_term;
}

std::optional<std::string> directive_arg(const std::string& source, const std::string& name) {
    size_t at = source.find(name + "(");
    if (at == std::string::npos) return std::nullopt;
    size_t open = at + name.size() + 1;
    size_t close = source.find(')', open);
    if (close == std::string::npos) return std::nullopt;
    return source.substr(open, close - open);
}

bool mentions(const std::string& source, const std::string& what) {
    return source.find(what) != std::string::npos;
}

json message(const char* severity, const std::string& text) {
    return json{{"severity", severity},
                {"pos", json{{"line", 1}, {"column", 0}}},
                {"data", text}};
}

} // namespace

int main() {
    const char* log_path = ::getenv("STUB_SIGNAL_LOG");
    if (log_path && *log_path) {
        g_signal_log_fd = ::open(log_path, O_WRONLY | O_CREAT | O_APPEND, 0644);
    }
    struct sigaction sa{};
    sa.sa_handler = on_sigterm;
    ::sigaction(SIGTERM, &sa, nullptr); // no SA_RESTART: reads must wake

    long long env_counter = 0;
    std::string line;
    std::string pending;

    while (!g_term && std::getline(std::cin, line)) {
        if (g_term) break;
        if (line.empty() && pending.empty()) continue;
        pending += line;
        json request = json::parse(pending, nullptr, false);
        if (request.is_discarded()) {
            pending += "\n";
            continue;
        }
        pending.clear();

        std::string source = request.value("cmd", "");

        bump_counter(+1);
        bool cancelled = false;

        if (auto ms = directive_arg(source, "STUB_SLEEP_MS")) {
            long wait = std::strtol(ms->c_str(), nullptr, 10);
            cancelled = !interruptible_sleep_ms(wait);
        }
        if (!cancelled && mentions(source, "STUB_HANG")) {
            while (!g_term) std::this_thread::sleep_for(std::chrono::milliseconds(5));
            cancelled = true;
        }
        if (cancelled) {
            bump_counter(-1);
            return 0;
        }
        if (mentions(source, "STUB_CRASH")) {
            bump_counter(-1);
            return 3;
        }

        json messages = json::array();
        if (auto text = directive_arg(source, "STUB_ERROR")) {
            messages.push_back(message("error", *text));
        } else if (mentions(source, "STUB_WARN")) {
            messages.push_back(message("warning", "stub warning"));
        } else if (mentions(source, "STUB_OK_GOAL_ONLY")) {
            if (mentions(source, "_neg")) {
                messages.push_back(message("error", "stub: negated variant rejected"));
            }
        } else if (mentions(source, "STUB_OK_NEG_ONLY")) {
            if (!mentions(source, "_neg")) {
                messages.push_back(message("error", "stub: positive variant rejected"));
            }
        } else if (mentions(source, "STUB_OK")) {
            // accepted as-is
        } else if (mentions(source, "sorry")) {
            messages.push_back(message("warning", "declaration uses 'sorry'"));
        } else if (source.find_first_not_of(" \t\r\n") == std::string::npos) {
            // readiness probe
        } else {
            messages.push_back(message("error", "stub: unrecognized snippet"));
        }

        // Decrement before replying: once the parent has the reply it may
        // terminate this process at any instant.
        bump_counter(-1);

        json reply{{"env", env_counter++}};
        if (!messages.empty()) reply["messages"] = messages;
        std::cout << reply.dump() << "\n" << std::flush;
    }
    return 0;
}
