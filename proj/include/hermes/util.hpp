#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace hermes {

// Wall-clock budget threaded through an episode. Default-constructed
// deadlines never expire.
class Deadline {
public:
    Deadline() = default;

    static Deadline after(double seconds) {
        Deadline d;
        d.limited_ = true;
        d.end_ = std::chrono::steady_clock::now() +
                 std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                     std::chrono::duration<double>(seconds));
        return d;
    }

    bool limited() const { return limited_; }

    bool expired() const {
        return limited_ && std::chrono::steady_clock::now() >= end_;
    }

    // Seconds left, +inf when unlimited, never below zero.
    double remaining() const {
        if (!limited_) return std::numeric_limits<double>::infinity();
        auto left = std::chrono::duration<double>(end_ - std::chrono::steady_clock::now()).count();
        return left > 0.0 ? left : 0.0;
    }

    // Clamp a per-request timeout so it cannot outlive the deadline.
    double clamp(double timeout) const {
        if (!limited_) return timeout;
        double rem = remaining();
        if (rem < 0.05) rem = 0.05; // leave room for one short request
        return timeout < rem ? timeout : rem;
    }

private:
    bool limited_ = false;
    std::chrono::steady_clock::time_point end_{};
};

std::string trim(const std::string& s);
std::string lowercase(const std::string& s);
bool contains_insensitive(const std::string& haystack, const std::string& needle);
std::string replace_all(std::string s, const std::string& from, const std::string& to);

// Collapse whitespace runs to single spaces and trim; used when comparing
// statement text that models may have reformatted.
std::string normalize_whitespace(const std::string& s);

// Whitespace-token count, the fallback when a backend reports no usage.
long long estimate_tokens(const std::string& text);

// Trim + strip surrounding math delimiters ($, $$, \(..\), \[..\]) + case-fold.
std::string canonicalize_answer(const std::string& answer);

// Stable 64-bit FNV-1a; the hex form keys trace records to sources.
std::uint64_t fnv1a(const std::string& data);
std::string fnv1a_hex(const std::string& data);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace hermes
