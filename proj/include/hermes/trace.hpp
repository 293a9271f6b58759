#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace hermes {

struct TraceEvent {
    std::string type;
    nlohmann::json payload; // object; ids and content, no type/t duplication
    double t = 0.0;         // seconds since recorder creation
};

// Ordered event log for one episode. Event ids are per-type ordinals, so
// two runs of the same script produce identical ids regardless of timing.
class TraceRecorder {
public:
    TraceRecorder();

    void emit(const std::string& type, nlohmann::json payload);
    std::string next_id(const std::string& prefix);

    const std::vector<TraceEvent>& events() const { return events_; }
    std::vector<TraceEvent> events_of(const std::string& type) const;

    // Called synchronously on every emit; used by the CLI to stream
    // verdicts as they happen.
    void set_listener(std::function<void(const TraceEvent&)> listener);

    std::string to_jsonl() const; // full fidelity, timing included
    void save(const std::string& path) const;

    // Byte-stable form: sorted keys, volatile keys (timing and
    // arrival-order detail) stripped recursively. Two runs of the same
    // script compare equal on this form.
    std::string canonical() const;
    static std::string canonicalize(const std::vector<TraceEvent>& events);

    static std::vector<TraceEvent> load(const std::string& path);

private:
    std::vector<TraceEvent> events_;
    std::map<std::string, int> counters_;
    std::function<void(const TraceEvent&)> listener_;
    std::chrono::steady_clock::time_point start_;
};

} // namespace hermes
