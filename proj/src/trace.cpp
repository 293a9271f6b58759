#include "hermes/trace.hpp"

#include "hermes/errors.hpp"
#include "hermes/util.hpp"

#include <fstream>
#include <sstream>

namespace hermes {

using nlohmann::json;

namespace {

// Keys whose values depend on wall clock or thread arrival order. The
// canonical form exists to compare runs, so these are dropped wherever
// they appear.
const char* const kVolatileKeys[] = {
    "t", "elapsed", "checker_seconds", "checker_requests",
    "queue_latency_seconds", "jobs", "wall_seconds",
};

bool is_volatile(const std::string& key) {
    for (const char* k : kVolatileKeys) {
        if (key == k) return true;
    }
    return false;
}

json strip_volatile(const json& value) {
    if (value.is_object()) {
        json out = json::object();
        for (auto it = value.begin(); it != value.end(); ++it) {
            if (is_volatile(it.key())) continue;
            out[it.key()] = strip_volatile(it.value());
        }
        return out;
    }
    if (value.is_array()) {
        json out = json::array();
        for (const auto& item : value) out.push_back(strip_volatile(item));
        return out;
    }
    return value;
}

json event_to_json(const TraceEvent& event, bool with_time) {
    json line = event.payload.is_object() ? event.payload : json::object();
    line["type"] = event.type;
    if (with_time) line["t"] = event.t;
    return line;
}

} // namespace

TraceRecorder::TraceRecorder() : start_(std::chrono::steady_clock::now()) {}

void TraceRecorder::emit(const std::string& type, json payload) {
    TraceEvent event;
    event.type = type;
    event.payload = std::move(payload);
    event.t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
                  .count();
    events_.push_back(std::move(event));
    if (listener_) listener_(events_.back());
}

std::string TraceRecorder::next_id(const std::string& prefix) {
    return prefix + std::to_string(++counters_[prefix]);
}

std::vector<TraceEvent> TraceRecorder::events_of(const std::string& type) const {
    std::vector<TraceEvent> out;
    for (const auto& e : events_) {
        if (e.type == type) out.push_back(e);
    }
    return out;
}

void TraceRecorder::set_listener(std::function<void(const TraceEvent&)> listener) {
    listener_ = std::move(listener);
}

std::string TraceRecorder::to_jsonl() const {
    std::ostringstream out;
    for (const auto& e : events_) {
        out << event_to_json(e, true).dump() << "\n";
    }
    return out.str();
}

void TraceRecorder::save(const std::string& path) const {
    write_text_file(path, to_jsonl());
}

std::string TraceRecorder::canonical() const {
    return canonicalize(events_);
}

std::string TraceRecorder::canonicalize(const std::vector<TraceEvent>& events) {
    std::ostringstream out;
    for (const auto& e : events) {
        out << strip_volatile(event_to_json(e, false)).dump() << "\n";
    }
    return out.str();
}

std::vector<TraceEvent> TraceRecorder::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open trace file: " + path);
    std::vector<TraceEvent> events;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("type")) {
            throw Error("trace line " + std::to_string(line_no) + " is not an event");
        }
        TraceEvent event;
        event.type = j["type"].get<std::string>();
        event.t = j.value("t", 0.0);
        j.erase("type");
        if (j.contains("t")) j.erase("t");
        event.payload = std::move(j);
        events.push_back(std::move(event));
    }
    return events;
}

} // namespace hermes
