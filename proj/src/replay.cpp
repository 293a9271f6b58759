#include "hermes/replay.hpp"

#include "hermes/backends.hpp"
#include "hermes/errors.hpp"
#include "hermes/lean_bridge.hpp"
#include "hermes/memory.hpp"
#include "hermes/util.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <sstream>
#include <utility>

namespace hermes {

using nlohmann::json;

void emit_run_config(TraceRecorder& trace, const VerifyConfig& verify,
                     const ProverConfig& prover) {
    trace.emit("run_config", {{"id", trace.next_id("rc")},
                              {"k_t", verify.translation.K_t},
                              {"k_p", verify.prover.K_p},
                              {"builtin_tactics", verify.prover.builtin_tactics},
                              {"memory_k", verify.memory_k},
                              {"use_memory", verify.use_memory},
                              {"default_header", verify.default_header},
                              {"use_prover_model", prover.use_prover_model},
                              {"proof_timeout", prover.proof_timeout}});
}

void parse_run_config(const json& payload, VerifyConfig& verify, ProverConfig& prover) {
    verify.translation.K_t = payload.value("k_t", verify.translation.K_t);
    verify.prover.K_p = payload.value("k_p", verify.prover.K_p);
    if (payload.contains("builtin_tactics") && payload["builtin_tactics"].is_array()) {
        verify.prover.builtin_tactics =
            payload["builtin_tactics"].get<std::vector<std::string>>();
    }
    verify.memory_k = payload.value("memory_k", verify.memory_k);
    verify.use_memory = payload.value("use_memory", verify.use_memory);
    verify.default_header = payload.value("default_header", verify.default_header);
    prover.use_prover_model = payload.value("use_prover_model", prover.use_prover_model);
    prover.proof_timeout = payload.value("proof_timeout", prover.proof_timeout);
}

namespace {

TokenCount usage_from(const json& u) {
    TokenCount t;
    if (!u.is_object()) return t;
    t.prompt = u.value("prompt", 0LL);
    t.completion = u.value("completion", 0LL);
    t.estimated = u.value("estimated", false);
    return t;
}

// Plays recorded replies back in order; an overrun means the recorded
// run ended here, either by outage (rethrown as such) or by the wall
// clock (handled by the caller).
class ReplayChatBackend : public ScriptedChatBackend {
public:
    ReplayChatBackend(BackendProfile profile, std::vector<ScriptItem> script,
                      std::string outage_message)
        : ScriptedChatBackend(std::move(profile), std::move(script)),
          outage_message_(std::move(outage_message)) {}

    ChatReply chat(const std::vector<ChatMessage>& messages,
                   const std::vector<ToolDeclaration>& tools,
                   const SamplingParams& sampling) override {
        try {
            return ScriptedChatBackend::chat(messages, tools, sampling);
        } catch (const ScriptExhausted&) {
            if (!outage_message_.empty()) throw BackendUnavailable(outage_message_);
            throw;
        }
    }

private:
    std::string outage_message_; // non-empty: the recording ended in an outage
};

struct EmbedItem {
    std::vector<double> vector;
    TokenCount usage;
};

class ReplayEmbedder : public EmbeddingBackend {
public:
    ReplayEmbedder(BackendProfile profile, std::vector<EmbedItem> playback)
        : profile_(std::move(profile)), playback_(std::move(playback)) {
        for (const auto& item : playback_) {
            if (!item.vector.empty()) {
                dimension_ = static_cast<int>(item.vector.size());
                break;
            }
        }
    }

    EmbedResult embed(const std::string&) override {
        if (next_ >= playback_.size()) {
            throw ScriptExhausted("replay embedder: out of recorded embeddings after " +
                                  std::to_string(playback_.size()));
        }
        EmbedResult out;
        out.vector = playback_[next_].vector;
        out.usage = playback_[next_].usage;
        ++next_;
        return out;
    }
    int dimension() const override { return dimension_; }
    const BackendProfile& profile() const override { return profile_; }

private:
    BackendProfile profile_;
    std::vector<EmbedItem> playback_;
    size_t next_ = 0;
    int dimension_ = 1;
};

CompilerReport report_from_event(const json& p) {
    CompilerReport r;
    r.timed_out = p.value("timed_out", false);
    r.elapsed = p.value("checker_seconds", 0.0);
    json msgs = p.value("messages", json::array());
    if (msgs.is_array()) {
        for (const auto& m : msgs) {
            if (!m.is_object()) continue;
            CompilerMessage cm;
            cm.severity = severity_from_name(m.value("severity", "info"));
            cm.line = m.value("line", 0);
            cm.column = m.value("column", 0);
            cm.text = m.value("text", "");
            r.messages.push_back(std::move(cm));
        }
    }
    return r;
}

ScriptedVerificationBackend::RaceItem race_item_from_event(const json& p) {
    ScriptedVerificationBackend::RaceItem item;
    item.check_jobs = true;
    json jobs = p.value("jobs", json::array());
    if (jobs.is_array()) {
        for (const auto& ji : jobs) {
            if (!ji.is_object()) continue;
            item.job_hashes[ji.value("tag", "")] = ji.value("source_hash", "");
        }
    }
    item.record.winner_polarity = p.value("winner_polarity", "");
    item.record.winner_tag = p.value("winner_tag", "");
    item.record.winner_source = p.value("winner_source", "");
    item.record.opposite_late_proof = p.value("opposite_late_proof", false);
    item.record.checker_seconds = p.value("checker_seconds", 0.0);
    item.record.checker_requests = p.value("checker_requests", 0LL);
    return item;
}

std::string first_divergence(const std::string& recorded, const std::string& replayed) {
    std::istringstream a(recorded), b(replayed);
    std::string la, lb;
    int line = 1;
    while (true) {
        bool ha = static_cast<bool>(std::getline(a, la));
        bool hb = static_cast<bool>(std::getline(b, lb));
        if (!ha && !hb) return "canonical forms differ only in trailing whitespace";
        if (!ha) {
            return "line " + std::to_string(line) +
                   ": replay added events past the recorded end: " + lb.substr(0, 160);
        }
        if (!hb) {
            return "line " + std::to_string(line) +
                   ": replay is missing recorded events from: " + la.substr(0, 160);
        }
        if (la != lb) {
            return "line " + std::to_string(line) + ":\n  recorded: " + la.substr(0, 200) +
                   "\n  replayed: " + lb.substr(0, 200);
        }
        ++line;
    }
}

} // namespace

ReplayReport replay_events(const std::vector<TraceEvent>& events,
                           const PromptCatalog& catalog) {
    const json* run_config_payload = nullptr;
    const json* begin = nullptr;
    const json* end = nullptr;
    std::map<std::string, std::vector<ScriptItem>> scripts;
    std::vector<EmbedItem> embeds;
    std::vector<ScriptedVerificationBackend::CompileItem> compiles;
    std::vector<ScriptedVerificationBackend::RaceItem> races;

    for (const auto& ev : events) {
        if (ev.type == "run_config") {
            run_config_payload = &ev.payload;
        } else if (ev.type == "episode_begin") {
            if (begin) throw ParseError("trace holds more than one episode");
            begin = &ev.payload;
        } else if (ev.type == "episode_end") {
            end = &ev.payload;
        } else if (ev.type == "backend_reply") {
            ScriptItem item;
            item.reply.content = ev.payload.value("content", "");
            json usage = ev.payload.value("usage", json());
            item.reply.usage = usage_from(usage);
            if (ev.payload.contains("tool_call") && ev.payload["tool_call"].is_object()) {
                const json& tc = ev.payload["tool_call"];
                ToolCallRequest req;
                req.id = tc.value("id", "");
                req.name = tc.value("name", "");
                req.arguments_json = tc.value("arguments", "");
                item.reply.tool_call = std::move(req);
            }
            scripts[ev.payload.value("role", "")].push_back(std::move(item));
        } else if (ev.type == "embedding") {
            EmbedItem item;
            json vec = ev.payload.value("vector", json::array());
            if (vec.is_array()) item.vector = vec.get<std::vector<double>>();
            json usage = ev.payload.value("usage", json());
            item.usage = usage_from(usage);
            embeds.push_back(std::move(item));
        } else if (ev.type == "compile_check") {
            ScriptedVerificationBackend::CompileItem item;
            item.source_hash = ev.payload.value("source_hash", "");
            item.report = report_from_event(ev.payload);
            compiles.push_back(std::move(item));
        } else if (ev.type == "race") {
            races.push_back(race_item_from_event(ev.payload));
        }
    }
    if (!begin) throw ParseError("trace has no episode_begin event");

    Problem problem;
    problem.id = begin->value("problem_id", "");
    problem.statement = begin->value("problem", "");
    problem.answer = begin->value("ground_truth", "");
    problem.subject = begin->value("subject", "");

    EpisodeConfig config;
    config.episode_id = begin->value("episode_id", "");
    config.token_budget = begin->value("token_budget", config.token_budget);
    config.wall_clock_limit = begin->value("wall_clock_limit", config.wall_clock_limit);
    config.tool_enabled = begin->value("tool_enabled", config.tool_enabled);
    config.max_tool_calls = begin->value("max_tool_calls", config.max_tool_calls);

    json models = begin->value("models", json::object());
    auto model_of = [&](const char* role) -> std::string {
        if (models.is_object() && models.contains(role) && models[role].is_string())
            return models[role].get<std::string>();
        return "replay";
    };

    const std::string recorded_termination = end ? end->value("termination", "") : "";
    std::string outage_message;
    if (recorded_termination == termination_reason_name(TerminationReason::backend_error)) {
        // The agent logged the outage it saw; rethrowing the same text
        // keeps the replayed warning event identical.
        outage_message = "replayed backend outage";
        for (const auto& ev : events) {
            if (ev.type == "warning" && ev.payload.value("context", "") == "agent")
                outage_message = ev.payload.value("text", outage_message);
        }
    }

    // Mirror the recorded wiring: a role absent from the recording stays
    // absent here, so the replayed episode_begin matches byte for byte.
    const bool any_models = models.is_object() && !models.empty();
    auto want = [&](const char* role) {
        return !any_models || models.contains(role);
    };
    BackendSet set;
    auto make_chat = [&](Role role) {
        BackendProfile p;
        p.role = role;
        p.model = model_of(role_name(role));
        auto it = scripts.find(role_name(role));
        std::vector<ScriptItem> items;
        if (it != scripts.end()) items = std::move(it->second);
        return std::make_shared<ReplayChatBackend>(std::move(p), std::move(items),
                                                   outage_message);
    };
    if (want("reasoner")) set.reasoner = make_chat(Role::reasoner);
    if (want("autoformalizer")) set.autoformalizer = make_chat(Role::autoformalizer);
    if (want("prover")) set.prover = make_chat(Role::prover);
    if (want("judge")) set.judge = make_chat(Role::judge);
    if (want("embedder")) {
        BackendProfile embed_profile;
        embed_profile.role = Role::embedder;
        embed_profile.model = model_of("embedder");
        set.embedder = std::make_shared<ReplayEmbedder>(std::move(embed_profile),
                                                        std::move(embeds));
    }

    VerifyConfig verify;
    ProverConfig prover;
    if (run_config_payload) parse_run_config(*run_config_payload, verify, prover);

    MemoryStore memory;
    ScriptedVerificationBackend checker(std::move(compiles), std::move(races));
    PipelineVerifier verifier(set, catalog, memory, checker, prover, verify);
    Agent agent(set, catalog, &verifier);

    TraceRecorder replayed;
    if (run_config_payload) replayed.emit("run_config", *run_config_payload);

    ReplayReport report;
    bool diverged_early = false;
    try {
        report.result = agent.run_episode(problem, config, &replayed);
    } catch (const ScriptMismatch& e) {
        diverged_early = true;
        report.message = std::string("replay diverged from the recording: ") + e.what();
    } catch (const ScriptExhausted& e) {
        if (recorded_termination == termination_reason_name(TerminationReason::time_limit) &&
            end) {
            // The wall clock cut the recorded run at an arbitrary point;
            // every recorded call has been revalidated, so adopt the
            // recorded ending instead of re-timing it.
            replayed.emit("episode_end", *end);
            report.result.episode_id =
                config.episode_id.empty() ? problem.id : config.episode_id;
            report.result.problem_id = problem.id;
            report.result.termination = TerminationReason::time_limit;
            report.result.final_answer = end->value("final_answer", "");
            report.result.tool_calls = end->value("tool_calls", 0);
        } else {
            diverged_early = true;
            report.message = std::string("replay ran out of recorded events: ") + e.what();
        }
    }

    report.canonical_recorded = TraceRecorder::canonicalize(events);
    report.canonical_replayed = replayed.canonical();
    if (!diverged_early) {
        report.matched = report.canonical_recorded == report.canonical_replayed;
        if (!report.matched) {
            report.message = first_divergence(report.canonical_recorded,
                                              report.canonical_replayed);
        }
    }
    return report;
}

ReplayReport replay_trace(const std::string& path, const PromptCatalog& catalog) {
    return replay_events(TraceRecorder::load(path), catalog);
}

} // namespace hermes
