#pragma once

#include "hermes/agent.hpp"
#include "hermes/prompts.hpp"
#include "hermes/prover.hpp"
#include "hermes/trace.hpp"

#include <string>
#include <vector>

namespace hermes {

// Pipeline budgets are recorded into the trace so a replay rebuilds the
// run with the same K_t/K_p/memory settings it was produced with.
void emit_run_config(TraceRecorder& trace, const VerifyConfig& verify,
                     const ProverConfig& prover);
void parse_run_config(const nlohmann::json& payload, VerifyConfig& verify,
                      ProverConfig& prover);

struct ReplayReport {
    bool matched = false;
    std::string message; // empty on success, else the first divergence
    std::string canonical_recorded;
    std::string canonical_replayed;
    EpisodeResult result;
};

// Re-runs a recorded episode against doubles scripted from the trace
// itself (chat replies, embeddings, compile checks, race outcomes) and
// compares the canonical forms byte for byte. Throws ParseError when the
// trace is not a single complete episode.
ReplayReport replay_trace(const std::string& path, const PromptCatalog& catalog);
ReplayReport replay_events(const std::vector<TraceEvent>& events,
                           const PromptCatalog& catalog);

} // namespace hermes
