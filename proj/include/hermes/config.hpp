#pragma once

#include "hermes/agent.hpp"
#include "hermes/backends.hpp"
#include "hermes/harness.hpp"
#include "hermes/lean_bridge.hpp"
#include "hermes/prover.hpp"
#include "hermes/scheduler.hpp"

#include <map>
#include <string>

namespace hermes {

struct RoleEndpoint {
    std::string endpoint;
    std::string model;
    std::string api_key_env;
    SamplingParams sampling;
    RetryPolicy retry;
};

struct EmbedderSetup {
    std::string kind = "hash"; // "hash" | "http"
    std::string endpoint;
    std::string model;
    std::string api_key_env;
    int dimension = 32; // hash width, or expected http dimension (0 = adopt)
};

struct RunConfig {
    std::map<std::string, RoleEndpoint> roles; // keyed by chat role name
    EmbedderSetup embedder;
    CheckerConfig checker;
    int scheduler_workers = 0; // <= 0: min(2 * K_p, hardware threads)
    int spawn_attempts = 2;
    EpisodeConfig episode;
    VerifyConfig verify;
    ProverConfig prover;
    std::map<std::string, ModelCostConfig> costs; // keyed by role name
    std::string prompts_path;                     // optional overrides file
};

// Strict parse: unknown top-level or role keys, wrong types, and bad
// values all throw ConfigError naming the field path.
RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_json(const nlohmann::json& j, const std::string& origin);

// Chat roles from the config; roles not configured fall back to the
// reasoner's endpoint and model. Throws ConfigError without a reasoner.
BackendSet build_backends(const RunConfig& config);

// Explicit setting, else min(2 * K_p, hardware concurrency), at least 1.
int resolve_workers(const RunConfig& config);

PromptCatalog load_prompts(const RunConfig& config);

} // namespace hermes
