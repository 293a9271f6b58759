#pragma once

#include "hermes/backends.hpp"
#include "hermes/prompts.hpp"
#include "hermes/prover.hpp"

#include <map>
#include <optional>
#include <string>

namespace hermes {

struct Problem {
    std::string id;
    std::string statement;
    std::string answer; // ground truth; empty when unknown
    std::string subject;
};

enum class TerminationReason { answered, token_budget, time_limit, backend_error };

const char* termination_reason_name(TerminationReason reason);

struct EpisodeConfig {
    std::string episode_id;
    long long token_budget = 8192;   // reasoner role only
    double wall_clock_limit = 900.0; // seconds; <= 0 disables
    bool tool_enabled = true;
    int max_tool_calls = 16;
};

struct EpisodeResult {
    std::string episode_id;
    std::string problem_id;
    std::string final_answer;
    std::optional<bool> correct; // unset when no ground truth or no answer
    TerminationReason termination = TerminationReason::answered;
    UsageRecord usage;
    double wall_seconds = 0.0;
    int tool_calls = 0;
    std::map<std::string, int> verdict_counts; // keyed by verdict token
};

// Last \boxed{...} in the text, brace-matched; nullopt when absent.
std::optional<std::string> extract_final_answer(const std::string& text);

// Canonical string equality first; otherwise the judge decides, failing
// closed (an unparseable judge means incorrect).
bool check_answer(const BackendSet& backends, const PromptCatalog& catalog,
                  const std::string& question, const std::string& answer,
                  const std::string& ground_truth, CallContext& ctx);

// The exact text handed back for a verdict. Labels are load-bearing: the
// reasoner is prompted to react to the leading CORRECT/INCORRECT/
// VERIFICATION FAILURE/NO VERIFICATION token.
std::string render_tool_result(const PromptCatalog& catalog, Verdict verdict);

// Runs one reasoning episode: the reasoner loops against the verify tool
// until it boxes a final answer or a budget trips. verifier may be null
// only when the tool is disabled.
class Agent {
public:
    Agent(const BackendSet& backends, const PromptCatalog& catalog,
          StepVerifier* verifier);

    EpisodeResult run_episode(const Problem& problem, const EpisodeConfig& config,
                              TraceRecorder* trace);

private:
    const BackendSet* backends_;
    const PromptCatalog* catalog_;
    StepVerifier* verifier_;
};

} // namespace hermes
