#pragma once

#include "hermes/agent.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hermes {

// JSONL dataset, one problem per line: {"id", "problem", "answer",
// "subject"?}. Strict mode throws ParseError naming the offending line
// (bad JSON, wrong types, missing fields, duplicate ids) and EmptyDataset
// when nothing remains; permissive mode skips bad lines instead.
std::vector<Problem> load_dataset(const std::string& path, bool permissive = false);

// Forward-pass cost model for one backend role.
struct ModelCostConfig {
    long long params = 0; // non-embedding parameter count
    long long n_layer = 0;
    long long d_attn = 0;
    long long n_ctx = 8192;
};

// FLOPs per forward-passed token: 2*params + 2*n_layer*n_ctx*d_attn.
long long flops_per_token(const ModelCostConfig& cost);

struct FlopsBreakdown {
    std::map<std::string, long long> role_flops; // keyed by role name
    long long total = 0;
    std::vector<std::string> uncosted_roles; // had usage but no cost config

    bool empty() const { return role_flops.empty() && uncosted_roles.empty(); }
};

// Per-role token counts times per-token cost, summed. Roles without a
// cost config contribute zero and are flagged.
FlopsBreakdown estimate_flops(const UsageRecord& usage,
                              const std::map<std::string, ModelCostConfig>& costs);

// Winner among non-empty answers after canonicalization; ties go to the
// answer whose first occurrence is earliest. Empty when nothing voted.
std::string majority_vote(const std::vector<std::string>& answers);

struct RunOptions {
    std::string mode = "hermes"; // "hermes" | "zscot"
    int samples = 1;             // majority@N when > 1
    EpisodeConfig episode;
    std::string results_path; // JSONL; existing rows are resumed, new appended
};

struct ProblemResult {
    std::string problem_id;
    std::string answer; // voted across samples
    std::optional<bool> correct;
    int episode_count = 0;
    UsageRecord usage;
    std::map<std::string, int> termination_counts;
    std::map<std::string, int> verdict_counts;
    double wall_seconds = 0.0;
    std::vector<EpisodeResult> episodes; // empty for resumed rows
};

struct RunSummary {
    int problems = 0;
    int answered = 0; // non-empty voted answer
    int correct = 0;
    int resumed = 0;
    UsageRecord usage;
    std::map<std::string, int> termination_counts;
    std::map<std::string, int> verdict_counts;
    double wall_seconds = 0.0;
    FlopsBreakdown flops; // filled by the caller when costs are known
};

struct EvalHooks {
    // sample_index runs 0..samples-1 for each problem.
    std::function<EpisodeResult(const Problem&, const EpisodeConfig&, int sample_index)>
        run;
    // Decides correctness of the voted answer against the ground truth.
    std::function<bool(const Problem&, const std::string& answer)> check;
};

// Runs every problem not already present in results_path, appending one
// JSONL row per problem as it completes. Resumed rows are not re-run.
RunSummary evaluate(const std::vector<Problem>& problems, const RunOptions& options,
                    const EvalHooks& hooks, std::vector<ProblemResult>* results = nullptr);

// Rows of a results file, in file order. Throws DatasetError on rows
// that cannot be parsed.
std::vector<ProblemResult> load_results(const std::string& path);

// Folds finished rows into a fresh summary (resumed stays 0); lets a
// report be rebuilt from a results file alone.
RunSummary summarize_results(const std::vector<ProblemResult>& results);

nlohmann::json usage_to_json(const UsageRecord& usage);
UsageRecord usage_from_json(const nlohmann::json& j);

nlohmann::json problem_result_to_json(const ProblemResult& result);
ProblemResult problem_result_from_json(const nlohmann::json& j);

nlohmann::json summary_to_json(const RunSummary& summary);
RunSummary summary_from_json(const nlohmann::json& j);

// "table" renders aligned text (an empty run renders the 0 problems
// banner); "json" renders {"summary":..., "problems": [...]} and parses
// back via summary_from_json / problem_result_from_json.
std::string render_report(const RunSummary& summary,
                          const std::vector<ProblemResult>& results,
                          const std::string& format);

} // namespace hermes
