#pragma once

#include "hermes/memory.hpp"
#include "hermes/scheduler.hpp"
#include "hermes/translator.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hermes {

enum class Verdict { correct, incorrect, verification_failure, no_verification };

// The exact tool-result labels: "CORRECT", "INCORRECT",
// "VERIFICATION FAILURE", "NO VERIFICATION".
const char* verdict_token(Verdict verdict);
Verdict verdict_from_token(const std::string& token);

// Total mapping from pipeline facts to a verdict. polarity is "goal",
// "negation", or "" when nothing proved; every one of the twelve
// combinations has exactly one row.
Verdict verdict_for(bool formalizable, bool translated, const std::string& polarity);

struct JobSummary {
    std::string tag;
    std::string polarity; // "goal" | "negation"
    JobStatus status = JobStatus::completed;
    ProofStatus proof = ProofStatus::failed;
    std::string source_hash;
};

struct RaceRecord {
    std::string winner_polarity; // "goal" | "negation" | "" when nothing proved
    std::string winner_tag;
    std::string winner_source;
    bool opposite_late_proof = false; // both polarities proved
    std::vector<JobSummary> jobs;     // arrival order
    double checker_seconds = 0.0;
    long long checker_requests = 0;

    bool proved() const { return !winner_polarity.empty(); }
};

// Checker facade used by the translator (compile checks) and the prover
// (proof races). The scheduler-backed implementation is the live path;
// the scripted one drives replay and unit tests.
class VerificationBackend : public CompileChecker {
public:
    // Polarity is read from each job's tag ("neg..." means negation).
    // Returns once a job proves, cancelling the rest, or when all finish.
    virtual RaceRecord race_proofs(const std::vector<VerificationJob>& jobs,
                                   const Deadline& deadline) = 0;
};

class SchedulerVerificationBackend : public VerificationBackend {
public:
    // race_workers <= 0 selects the scheduler's default worker count.
    explicit SchedulerVerificationBackend(Scheduler& scheduler, int race_workers = 0);

    CompilerReport check(const std::string& source, const Deadline& deadline) override;
    RaceRecord race_proofs(const std::vector<VerificationJob>& jobs,
                           const Deadline& deadline) override;

private:
    Scheduler* scheduler_;
    int race_workers_;
    std::optional<CheckerHandle> compile_handle_; // persistent across checks
};

class ScriptedVerificationBackend : public VerificationBackend {
public:
    struct CompileItem {
        std::string source_hash; // empty accepts any source
        CompilerReport report;
    };
    struct RaceItem {
        std::map<std::string, std::string> job_hashes; // tag -> source hash
        RaceRecord record;
        bool check_jobs = false;
    };

    ScriptedVerificationBackend(std::vector<CompileItem> compiles,
                                std::vector<RaceItem> races);

    CompilerReport check(const std::string& source, const Deadline& deadline) override;
    RaceRecord race_proofs(const std::vector<VerificationJob>& jobs,
                           const Deadline& deadline) override;

    size_t compiles_remaining() const { return compiles_.size() - next_compile_; }
    size_t races_remaining() const { return races_.size() - next_race_; }

private:
    std::vector<CompileItem> compiles_;
    std::vector<RaceItem> races_;
    size_t next_compile_ = 0;
    size_t next_race_ = 0;
};

struct ProverBudget {
    int K_p = 4;
    // First wave, raced at zero model cost; empty disables it.
    std::vector<std::string> builtin_tactics{"norm_num", "simp", "omega", "decide"};
};

struct ProverConfig {
    bool use_prover_model = true; // false: builtin tactics are the only wave
    double proof_timeout = -1.0;  // per job; < 0 selects the checker default
};

struct ProveResult {
    RaceRecord record;      // the deciding wave's record
    int model_samples = 0;  // prover-model calls actually made
    bool goal_only = false; // negation unsupported for this statement
};

class Prover {
public:
    Prover(const BackendSet& backends, const PromptCatalog& catalog,
           ProverConfig config = {});

    // Two waves: builtin tactics first (zero model calls), then K_p prover
    // samples per polarity raced together. Emits one race trace event per
    // raced wave.
    ProveResult prove(const FormalStatement& statement, const ProverBudget& budget,
                      VerificationBackend& verifier, CallContext& ctx) const;

private:
    const BackendSet* backends_;
    const PromptCatalog* catalog_;
    ProverConfig config_;
};

// Rule layer of the pre-screen: text with no digit and no mathematical
// symbol is not formalizable, with no judge call spent on it.
bool prescreen_rule_mathy(const std::string& text);

// Rule layer plus judge confirmation. The judge fails open: an unparseable
// reply lets the step proceed to translation.
bool prescreen_formalizable(const BackendSet& backends, const PromptCatalog& catalog,
                            const std::string& step_text, CallContext& ctx);

struct StepVerdict {
    Verdict verdict = Verdict::verification_failure;
    std::string evidence;  // winning or refuting proof source
    std::string diagnosis; // set for the failure verdicts
    std::optional<FormalStatement> statement;
    UsageRecord usage; // this step's delta
    int translation_attempts = 0;
    int model_samples = 0;
    std::string memory_entry_id; // set when the step was recorded
};

// Agent-facing seam so episodes can run against a scripted verifier.
class StepVerifier {
public:
    virtual ~StepVerifier() = default;
    virtual StepVerdict verify_step(const ProofStep& step, CallContext& ctx) = 0;
};

struct VerifyConfig {
    TranslationBudget translation;
    ProverBudget prover;
    int memory_k = 3;
    bool use_memory = true;
    std::string default_header; // for candidates that bring no imports
};

// The full verification pipeline: pre-screen, memory retrieval,
// autoformalization, proof race, verdict mapping, memory write-back on
// CORRECT. Checker failures become VERIFICATION FAILURE verdicts;
// model-backend failures propagate.
class PipelineVerifier : public StepVerifier {
public:
    PipelineVerifier(const BackendSet& backends, const PromptCatalog& catalog,
                     MemoryStore& memory, VerificationBackend& verifier,
                     ProverConfig prover_config = {}, VerifyConfig config = {});

    StepVerdict verify_step(const ProofStep& step, CallContext& ctx) override;

    MemoryStore& memory() { return *memory_; }

private:
    const BackendSet* backends_;
    const PromptCatalog* catalog_;
    MemoryStore* memory_;
    VerificationBackend* verifier_;
    Translator translator_;
    Prover prover_;
    VerifyConfig config_;
};

} // namespace hermes
