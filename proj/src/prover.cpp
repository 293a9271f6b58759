#include "hermes/prover.hpp"

#include "hermes/errors.hpp"
#include "hermes/trace.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstring>

using json = nlohmann::json;

namespace hermes {

const char* verdict_token(Verdict verdict) {
    switch (verdict) {
        case Verdict::correct: return "CORRECT";
        case Verdict::incorrect: return "INCORRECT";
        case Verdict::verification_failure: return "VERIFICATION FAILURE";
        case Verdict::no_verification: return "NO VERIFICATION";
    }
    return "VERIFICATION FAILURE";
}

Verdict verdict_from_token(const std::string& token) {
    if (token == "CORRECT") return Verdict::correct;
    if (token == "INCORRECT") return Verdict::incorrect;
    if (token == "VERIFICATION FAILURE") return Verdict::verification_failure;
    if (token == "NO VERIFICATION") return Verdict::no_verification;
    throw Error("unknown verdict token: " + token);
}

Verdict verdict_for(bool formalizable, bool translated, const std::string& polarity) {
    if (!formalizable) return Verdict::no_verification;
    if (!translated) return Verdict::verification_failure;
    if (polarity == "goal") return Verdict::correct;
    if (polarity == "negation") return Verdict::incorrect;
    return Verdict::verification_failure;
}

namespace {

std::string polarity_of_tag(const std::string& tag) {
    return tag.rfind("neg", 0) == 0 ? "negation" : "goal";
}

JobSummary summarize(const JobResult& result, const std::string& source_hash) {
    JobSummary s;
    s.tag = result.tag;
    s.polarity = polarity_of_tag(result.tag);
    s.status = result.status;
    s.proof = result.status == JobStatus::completed ? result.outcome.status
                                                    : ProofStatus::failed;
    s.source_hash = source_hash;
    return s;
}

} // namespace

SchedulerVerificationBackend::SchedulerVerificationBackend(Scheduler& scheduler,
                                                           int race_workers)
    : scheduler_(&scheduler), race_workers_(race_workers) {}

CompilerReport SchedulerVerificationBackend::check(const std::string& source,
                                                   const Deadline& deadline) {
    double timeout = deadline.clamp(scheduler_->checker_config().default_timeout);
    for (int attempt = 0; attempt < 2; ++attempt) {
        if (!compile_handle_ || !compile_handle_->alive()) {
            compile_handle_ = CheckerHandle::start(scheduler_->checker_config());
        }
        try {
            return compile_handle_->check_compiles(source, timeout);
        } catch (const CheckerCrashed&) {
            compile_handle_.reset();
            if (attempt == 1) {
                CompilerReport report;
                report.messages.push_back(
                    {Severity::error, 0, 0, "checker crashed during compile check"});
                return report;
            }
        }
    }
    CompilerReport report; // unreachable
    report.messages.push_back({Severity::error, 0, 0, "checker unavailable"});
    return report;
}

RaceRecord SchedulerVerificationBackend::race_proofs(
    const std::vector<VerificationJob>& jobs, const Deadline& deadline) {
    std::vector<VerificationJob> prepared = jobs;
    double base = scheduler_->checker_config().default_timeout;
    for (auto& job : prepared) {
        job.timeout = deadline.clamp(job.timeout > 0 ? job.timeout : base);
    }
    std::map<std::string, std::string> hashes;
    for (const auto& job : prepared) hashes[job.tag] = fnv1a_hex(job.source);
    std::map<std::string, std::string> sources;
    for (const auto& job : prepared) sources[job.tag] = job.source;

    SchedulerMetrics before = scheduler_->metrics();
    BatchHandle batch = scheduler_->submit_batch(std::move(prepared), race_workers_);
    auto proved = [](const JobResult& r) {
        return r.status == JobStatus::completed &&
               r.outcome.status == ProofStatus::proved;
    };
    std::optional<JobResult> winner = batch.await_first_conclusive(proved);
    std::vector<JobResult> results = batch.results_so_far();
    SchedulerMetrics after = scheduler_->metrics();

    RaceRecord record;
    record.checker_seconds = after.checker_seconds - before.checker_seconds;
    record.checker_requests = after.checker_requests - before.checker_requests;
    for (const auto& r : results) record.jobs.push_back(summarize(r, hashes[r.tag]));
    if (winner) {
        record.winner_polarity = polarity_of_tag(winner->tag);
        record.winner_tag = winner->tag;
        record.winner_source = sources[winner->tag];
        for (const auto& r : results) {
            if (r.tag != winner->tag && proved(r) &&
                polarity_of_tag(r.tag) != record.winner_polarity) {
                record.opposite_late_proof = true;
            }
        }
    }
    return record;
}

ScriptedVerificationBackend::ScriptedVerificationBackend(
    std::vector<CompileItem> compiles, std::vector<RaceItem> races)
    : compiles_(std::move(compiles)), races_(std::move(races)) {}

CompilerReport ScriptedVerificationBackend::check(const std::string& source,
                                                  const Deadline&) {
    if (next_compile_ >= compiles_.size()) {
        throw ScriptExhausted("scripted verifier: out of compile checks after " +
                              std::to_string(compiles_.size()));
    }
    const CompileItem& item = compiles_[next_compile_++];
    if (!item.source_hash.empty() && item.source_hash != fnv1a_hex(source)) {
        throw ScriptMismatch("scripted verifier: compile check " +
                             std::to_string(next_compile_) +
                             " saw an unexpected source (hash " + fnv1a_hex(source) +
                             ", expected " + item.source_hash + ")");
    }
    return item.report;
}

RaceRecord ScriptedVerificationBackend::race_proofs(
    const std::vector<VerificationJob>& jobs, const Deadline&) {
    if (next_race_ >= races_.size()) {
        throw ScriptExhausted("scripted verifier: out of races after " +
                              std::to_string(races_.size()));
    }
    const RaceItem& item = races_[next_race_++];
    if (item.check_jobs) {
        std::map<std::string, std::string> seen;
        for (const auto& job : jobs) seen[job.tag] = fnv1a_hex(job.source);
        if (seen != item.job_hashes) {
            throw ScriptMismatch("scripted verifier: race " +
                                 std::to_string(next_race_) +
                                 " was submitted different jobs than recorded");
        }
    }
    return item.record;
}

Prover::Prover(const BackendSet& backends, const PromptCatalog& catalog,
               ProverConfig config)
    : backends_(&backends), catalog_(&catalog), config_(config) {}

namespace {

void emit_warning(CallContext& ctx, const std::string& context_label,
                  const std::string& text) {
    if (!ctx.trace) return;
    ctx.trace->emit("warning", {{"id", ctx.trace->next_id("w")},
                                {"context", context_label},
                                {"text", text}});
}

void emit_race(CallContext& ctx, const std::string& phase,
               const FormalStatement& statement, int goal_jobs, int neg_jobs,
               const RaceRecord& record) {
    if (!ctx.trace) return;
    json jobs = json::array();
    for (const auto& j : record.jobs) {
        jobs.push_back({{"tag", j.tag},
                        {"polarity", j.polarity},
                        {"status", job_status_name(j.status)},
                        {"proof", proof_status_name(j.proof)},
                        {"source_hash", j.source_hash}});
    }
    ctx.trace->emit("race", {{"id", ctx.trace->next_id("r")},
                             {"phase", phase},
                             {"step_id", statement.origin_step},
                             {"statement", statement.theorem_name},
                             {"goal_jobs", goal_jobs},
                             {"neg_jobs", neg_jobs},
                             {"winner_polarity", record.winner_polarity},
                             {"winner_tag", record.winner_tag},
                             {"winner_source", record.winner_source},
                             {"opposite_late_proof", record.opposite_late_proof},
                             {"jobs", jobs},
                             {"checker_seconds", record.checker_seconds},
                             {"checker_requests", record.checker_requests}});
}

void absorb_race_usage(CallContext& ctx, const RaceRecord& record) {
    if (!ctx.usage) return;
    ctx.usage->checker_seconds += record.checker_seconds;
    ctx.usage->checker_requests += record.checker_requests;
}

} // namespace

ProveResult Prover::prove(const FormalStatement& statement, const ProverBudget& budget,
                          VerificationBackend& verifier, CallContext& ctx) const {
    ProveResult result;
    Deadline deadline = ctx.deadline ? *ctx.deadline : Deadline{};

    std::optional<FormalStatement> negated;
    try {
        negated = negate_statement(statement);
    } catch (const NegationUnsupported& e) {
        result.goal_only = true;
        emit_warning(ctx, "prover",
                     std::string("negation unsupported, proving goal only: ") +
                         e.what());
    }

    auto make_job = [&](const FormalStatement& st, const std::string& tag,
                        const std::string& tactic) -> std::optional<VerificationJob> {
        std::optional<std::string> source = with_proof(st, tactic);
        if (!source) return std::nullopt;
        VerificationJob job;
        job.job_id = tag;
        job.tag = tag;
        job.source = *source;
        job.timeout = config_.proof_timeout;
        return job;
    };

    // Wave 1: builtin tactics, zero model calls.
    if (!budget.builtin_tactics.empty()) {
        std::vector<VerificationJob> jobs;
        int goal_jobs = 0;
        int neg_jobs = 0;
        for (size_t i = 0; i < budget.builtin_tactics.size(); ++i) {
            const std::string& tactic = budget.builtin_tactics[i];
            std::string suffix = std::to_string(i + 1);
            if (auto job = make_job(statement, "goal-builtin-" + suffix, tactic)) {
                jobs.push_back(std::move(*job));
                ++goal_jobs;
            }
            if (negated) {
                if (auto job = make_job(*negated, "neg-builtin-" + suffix, tactic)) {
                    jobs.push_back(std::move(*job));
                    ++neg_jobs;
                }
            }
        }
        if (!jobs.empty()) {
            RaceRecord record = verifier.race_proofs(jobs, deadline);
            emit_race(ctx, "builtin", statement, goal_jobs, neg_jobs, record);
            absorb_race_usage(ctx, record);
            if (record.opposite_late_proof) {
                emit_warning(ctx, "prover",
                             "both the goal and its negation produced proofs; "
                             "keeping the first arrival for " + statement.theorem_name);
            }
            if (record.proved()) {
                result.record = std::move(record);
                return result;
            }
            result.record = std::move(record);
        }
    }

    // Wave 2: K_p prover samples per polarity, raced together.
    if (!config_.use_prover_model) return result;

    const std::string prompt_key = catalog_->prove_key(backends_->prover->profile().model);
    auto sample_proofs = [&](const FormalStatement& st, const std::string& prefix)
        -> std::vector<VerificationJob> {
        std::vector<VerificationJob> jobs;
        std::string prompt = catalog_->render(
            prompt_key, {{"header", st.header}, {"body", st.body}});
        for (int k = 1; k <= budget.K_p; ++k) {
            ChatMessage msg;
            msg.role = "user";
            msg.content = prompt;
            ChatReply reply = traced_chat(*backends_, Role::prover, {msg}, {}, ctx,
                                          ++result.model_samples);
            std::string tag = prefix + std::to_string(k);
            auto candidate = Translator::extract_candidate(reply.content);
            if (!candidate) {
                emit_warning(ctx, "prover", tag + ": reply contained no proof code");
                continue;
            }
            auto parts = parse_theorem(candidate->second);
            if (!parts) {
                emit_warning(ctx, "prover", tag + ": proof candidate is unparseable");
                continue;
            }
            auto ours = parse_theorem(st.body);
            if (!ours) {
                emit_warning(ctx, "prover", tag + ": statement body is unparseable");
                continue;
            }
            if (normalize_whitespace(parts->goal) != normalize_whitespace(ours->goal)) {
                emit_warning(ctx, "prover", tag + ": proof targets a different statement");
                continue;
            }
            if (trim(parts->proof).empty() || trim(parts->proof) == "sorry") {
                emit_warning(ctx, "prover", tag + ": proof candidate is a placeholder");
                continue;
            }
            // Re-house the model's proof in our statement so the race can
            // only ever certify the translated claim.
            TheoremParts housed = *ours;
            housed.proof = parts->proof;
            VerificationJob job;
            job.job_id = tag;
            job.tag = tag;
            job.source = st.header.empty() ? render_theorem(housed)
                                           : st.header + "\n\n" + render_theorem(housed);
            job.timeout = config_.proof_timeout;
            jobs.push_back(std::move(job));
        }
        return jobs;
    };

    std::vector<VerificationJob> jobs = sample_proofs(statement, "goal-sample-");
    int goal_jobs = static_cast<int>(jobs.size());
    int neg_jobs = 0;
    if (negated) {
        std::vector<VerificationJob> neg = sample_proofs(*negated, "neg-sample-");
        neg_jobs = static_cast<int>(neg.size());
        for (auto& job : neg) jobs.push_back(std::move(job));
    }
    if (jobs.empty()) {
        emit_warning(ctx, "prover", "no usable proof sample for " + statement.theorem_name);
        return result;
    }
    RaceRecord record = verifier.race_proofs(jobs, deadline);
    emit_race(ctx, "model", statement, goal_jobs, neg_jobs, record);
    absorb_race_usage(ctx, record);
    if (record.opposite_late_proof) {
        emit_warning(ctx, "prover",
                     "both the goal and its negation produced proofs; "
                     "keeping the first arrival for " + statement.theorem_name);
    }
    result.record = std::move(record);
    return result;
}

bool prescreen_rule_mathy(const std::string& text) {
    std::string t = trim(text);
    if (t.empty()) return false;
    for (char c : t) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::isdigit(u)) return true;
        if (std::strchr("+=*/^<>%\\", c)) return true;
    }
    static const char* kGlyphs[] = {"∀", "∃", "∑", "∏", "∫", "√",
                                    "≤", "≥", "≠", "≈", "π", "¬"};
    for (const char* g : kGlyphs) {
        if (t.find(g) != std::string::npos) return true;
    }
    return false;
}

bool prescreen_formalizable(const BackendSet& backends, const PromptCatalog& catalog,
                            const std::string& step_text, CallContext& ctx) {
    if (!prescreen_rule_mathy(step_text)) return false;
    std::string prompt = catalog.render("prescreen_judge", {{"step", step_text}});
    // Fail open: only an explicit False stops the pipeline here.
    return ask_true_false(backends, Role::judge, prompt, ctx).value_or(true);
}

PipelineVerifier::PipelineVerifier(const BackendSet& backends,
                                   const PromptCatalog& catalog, MemoryStore& memory,
                                   VerificationBackend& verifier,
                                   ProverConfig prover_config, VerifyConfig config)
    : backends_(&backends),
      catalog_(&catalog),
      memory_(&memory),
      verifier_(&verifier),
      translator_(backends, catalog, TranslatorConfig{config.default_header}),
      prover_(backends, catalog, prover_config),
      config_(std::move(config)) {}

StepVerdict PipelineVerifier::verify_step(const ProofStep& step, CallContext& ctx) {
    StepVerdict verdict;
    UsageRecord local;
    CallContext sub{ctx.trace, &local, ctx.deadline};

    auto checker_down = [&](const std::string& what) {
        verdict.verdict = Verdict::verification_failure;
        verdict.diagnosis = "checker unavailable: " + what;
    };

    try {
        bool formalizable = prescreen_formalizable(*backends_, *catalog_, step.text, sub);
        if (!formalizable) {
            verdict.verdict = verdict_for(false, false, "");
            verdict.diagnosis = "step is not formalizable";
        } else {
            std::vector<MemoryEntry> context;
            if (config_.use_memory && config_.memory_k > 0) {
                RetrievalRequest request;
                request.query_text = step.text;
                request.k = config_.memory_k;
                request.episode_id = step.episode_id;
                context = memory_->retrieve(*backends_, sub, request);
            }
            TranslationOutcome translated = translator_.formalize_step(
                step, context, config_.translation, *verifier_, sub);
            verdict.translation_attempts = translated.attempts_used;
            if (!translated.statement) {
                verdict.verdict = verdict_for(true, false, "");
                verdict.diagnosis =
                    "translation failed after " +
                    std::to_string(translated.attempts_used) + " attempts (" +
                    std::to_string(translated.failure.compile_failed) +
                    " compile failures, " +
                    std::to_string(translated.failure.not_equivalent) +
                    " equivalence rejections): " + translated.failure.last_diagnostic;
            } else {
                verdict.statement = translated.statement;
                ProveResult proved = prover_.prove(*translated.statement,
                                                   config_.prover, *verifier_, sub);
                verdict.model_samples = proved.model_samples;
                verdict.verdict =
                    verdict_for(true, true, proved.record.winner_polarity);
                if (verdict.verdict == Verdict::correct ||
                    verdict.verdict == Verdict::incorrect) {
                    verdict.evidence = proved.record.winner_source;
                } else {
                    verdict.diagnosis =
                        proved.goal_only
                            ? "no proof found for the statement (negation unsupported)"
                            : "no proof found for the statement or its negation "
                              "within budget";
                }
                if (verdict.verdict == Verdict::correct && config_.use_memory) {
                    auto view = goal_view(*translated.statement);
                    if (view) {
                        verdict.memory_entry_id = memory_->record(
                            *backends_, sub, step.episode_id, step.text,
                            universal_closure(*view), view->binders);
                        if (sub.trace) {
                            sub.trace->emit(
                                "memory_record",
                                {{"id", sub.trace->next_id("m")},
                                 {"entry_id", verdict.memory_entry_id},
                                 {"episode_id", step.episode_id},
                                 {"step_id", step.step_id},
                                 {"proposition", universal_closure(*view)}});
                        }
                    }
                }
            }
        }
    } catch (const SpawnFailure& e) {
        checker_down(e.what());
    } catch (const PoolExhausted& e) {
        checker_down(e.what());
    } catch (const HandshakeTimeout& e) {
        checker_down(e.what());
    } catch (const CheckerCrashed& e) {
        checker_down(e.what());
    }

    if (ctx.trace) {
        json statement_json;
        if (verdict.statement) {
            statement_json = {{"header", verdict.statement->header},
                              {"body", verdict.statement->body},
                              {"theorem_name", verdict.statement->theorem_name},
                              {"injected_hypotheses", verdict.statement->injected_hypotheses},
                              {"backtranslation", verdict.statement->backtranslation}};
        }
        json roles = json::object();
        for (const auto& [name, usage] : local.roles) {
            roles[name] = {{"calls", usage.calls},
                           {"prompt_tokens", usage.prompt_tokens},
                           {"completion_tokens", usage.completion_tokens},
                           {"estimated", usage.estimated}};
        }
        ctx.trace->emit("verdict",
                        {{"id", ctx.trace->next_id("v")},
                         {"step_id", step.step_id},
                         {"label", verdict_token(verdict.verdict)},
                         {"evidence", verdict.evidence},
                         {"diagnosis", verdict.diagnosis},
                         {"statement", statement_json},
                         {"translation_attempts", verdict.translation_attempts},
                         {"model_samples", verdict.model_samples},
                         {"memory_entry_id", verdict.memory_entry_id},
                         {"roles", roles},
                         {"checker_seconds", local.checker_seconds},
                         {"checker_requests", local.checker_requests}});
    }
    if (ctx.usage) ctx.usage->merge(local);
    verdict.usage = std::move(local);
    return verdict;
}

} // namespace hermes
