#include "hermes/agent.hpp"

#include "hermes/errors.hpp"
#include "hermes/trace.hpp"
#include "hermes/util.hpp"

#include <nlohmann/json.hpp>

#include <chrono>

using json = nlohmann::json;

namespace hermes {

const char* termination_reason_name(TerminationReason reason) {
    switch (reason) {
        case TerminationReason::answered: return "answered";
        case TerminationReason::token_budget: return "token_budget";
        case TerminationReason::time_limit: return "time_limit";
        case TerminationReason::backend_error: return "backend_error";
    }
    return "backend_error";
}

std::optional<std::string> extract_final_answer(const std::string& text) {
    static const std::string kMarker = "\\boxed{";
    size_t pos = text.rfind(kMarker);
    while (pos != std::string::npos) {
        size_t start = pos + kMarker.size();
        int depth = 1;
        size_t i = start;
        for (; i < text.size() && depth > 0; ++i) {
            if (text[i] == '{') ++depth;
            else if (text[i] == '}') --depth;
        }
        if (depth == 0) return text.substr(start, i - 1 - start);
        if (pos == 0) break; // unbalanced; try an earlier box
        pos = text.rfind(kMarker, pos - 1);
    }
    return std::nullopt;
}

bool check_answer(const BackendSet& backends, const PromptCatalog& catalog,
                  const std::string& question, const std::string& answer,
                  const std::string& ground_truth, CallContext& ctx) {
    if (canonicalize_answer(answer) == canonicalize_answer(ground_truth)) return true;
    std::string prompt = catalog.render("answer_verification",
                                        {{"question", question},
                                         {"answer", answer},
                                         {"ground_truth", ground_truth}});
    // Fail closed: only an explicit True counts as correct.
    return ask_true_false(backends, Role::judge, prompt, ctx).value_or(false);
}

std::string render_tool_result(const PromptCatalog& catalog, Verdict verdict) {
    switch (verdict) {
        case Verdict::correct: return catalog.get("tool_result.correct");
        case Verdict::incorrect: return catalog.get("tool_result.incorrect");
        case Verdict::verification_failure:
            return catalog.get("tool_result.verification_failure");
        case Verdict::no_verification:
            return catalog.get("tool_result.no_verification");
    }
    return catalog.get("tool_result.verification_failure");
}

Agent::Agent(const BackendSet& backends, const PromptCatalog& catalog,
             StepVerifier* verifier)
    : backends_(&backends), catalog_(&catalog), verifier_(verifier) {}

namespace {

json usage_roles_json(const UsageRecord& usage) {
    json roles = json::object();
    for (const auto& [name, role] : usage.roles) {
        roles[name] = {{"calls", role.calls},
                       {"prompt_tokens", role.prompt_tokens},
                       {"completion_tokens", role.completion_tokens},
                       {"estimated", role.estimated}};
    }
    return roles;
}

} // namespace

EpisodeResult Agent::run_episode(const Problem& problem, const EpisodeConfig& config,
                                 TraceRecorder* trace) {
    if (config.tool_enabled && verifier_ == nullptr) {
        throw ConfigError("verification tool enabled but no verifier is wired");
    }
    auto started = std::chrono::steady_clock::now();

    EpisodeResult result;
    result.episode_id = config.episode_id.empty() ? problem.id : config.episode_id;
    result.problem_id = problem.id;

    Deadline deadline = config.wall_clock_limit > 0
                            ? Deadline::after(config.wall_clock_limit)
                            : Deadline{};
    UsageRecord usage;
    CallContext ctx{trace, &usage, &deadline};

    if (trace) {
        json models = json::object();
        auto note = [&](const char* key, const std::shared_ptr<ChatBackend>& b) {
            if (b) models[key] = b->profile().model;
        };
        note("reasoner", backends_->reasoner);
        note("autoformalizer", backends_->autoformalizer);
        note("prover", backends_->prover);
        note("judge", backends_->judge);
        if (backends_->embedder) models["embedder"] = backends_->embedder->profile().model;
        trace->emit("episode_begin", {{"id", trace->next_id("eb")},
                                      {"episode_id", result.episode_id},
                                      {"problem_id", problem.id},
                                      {"problem", problem.statement},
                                      {"ground_truth", problem.answer},
                                      {"subject", problem.subject},
                                      {"token_budget", config.token_budget},
                                      {"wall_clock_limit", config.wall_clock_limit},
                                      {"tool_enabled", config.tool_enabled},
                                      {"max_tool_calls", config.max_tool_calls},
                                      {"models", models}});
    }

    std::vector<ChatMessage> messages;
    ChatMessage system;
    system.role = "system";
    system.content = catalog_->get("reasoner_system");
    messages.push_back(system);
    ChatMessage opening;
    opening.role = "user";
    opening.content = config.tool_enabled
                          ? catalog_->get("tool_instruction") + "\n\n" + problem.statement
                          : problem.statement;
    messages.push_back(opening);

    std::vector<ToolDeclaration> tools;
    if (config.tool_enabled) {
        ToolDeclaration tool;
        tool.name = kVerifyToolName;
        tool.description =
            "Formally verify one self-contained mathematical proof step with Lean 4.";
        tool.parameter_name = "proof_step";
        tool.parameter_description =
            "The proof step to verify, with every hypothesis it relies on stated "
            "explicitly.";
        tools.push_back(tool);
    }
    static const std::vector<ToolDeclaration> kNoTools;

    int step_counter = 0;
    try {
        while (true) {
            if (deadline.expired()) {
                result.termination = TerminationReason::time_limit;
                break;
            }
            if (usage.total_tokens(Role::reasoner) >= config.token_budget) {
                result.termination = TerminationReason::token_budget;
                break;
            }
            bool offer_tool =
                config.tool_enabled && result.tool_calls < config.max_tool_calls;
            ChatReply reply = traced_chat(*backends_, Role::reasoner, messages,
                                          offer_tool ? tools : kNoTools, ctx);

            if (reply.tool_call) {
                ChatMessage turn;
                turn.role = "assistant";
                turn.content = reply.content;
                turn.tool_call = reply.tool_call;
                messages.push_back(turn);

                ++result.tool_calls;
                std::string step_id;
                std::string step_text;
                std::string result_text;
                std::string label;
                json args = json::parse(reply.tool_call->arguments_json, nullptr, false);
                if (!args.is_object() || !args.contains("proof_step") ||
                    !args["proof_step"].is_string()) {
                    result_text =
                        "Malformed tool arguments: pass a JSON object with a single "
                        "string field \"proof_step\". Re-issue the call.";
                    label = "MALFORMED";
                } else {
                    step_text = args["proof_step"].get<std::string>();
                    if (!offer_tool) {
                        // Over the tool budget: the step is skipped, not verified.
                        result_text =
                            render_tool_result(*catalog_, Verdict::no_verification);
                        label = verdict_token(Verdict::no_verification);
                    } else {
                        ++step_counter;
                        step_id = "s" + std::to_string(step_counter);
                        ProofStep step{step_id, step_text, result.episode_id,
                                       step_counter};
                        StepVerdict verdict = verifier_->verify_step(step, ctx);
                        ++result.verdict_counts[verdict_token(verdict.verdict)];
                        result_text = render_tool_result(*catalog_, verdict.verdict);
                        label = verdict_token(verdict.verdict);
                    }
                }
                if (trace) {
                    trace->emit("tool_call", {{"id", trace->next_id("t")},
                                              {"tool_call_id", reply.tool_call->id},
                                              {"step_id", step_id},
                                              {"proof_step", step_text},
                                              {"result", label}});
                }
                ChatMessage tool_msg;
                tool_msg.role = "tool";
                tool_msg.tool_call_id = reply.tool_call->id;
                tool_msg.content = result_text;
                messages.push_back(tool_msg);
                continue;
            }

            ChatMessage turn;
            turn.role = "assistant";
            turn.content = reply.content;
            messages.push_back(turn);
            if (auto boxed = extract_final_answer(reply.content)) {
                result.final_answer = trim(*boxed);
                result.termination = TerminationReason::answered;
                break;
            }
            ChatMessage nudge;
            nudge.role = "user";
            nudge.content =
                "Continue. When you are done, put the final answer in \\boxed{}.";
            messages.push_back(nudge);
        }

        if (result.termination == TerminationReason::answered &&
            !problem.answer.empty()) {
            result.correct = check_answer(*backends_, *catalog_, problem.statement,
                                          result.final_answer, problem.answer, ctx);
        }
    } catch (const BackendUnavailable& e) {
        result.termination = TerminationReason::backend_error;
        if (trace) {
            trace->emit("warning", {{"id", trace->next_id("w")},
                                    {"context", "agent"},
                                    {"text", std::string(e.what())}});
        }
    }

    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    result.usage = usage;

    if (trace) {
        json verdicts = json::object();
        for (const auto& [token, count] : result.verdict_counts) verdicts[token] = count;
        trace->emit("episode_end",
                    {{"id", trace->next_id("ee")},
                     {"episode_id", result.episode_id},
                     {"termination", termination_reason_name(result.termination)},
                     {"final_answer", result.final_answer},
                     {"correct", result.correct ? json(*result.correct) : json()},
                     {"tool_calls", result.tool_calls},
                     {"verdicts", verdicts},
                     {"roles", usage_roles_json(usage)},
                     {"wall_seconds", result.wall_seconds},
                     {"checker_seconds", usage.checker_seconds},
                     {"checker_requests", usage.checker_requests}});
    }
    return result;
}

} // namespace hermes
