#include "hermes/translator.hpp"

#include "hermes/errors.hpp"
#include "hermes/trace.hpp"

#include <nlohmann/json.hpp>

using json = nlohmann::json;

namespace hermes {
namespace {

bool at_word(const std::string& text, size_t pos, const std::string& word) {
    if (text.compare(pos, word.size(), word) != 0) return false;
    if (pos > 0 && (std::isalnum(static_cast<unsigned char>(text[pos - 1])) || text[pos - 1] == '_'))
        return false;
    size_t end = pos + word.size();
    return end >= text.size() || std::isspace(static_cast<unsigned char>(text[end]));
}

size_t find_keyword(const std::string& text) {
    for (size_t i = 0; i < text.size(); ++i) {
        if (at_word(text, i, "theorem") || at_word(text, i, "lemma")) return i;
    }
    return std::string::npos;
}

// Fenced blocks in reply order: the contents between ``` pairs, with an
// optional language token after the opening fence.
std::vector<std::string> fenced_blocks(const std::string& reply) {
    std::vector<std::string> blocks;
    size_t pos = 0;
    while (true) {
        size_t open = reply.find("```", pos);
        if (open == std::string::npos) break;
        size_t body_start = reply.find('\n', open);
        if (body_start == std::string::npos) break;
        ++body_start;
        size_t close = reply.find("```", body_start);
        if (close == std::string::npos) break;
        blocks.push_back(reply.substr(body_start, close - body_start));
        pos = close + 3;
    }
    return blocks;
}

} // namespace

std::optional<std::pair<std::string, std::string>> Translator::extract_candidate(
    const std::string& reply) {
    std::vector<std::string> blocks = fenced_blocks(reply);
    std::string code;
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
        if (find_keyword(*it) != std::string::npos) {
            code = *it;
            break;
        }
    }
    if (code.empty()) {
        if (!blocks.empty()) return std::nullopt; // fenced code, none declarative
        code = reply;
    }
    size_t split = find_keyword(code);
    if (split == std::string::npos) return std::nullopt;
    std::string header = trim(code.substr(0, split));
    std::string body = trim(code.substr(split));
    return std::make_pair(header, body);
}

Translator::Translator(const BackendSet& backends, const PromptCatalog& catalog,
                       TranslatorConfig config)
    : backends_(&backends), catalog_(&catalog), config_(std::move(config)) {}

std::string Translator::backtranslate(const FormalStatement& statement,
                                      CallContext& ctx) const {
    std::string prompt =
        catalog_->render("backtranslate", {{"statement", statement.body}});
    ChatMessage msg;
    msg.role = "user";
    msg.content = prompt;
    ChatReply reply = traced_chat(*backends_, Role::judge, {msg}, {}, ctx);
    return trim(reply.content);
}

std::optional<bool> ask_true_false(const BackendSet& backends, Role role,
                                   const std::string& prompt, CallContext& ctx) {
    std::vector<ChatMessage> turns;
    ChatMessage ask;
    ask.role = "user";
    ask.content = prompt;
    turns.push_back(ask);
    for (int round = 0; round < 2; ++round) {
        ChatReply reply = traced_chat(backends, role, turns, {}, ctx);
        std::string norm = lowercase(trim(reply.content));
        if (norm == "true") return true;
        if (norm == "false") return false;
        ChatMessage echo;
        echo.role = "assistant";
        echo.content = reply.content;
        turns.push_back(echo);
        ChatMessage nudge;
        nudge.role = "user";
        nudge.content = "Answer with exactly one word: True or False.";
        turns.push_back(nudge);
    }
    return std::nullopt;
}

bool Translator::judge_equivalence(const std::string& original,
                                   const std::string& backtranslated,
                                   CallContext& ctx) const {
    std::string prompt = catalog_->render(
        "equivalence_judge",
        {{"original", original}, {"backtranslation", backtranslated}});
    // Fail closed: an unparseable judge counts as not equivalent.
    return ask_true_false(*backends_, Role::judge, prompt, ctx).value_or(false);
}

TranslationOutcome Translator::formalize_step(const ProofStep& step,
                                              const std::vector<MemoryEntry>& context,
                                              const TranslationBudget& budget,
                                              CompileChecker& checker,
                                              CallContext& ctx) const {
    TranslationOutcome out;

    std::string question = step.text;
    if (!context.empty()) {
        question +=
            "\n\nThe following previously verified facts are available as "
            "hypotheses; mention them only if the step depends on them:";
        for (size_t i = 0; i < context.size(); ++i) {
            question += "\nh_mem_" + std::to_string(i + 1) + " : " +
                        context[i].formal_proposition;
        }
    }
    std::vector<std::pair<std::string, std::string>> facts;
    for (const auto& entry : context) {
        facts.emplace_back(entry.entry_id, entry.formal_proposition);
    }

    const std::string prompt_key = catalog_->autoformalize_key(
        backends_->for_role(Role::autoformalizer).profile().model);
    const std::string prompt = catalog_->render(prompt_key, {{"question", question}});

    for (int attempt = 1; attempt <= budget.K_t; ++attempt) {
        out.attempts_used = attempt;
        ChatMessage msg;
        msg.role = "user";
        msg.content = prompt;
        ChatReply reply =
            traced_chat(*backends_, Role::autoformalizer, {msg}, {}, ctx, attempt);

        auto candidate = extract_candidate(reply.content);
        if (!candidate) {
            ++out.failure.compile_failed;
            out.failure.last_diagnostic = "reply contained no theorem candidate";
            continue;
        }
        auto parts = parse_theorem(candidate->second);
        if (!parts) {
            ++out.failure.compile_failed;
            out.failure.last_diagnostic = "candidate declaration is unparseable";
            continue;
        }
        parts->proof = "sorry";

        FormalStatement statement;
        statement.header = candidate->first.empty() ? config_.default_header
                                                    : candidate->first;
        statement.body = render_theorem(*parts);
        statement.theorem_name = parts->name;
        statement.origin_step = step.step_id;
        statement = inject_hypotheses(std::move(statement), facts);

        CompilerReport report = checker.check(
            statement.full_source(), ctx.deadline ? *ctx.deadline : Deadline{});
        if (ctx.trace) {
            json messages = json::array();
            for (const auto& m : report.messages) {
                messages.push_back({{"severity", severity_name(m.severity)},
                                    {"line", m.line},
                                    {"column", m.column},
                                    {"text", m.text}});
            }
            ctx.trace->emit("compile_check",
                            {{"id", ctx.trace->next_id("c")},
                             {"phase", "translation"},
                             {"attempt", attempt},
                             {"step_id", step.step_id},
                             {"source_hash", fnv1a_hex(statement.full_source())},
                             {"compiles", report.compiles()},
                             {"timed_out", report.timed_out},
                             {"has_sorry", report.has_sorry()},
                             {"messages", messages},
                             {"checker_seconds", report.elapsed}});
        }
        if (ctx.usage) {
            ctx.usage->checker_requests += 1;
            ctx.usage->checker_seconds += report.elapsed;
        }
        if (!report.compiles()) {
            std::string detail = "candidate does not compile";
            for (const auto& m : report.messages) {
                if (m.severity == Severity::error) {
                    detail += ": " + m.text;
                    break;
                }
            }
            ++out.failure.compile_failed;
            out.failure.last_diagnostic =
                report.timed_out ? "compile check timed out" : detail;
            continue;
        }

        std::string back = backtranslate(statement, ctx);
        if (back.empty()) {
            ++out.failure.not_equivalent;
            out.failure.last_diagnostic = "backtranslation came back empty";
            continue;
        }
        if (!judge_equivalence(step.text, back, ctx)) {
            ++out.failure.not_equivalent;
            out.failure.last_diagnostic =
                "backtranslation judged not equivalent to the step";
            continue;
        }

        statement.backtranslation = back;
        statement = rename_theorem(std::move(statement), "step_" + step.step_id);
        out.statement = std::move(statement);
        return out;
    }
    if (out.failure.last_diagnostic.empty()) {
        out.failure.last_diagnostic = "no attempts were made";
    }
    return out;
}

} // namespace hermes
