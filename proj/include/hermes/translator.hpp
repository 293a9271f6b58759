#pragma once

#include "hermes/backends.hpp"
#include "hermes/lean_bridge.hpp"
#include "hermes/memory.hpp"
#include "hermes/prompts.hpp"
#include "hermes/statement.hpp"
#include "hermes/util.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hermes {

struct ProofStep {
    std::string step_id;
    std::string text;
    std::string episode_id;
    int index = 0; // ordinal within the episode
};

struct TranslationBudget {
    int K_t = 4;
};

struct TranslationFailure {
    int compile_failed = 0;  // includes replies with no usable candidate
    int not_equivalent = 0;
    std::string last_diagnostic;
};

struct TranslationOutcome {
    std::optional<FormalStatement> statement;
    int attempts_used = 0;
    TranslationFailure failure; // meaningful when !statement
};

// Compile seam: the translator checks candidates through this interface so
// tests and replay can script reports. The production implementation lives
// with the verification backend.
class CompileChecker {
public:
    virtual ~CompileChecker() = default;
    virtual CompilerReport check(const std::string& source, const Deadline& deadline) = 0;
};

struct TranslatorConfig {
    std::string default_header; // used when a candidate brings no header
};

class Translator {
public:
    Translator(const BackendSet& backends, const PromptCatalog& catalog,
               TranslatorConfig config = {});

    // Samples up to K_t candidates; each must compile and survive the
    // backtranslation equivalence check. Emits one compile_check trace
    // event per checked candidate. Throws BackendUnavailable on backend
    // failure (distinct from a TranslationFailure result).
    TranslationOutcome formalize_step(const ProofStep& step,
                                      const std::vector<MemoryEntry>& context,
                                      const TranslationBudget& budget,
                                      CompileChecker& checker, CallContext& ctx) const;

    std::string backtranslate(const FormalStatement& statement, CallContext& ctx) const;

    // Strict two-token protocol with one re-ask; unparseable counts as
    // not equivalent.
    bool judge_equivalence(const std::string& original, const std::string& backtranslated,
                           CallContext& ctx) const;

    // Pulls (header, body) out of a model reply: last fenced code block
    // containing a theorem/lemma, else the bare reply if it contains one.
    static std::optional<std::pair<std::string, std::string>> extract_candidate(
        const std::string& reply);

private:
    const BackendSet* backends_;
    const PromptCatalog* catalog_;
    TranslatorConfig config_;
};

// Asks role a question whose only valid replies are "True"/"False"
// (case-insensitive, trimmed). One re-ask on anything else; nullopt when
// both replies are unparseable. Callers pick the fail direction.
std::optional<bool> ask_true_false(const BackendSet& backends, Role role,
                                   const std::string& prompt, CallContext& ctx);

} // namespace hermes
