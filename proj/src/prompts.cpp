#include "hermes/prompts.hpp"

#include "hermes/errors.hpp"
#include "hermes/util.hpp"

#include <nlohmann/json.hpp>

namespace hermes {

namespace {

// The templates below reproduce the published tool instruction, answer
// verification prompt, and per-model autoformalizer/prover prompts; keep
// their wording intact. Placeholders use <angle_bracket> names.

const char* const kToolInstruction =
    "Formally validates a **single** reasoning step using a formal Lean4 "
    "verifier. Invoke this function when facing a step that potentially "
    "involves a hallucination. Make sure to verify **every** critical "
    "mathematical proof step.\n"
    "\n"
    "Args:\n"
    "    proof_step (str): A proof step that includes both the goal to be "
    "proven and the relevant context (e.g., variables, assumptions, and "
    "previously proven statements). Always explicitly specify the relevant "
    "context, such as domains, data types, and any other necessary details. "
    "Make sure to state the proof step in English.\n"
    "\n"
    "Returns:\n"
    "    str: A status string indicating the verification result:\n"
    "        - **CORRECT**: Step verified by Lean 4.\n"
    "        - **INCORRECT**: Step rejected by Lean 4 (e.g., the prover "
    "proved a contradiction or the opposite statement).\n"
    "        - **VERIFICATION FAILURE**: Step could not be verified by Lean "
    "4 (e.g., the prover was unable to prove the statement or find "
    "contradictory arguments)\n"
    "        - **NO VERIFICATION**: Step skipped (e.g., non-formalizable, "
    "non-mathematical, or missing required definitions).\n"
    "\n"
    "Notes:\n"
    "    - Treat **CORRECT** steps as reliable within the given "
    "formalization.\n"
    "    - Treat **INCORRECT** steps as requiring revision; a suggested "
    "correction is returned with this label.\n"
    "    - Use **VERIFICATION FAILURE** to indicate inconclusive or "
    "ill-formed steps that Lean 4 was unable to prove or disprove.\n"
    "    - Use **NO VERIFICATION** for instructional text or incomplete "
    "definitions.";

const char* const kAnswerVerification =
    "Given a question, an answer to that question, and the ground truth for "
    "that question's answer, you need to check if the given answer matches "
    "the ground truth.\n"
    "* If the answer is complete and correct, simply reply with True.\n"
    "* If the given answer does not match the ground truth or is "
    "incomplete, reply with False.\n"
    "* Do **NOT** respond with any other characters.\n"
    "\n"
    "Question:\n"
    "<question>\n"
    "\n"
    "Answer:\n"
    "<answer>\n"
    "\n"
    "Ground Truth:\n"
    "<ground_truth>\n"
    "\n"
    "Does the answer match the ground truth? (True or False):";

const char* const kAutoformalizeDefault =
    "Please autoformalize the following natural language problem statement "
    "in Lean 4. \n"
    "Use the following theorem name: test\n"
    "The natural language statement is:\n"
    "<question>\n"
    "Think before you provide the lean statement.";

const char* const kAutoformalizeKimina =
    "Please autoformalize the following problem in Lean 4 with a header. "
    "Use the following theorem names: my_favorite_theorem.\n"
    "\n"
    "<question>";

const char* const kProveDefault =
    "Complete the following Lean 4 code:\n"
    "\n"
    "```lean4\n"
    "<header>\n"
    "\n"
    "<body>```\n"
    "\n"
    "Before producing the Lean 4 code to formally prove the given theorem, "
    "provide a detailed proof plan outlining the main proof steps and "
    "strategies.\n"
    "The plan should highlight key ideas, intermediate lemmas, and proof "
    "structures that will guide the construction of the final formal proof.";

const char* const kProveKimina =
    "Think about and solve the following problem step by step in Lean 4.\n"
    "# Formal statement:\n"
    "```lean4\n"
    "<header>\n"
    "\n"
    "<body>\n"
    "```";

const char* const kReasonerSystem =
    "You are a careful mathematician solving one problem. Reason step by "
    "step. Verify every critical mathematical proof step with the "
    "verify_one_mathematical_step tool before relying on it, and revise any "
    "step the verifier rejects. When the solution is complete, state the "
    "final answer inside \\boxed{...}.";

const char* const kBacktranslate =
    "Translate the following Lean 4 theorem statement into one plain "
    "English sentence stating exactly what it claims. Mention every "
    "hypothesis. Reply with the sentence only.\n"
    "\n"
    "```lean4\n"
    "<statement>\n"
    "```";

const char* const kEquivalenceJudge =
    "You are checking an autoformalization. Statement A is the original "
    "reasoning step; statement B is an English reading of the formalized "
    "version.\n"
    "* If A and B state the same mathematical claim, reply with True.\n"
    "* If they differ in any mathematical content, reply with False.\n"
    "* Do **NOT** respond with any other characters.\n"
    "\n"
    "Statement A:\n"
    "<original>\n"
    "\n"
    "Statement B:\n"
    "<backtranslation>\n"
    "\n"
    "Are they equivalent? (True or False):";

const char* const kPrescreenJudge =
    "Decide whether the following text states a verifiable mathematical "
    "claim that could be formalized as a theorem (as opposed to commentary, "
    "planning, instructions, or an incomplete definition).\n"
    "* If it states a checkable mathematical claim, reply with True.\n"
    "* Otherwise, reply with False.\n"
    "* Do **NOT** respond with any other characters.\n"
    "\n"
    "Text:\n"
    "<step>\n"
    "\n"
    "Is this a formalizable mathematical claim? (True or False):";

const char* const kResultCorrect =
    "CORRECT: Step verified by Lean 4. Treat this step as reliable within "
    "the given formalization.";

const char* const kResultIncorrect =
    "INCORRECT: Step rejected by Lean 4 (e.g., the prover proved a "
    "contradiction or the opposite statement). This step requires revision.";

const char* const kResultVerificationFailure =
    "VERIFICATION FAILURE: Step could not be verified by Lean 4 (e.g., the "
    "prover was unable to prove the statement or find contradictory "
    "arguments). Treat this step as inconclusive and proceed cautiously.";

const char* const kResultNoVerification =
    "NO VERIFICATION: Step skipped (e.g., non-formalizable, "
    "non-mathematical, or missing required definitions).";

} // namespace

PromptCatalog PromptCatalog::defaults() {
    PromptCatalog c;
    c.templates = {
        {"tool_instruction", kToolInstruction},
        {"answer_verification", kAnswerVerification},
        {"autoformalize.default", kAutoformalizeDefault},
        {"autoformalize.kimina", kAutoformalizeKimina},
        {"prove.default", kProveDefault},
        {"prove.kimina", kProveKimina},
        {"reasoner_system", kReasonerSystem},
        {"backtranslate", kBacktranslate},
        {"equivalence_judge", kEquivalenceJudge},
        {"prescreen_judge", kPrescreenJudge},
        {"tool_result.correct", kResultCorrect},
        {"tool_result.incorrect", kResultIncorrect},
        {"tool_result.verification_failure", kResultVerificationFailure},
        {"tool_result.no_verification", kResultNoVerification},
    };
    return c;
}

PromptCatalog PromptCatalog::with_overrides(const std::string& path) {
    PromptCatalog c = defaults();
    nlohmann::json j = nlohmann::json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ConfigError("prompt override file is not a JSON object: " + path);
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_string()) {
            throw ConfigError("prompt override '" + it.key() + "' is not a string");
        }
        c.templates[it.key()] = it.value().get<std::string>();
    }
    return c;
}

const std::string& PromptCatalog::get(const std::string& key) const {
    auto it = templates.find(key);
    if (it == templates.end()) throw ConfigError("no prompt template: " + key);
    return it->second;
}

bool PromptCatalog::has(const std::string& key) const {
    return templates.find(key) != templates.end();
}

std::string PromptCatalog::render(
    const std::string& key, const std::map<std::string, std::string>& vars) const {
    std::string out = get(key);
    for (const auto& [name, value] : vars) {
        out = replace_all(out, "<" + name + ">", value);
    }
    return out;
}

std::string PromptCatalog::autoformalize_key(const std::string& model_name) const {
    return contains_insensitive(model_name, "kimina") ? "autoformalize.kimina"
                                                      : "autoformalize.default";
}

std::string PromptCatalog::prove_key(const std::string& model_name) const {
    return contains_insensitive(model_name, "kimina") ? "prove.kimina"
                                                      : "prove.default";
}

} // namespace hermes
