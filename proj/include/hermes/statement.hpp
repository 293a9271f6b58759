#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hermes {

// Structural split of a Lean theorem declaration. The parser is purely
// syntactic: it tracks bracket depth to find the binder/goal colon and the
// `:=` that starts the proof, and never tries to elaborate anything.
struct TheoremParts {
    std::string keyword;        // "theorem" or "lemma"
    std::string name;
    std::string binders;        // raw binder text, possibly empty
    std::string goal;
    std::string proof;          // text after ":=", e.g. "by sorry"
};

std::optional<TheoremParts> parse_theorem(const std::string& body);
std::string render_theorem(const TheoremParts& parts);

// A formal statement as produced by the translator: a header (imports and
// options) plus one theorem declaration whose proof is a placeholder.
struct FormalStatement {
    std::string header;
    std::string body;
    std::string theorem_name;
    std::string origin_step;
    std::vector<std::string> injected_hypotheses; // memory entry ids, rank order
    std::string backtranslation;

    std::string full_source() const;
};

// Split of a statement into its binder groups and goal proposition, used to
// store validated steps in memory.
struct GoalView {
    std::vector<std::string> binders; // one string per binder group
    std::string goal;
};

std::optional<GoalView> goal_view(const FormalStatement& statement);

// Standalone proposition for a view: the goal when there are no binders,
// otherwise "∀ <binders>, <goal>".
std::string universal_closure(const GoalView& view);

// Wraps the goal as ¬ (goal), keeping binders untouched, and suffixes the
// theorem name with "_neg". Throws NegationUnsupported when the body does
// not parse.
FormalStatement negate_statement(const FormalStatement& statement);

// Adds one (h_mem_i : P) binder per fact, after existing binders, in the
// given order. Facts are (entry id, proposition text) pairs.
FormalStatement inject_hypotheses(FormalStatement statement,
                                  const std::vector<std::pair<std::string, std::string>>& facts);

FormalStatement rename_theorem(FormalStatement statement, const std::string& new_name);

// Replaces the proof after ":=" (typically the sorry placeholder) with
// "by <tactic>". Throws NegationUnsupported-free: returns nullopt when the
// body does not parse.
std::optional<std::string> with_proof(const FormalStatement& statement, const std::string& proof);

} // namespace hermes
