#include "hermes/statement.hpp"

#include "hermes/errors.hpp"
#include "hermes/util.hpp"

#include <cctype>

namespace hermes {

namespace {

// UTF-8 aware bracket tracking. Lean statements use ASCII brackets plus the
// anonymous-constructor brackets ⟨ ⟩ (e2 9f a8 / e2 9f a9).
bool match_bytes(const std::string& s, size_t pos, const char* bytes, size_t n) {
    return pos + n <= s.size() && s.compare(pos, n, bytes, n) == 0;
}

struct DepthScanner {
    int depth = 0;

    // Consumes the char(s) at pos, returns how many bytes were consumed.
    size_t step(const std::string& s, size_t pos) {
        char c = s[pos];
        if (c == '(' || c == '[' || c == '{') {
            ++depth;
            return 1;
        }
        if (c == ')' || c == ']' || c == '}') {
            --depth;
            return 1;
        }
        if (match_bytes(s, pos, "\xe2\x9f\xa8", 3)) { // ⟨
            ++depth;
            return 3;
        }
        if (match_bytes(s, pos, "\xe2\x9f\xa9", 3)) { // ⟩
            --depth;
            return 3;
        }
        return 1;
    }
};

bool is_ident_boundary(const std::string& s, size_t pos) {
    if (pos == 0 || pos >= s.size()) return true;
    unsigned char c = static_cast<unsigned char>(s[pos]);
    return std::isspace(c) || c == '(' || c == ')' || c == '{' || c == '}' ||
           c == '[' || c == ']' || c == ':' || c == ',';
}

// First occurrence of `word` delimited on both sides.
size_t find_keyword(const std::string& s, const std::string& word) {
    size_t pos = 0;
    while ((pos = s.find(word, pos)) != std::string::npos) {
        bool left_ok = pos == 0 || is_ident_boundary(s, pos - 1) ||
                       std::isspace(static_cast<unsigned char>(s[pos - 1]));
        bool right_ok = is_ident_boundary(s, pos + word.size());
        if (left_ok && right_ok) return pos;
        pos += word.size();
    }
    return std::string::npos;
}

} // namespace

std::optional<TheoremParts> parse_theorem(const std::string& body) {
    size_t kw_pos = find_keyword(body, "theorem");
    std::string keyword = "theorem";
    size_t lemma_pos = find_keyword(body, "lemma");
    if (lemma_pos != std::string::npos &&
        (kw_pos == std::string::npos || lemma_pos < kw_pos)) {
        kw_pos = lemma_pos;
        keyword = "lemma";
    }
    if (kw_pos == std::string::npos) return std::nullopt;

    size_t pos = kw_pos + keyword.size();
    while (pos < body.size() && std::isspace(static_cast<unsigned char>(body[pos]))) ++pos;

    size_t name_start = pos;
    while (pos < body.size()) {
        unsigned char c = static_cast<unsigned char>(body[pos]);
        if (std::isspace(c) || c == '(' || c == '{' || c == '[' || c == ':') break;
        if (match_bytes(body, pos, "\xe2\x9f\xa8", 3)) break;
        ++pos;
    }
    if (pos == name_start) return std::nullopt;
    std::string name = body.substr(name_start, pos - name_start);

    // Scan for the binder/goal separator: the first ':' at depth 0 that is
    // not part of ':='. Colons inside binder groups sit at depth > 0.
    DepthScanner scan;
    size_t colon_pos = std::string::npos;
    size_t i = pos;
    while (i < body.size()) {
        if (scan.depth == 0 && body[i] == ':' &&
            (i + 1 >= body.size() || body[i + 1] != '=')) {
            colon_pos = i;
            break;
        }
        i += scan.step(body, i);
    }
    if (colon_pos == std::string::npos) return std::nullopt;

    std::string binders = trim(body.substr(pos, colon_pos - pos));

    // The proof starts at the first depth-0 ":=" after the separator.
    DepthScanner scan2;
    size_t assign_pos = std::string::npos;
    i = colon_pos + 1;
    while (i < body.size()) {
        if (scan2.depth == 0 && body[i] == ':' && i + 1 < body.size() && body[i + 1] == '=') {
            assign_pos = i;
            break;
        }
        i += scan2.step(body, i);
    }
    if (assign_pos == std::string::npos) return std::nullopt;

    TheoremParts parts;
    parts.keyword = keyword;
    parts.name = name;
    parts.binders = binders;
    parts.goal = trim(body.substr(colon_pos + 1, assign_pos - colon_pos - 1));
    parts.proof = trim(body.substr(assign_pos + 2));
    if (parts.goal.empty()) return std::nullopt;
    return parts;
}

std::string render_theorem(const TheoremParts& parts) {
    std::string out = parts.keyword + " " + parts.name;
    if (!parts.binders.empty()) out += " " + parts.binders;
    out += " : " + parts.goal + " := " + parts.proof;
    return out;
}

std::string FormalStatement::full_source() const {
    if (header.empty()) return body;
    return header + "\n\n" + body;
}

std::optional<GoalView> goal_view(const FormalStatement& statement) {
    auto parts = parse_theorem(statement.body);
    if (!parts) return std::nullopt;

    GoalView view;
    view.goal = parts->goal;

    // Split binder text into groups at depth-0 boundaries between brackets.
    const std::string& b = parts->binders;
    DepthScanner scan;
    size_t group_start = std::string::npos;
    for (size_t i = 0; i < b.size();) {
        int before = scan.depth;
        size_t consumed = scan.step(b, i);
        if (before == 0 && scan.depth == 1) group_start = i;
        if (before == 1 && scan.depth == 0 && group_start != std::string::npos) {
            view.binders.push_back(b.substr(group_start, i + consumed - group_start));
            group_start = std::string::npos;
        }
        i += consumed;
    }
    return view;
}

std::string universal_closure(const GoalView& view) {
    if (view.binders.empty()) return view.goal;
    std::string out = "\xe2\x88\x80 "; // ∀
    for (size_t i = 0; i < view.binders.size(); ++i) {
        if (i > 0) out += ' ';
        out += view.binders[i];
    }
    out += ", " + view.goal;
    return out;
}

FormalStatement negate_statement(const FormalStatement& statement) {
    auto parts = parse_theorem(statement.body);
    if (!parts) {
        throw NegationUnsupported("cannot isolate the goal of: " + statement.body);
    }
    parts->goal = "\xc2\xac (" + parts->goal + ")"; // ¬ (goal)
    parts->name += "_neg";

    FormalStatement negated = statement;
    negated.body = render_theorem(*parts);
    negated.theorem_name = parts->name;
    return negated;
}

FormalStatement inject_hypotheses(FormalStatement statement,
                                  const std::vector<std::pair<std::string, std::string>>& facts) {
    if (facts.empty()) return statement;

    auto parts = parse_theorem(statement.body);
    if (!parts) {
        throw NegationUnsupported("cannot parse statement for hypothesis injection: " +
                                  statement.body);
    }
    size_t rank = 1;
    for (const auto& [entry_id, proposition] : facts) {
        std::string binder = "(h_mem_" + std::to_string(rank) + " : " + proposition + ")";
        parts->binders = parts->binders.empty() ? binder : parts->binders + " " + binder;
        statement.injected_hypotheses.push_back(entry_id);
        ++rank;
    }
    statement.body = render_theorem(*parts);
    return statement;
}

FormalStatement rename_theorem(FormalStatement statement, const std::string& new_name) {
    auto parts = parse_theorem(statement.body);
    if (!parts) return statement;
    parts->name = new_name;
    statement.body = render_theorem(*parts);
    statement.theorem_name = new_name;
    return statement;
}

std::optional<std::string> with_proof(const FormalStatement& statement, const std::string& proof) {
    auto parts = parse_theorem(statement.body);
    if (!parts) return std::nullopt;
    parts->proof = "by " + proof;
    FormalStatement modified = statement;
    modified.body = render_theorem(*parts);
    return modified.full_source();
}

} // namespace hermes
