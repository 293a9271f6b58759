#include "hermes/harness.hpp"

#include "hermes/errors.hpp"
#include "hermes/util.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

using json = nlohmann::json;

namespace hermes {

std::vector<Problem> load_dataset(const std::string& path, bool permissive) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open dataset: " + path);

    std::vector<Problem> problems;
    std::map<std::string, int> seen; // id -> first line
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& what) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            if (permissive) continue;
            fail("not a JSON object");
        }
        auto field = [&](const char* name, bool required) -> std::optional<std::string> {
            if (!j.contains(name)) {
                if (required && !permissive) fail(std::string("missing field \"") + name + "\"");
                return required ? std::optional<std::string>() : std::optional<std::string>("");
            }
            if (!j[name].is_string()) {
                if (!permissive) fail(std::string("field \"") + name + "\" must be a string");
                return std::nullopt;
            }
            return j[name].get<std::string>();
        };
        auto id = field("id", true);
        auto statement = field("problem", true);
        auto answer = field("answer", true);
        auto subject = field("subject", false);
        if (!id || !statement || !answer || !subject) continue; // permissive skip
        if (id->empty()) {
            if (permissive) continue;
            fail("field \"id\" is empty");
        }
        if (statement->empty()) {
            if (permissive) continue;
            fail("field \"problem\" is empty");
        }
        if (seen.count(*id)) {
            if (permissive) continue;
            fail("duplicate problem id \"" + *id + "\" (first seen on line " +
                 std::to_string(seen[*id]) + ")");
        }
        seen[*id] = line_no;
        problems.push_back(Problem{*id, *statement, *answer, *subject});
    }
    if (problems.empty()) throw EmptyDataset(path + ": no problems in dataset");
    return problems;
}

long long flops_per_token(const ModelCostConfig& cost) {
    return 2 * cost.params + 2 * cost.n_layer * cost.n_ctx * cost.d_attn;
}

FlopsBreakdown estimate_flops(const UsageRecord& usage,
                              const std::map<std::string, ModelCostConfig>& costs) {
    FlopsBreakdown breakdown;
    for (const auto& [role, role_usage] : usage.roles) {
        long long tokens = role_usage.prompt_tokens + role_usage.completion_tokens;
        auto it = costs.find(role);
        if (it == costs.end()) {
            if (tokens > 0) breakdown.uncosted_roles.push_back(role);
            continue;
        }
        long long flops = tokens * flops_per_token(it->second);
        breakdown.role_flops[role] = flops;
        breakdown.total += flops;
    }
    return breakdown;
}

std::string majority_vote(const std::vector<std::string>& answers) {
    struct Group {
        std::string original;
        int count = 0;
        size_t first = 0;
    };
    std::map<std::string, Group> groups;
    size_t index = 0;
    for (const auto& answer : answers) {
        if (trim(answer).empty()) {
            ++index;
            continue;
        }
        std::string key = canonicalize_answer(answer);
        auto [it, fresh] = groups.emplace(key, Group{answer, 0, index});
        ++it->second.count;
        ++index;
    }
    const Group* best = nullptr;
    for (const auto& [key, group] : groups) {
        if (!best || group.count > best->count ||
            (group.count == best->count && group.first < best->first)) {
            best = &group;
        }
    }
    return best ? best->original : "";
}

json usage_to_json(const UsageRecord& usage) {
    json roles = json::object();
    for (const auto& [name, role] : usage.roles) {
        roles[name] = {{"calls", role.calls},
                       {"prompt_tokens", role.prompt_tokens},
                       {"completion_tokens", role.completion_tokens},
                       {"estimated", role.estimated}};
    }
    return {{"roles", roles},
            {"checker_seconds", usage.checker_seconds},
            {"checker_requests", usage.checker_requests}};
}

UsageRecord usage_from_json(const json& j) {
    UsageRecord usage;
    if (!j.is_object()) return usage;
    json roles = j.value("roles", json::object());
    for (const auto& [name, role] : roles.items()) {
        if (!role.is_object()) continue;
        RoleUsage r;
        r.calls = role.value("calls", 0LL);
        r.prompt_tokens = role.value("prompt_tokens", 0LL);
        r.completion_tokens = role.value("completion_tokens", 0LL);
        r.estimated = role.value("estimated", false);
        usage.roles[name] = r;
    }
    usage.checker_seconds = j.value("checker_seconds", 0.0);
    usage.checker_requests = j.value("checker_requests", 0LL);
    return usage;
}

namespace {

json counts_to_json(const std::map<std::string, int>& counts) {
    json out = json::object();
    for (const auto& [key, value] : counts) out[key] = value;
    return out;
}

std::map<std::string, int> counts_from_json(const json& j) {
    std::map<std::string, int> counts;
    if (!j.is_object()) return counts;
    for (const auto& [key, value] : j.items()) counts[key] = value.get<int>();
    return counts;
}

} // namespace

json problem_result_to_json(const ProblemResult& result) {
    return {{"problem_id", result.problem_id},
            {"answer", result.answer},
            {"correct", result.correct ? json(*result.correct) : json()},
            {"episodes", result.episode_count},
            {"usage", usage_to_json(result.usage)},
            {"terminations", counts_to_json(result.termination_counts)},
            {"verdicts", counts_to_json(result.verdict_counts)},
            {"wall_seconds", result.wall_seconds}};
}

ProblemResult problem_result_from_json(const json& j) {
    ProblemResult result;
    result.problem_id = j.value("problem_id", "");
    result.answer = j.value("answer", "");
    if (j.contains("correct") && !j["correct"].is_null()) {
        result.correct = j["correct"].get<bool>();
    }
    result.episode_count = j.value("episodes", 0);
    result.usage = usage_from_json(j.value("usage", json::object()));
    result.termination_counts = counts_from_json(j.value("terminations", json::object()));
    result.verdict_counts = counts_from_json(j.value("verdicts", json::object()));
    result.wall_seconds = j.value("wall_seconds", 0.0);
    return result;
}

namespace {

void fold_into_summary(RunSummary& summary, const ProblemResult& result) {
    ++summary.problems;
    if (!result.answer.empty()) ++summary.answered;
    if (result.correct && *result.correct) ++summary.correct;
    summary.usage.merge(result.usage);
    for (const auto& [k, v] : result.termination_counts) summary.termination_counts[k] += v;
    for (const auto& [k, v] : result.verdict_counts) summary.verdict_counts[k] += v;
    summary.wall_seconds += result.wall_seconds;
}

std::map<std::string, ProblemResult> load_results_file(const std::string& path) {
    std::map<std::string, ProblemResult> done;
    std::ifstream probe(path);
    if (!probe) return done;
    probe.close();
    for (auto& row : load_results(path)) done[row.problem_id] = std::move(row);
    return done;
}

} // namespace

std::vector<ProblemResult> load_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open results file: " + path);
    std::vector<ProblemResult> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("problem_id")) {
            throw DatasetError(path + ":" + std::to_string(line_no) +
                               ": unreadable results row; delete the file to start over");
        }
        rows.push_back(problem_result_from_json(j));
    }
    return rows;
}

RunSummary summarize_results(const std::vector<ProblemResult>& results) {
    RunSummary summary;
    for (const auto& row : results) fold_into_summary(summary, row);
    return summary;
}

RunSummary evaluate(const std::vector<Problem>& problems, const RunOptions& options,
                    const EvalHooks& hooks, std::vector<ProblemResult>* results) {
    if (!hooks.run) throw ConfigError("evaluate needs a run hook");
    if (options.samples < 1) throw ConfigError("samples must be >= 1");

    RunSummary summary;
    std::map<std::string, ProblemResult> done;
    if (!options.results_path.empty()) done = load_results_file(options.results_path);

    std::ofstream out;
    if (!options.results_path.empty()) {
        out.open(options.results_path, std::ios::app);
        if (!out) throw DatasetError("cannot open results file: " + options.results_path);
    }

    for (const auto& problem : problems) {
        auto it = done.find(problem.id);
        if (it != done.end()) {
            fold_into_summary(summary, it->second);
            ++summary.resumed;
            if (results) results->push_back(it->second);
            continue;
        }
        ProblemResult row;
        row.problem_id = problem.id;
        std::vector<std::string> answers;
        for (int s = 0; s < options.samples; ++s) {
            EpisodeConfig config = options.episode;
            config.episode_id = options.samples > 1
                                    ? problem.id + "#" + std::to_string(s + 1)
                                    : problem.id;
            EpisodeResult episode = hooks.run(problem, config, s);
            row.usage.merge(episode.usage);
            ++row.termination_counts[termination_reason_name(episode.termination)];
            for (const auto& [k, v] : episode.verdict_counts) row.verdict_counts[k] += v;
            row.wall_seconds += episode.wall_seconds;
            answers.push_back(episode.final_answer);
            row.episodes.push_back(std::move(episode));
        }
        row.episode_count = static_cast<int>(row.episodes.size());
        row.answer = majority_vote(answers);
        if (!problem.answer.empty() && !row.answer.empty()) {
            if (options.samples == 1 && row.episodes[0].correct &&
                row.episodes[0].final_answer == row.answer) {
                row.correct = row.episodes[0].correct;
            } else if (hooks.check) {
                row.correct = hooks.check(problem, row.answer);
            }
        }
        fold_into_summary(summary, row);
        if (out) {
            out << problem_result_to_json(row).dump() << "\n";
            out.flush();
        }
        if (results) results->push_back(std::move(row));
    }
    return summary;
}

json summary_to_json(const RunSummary& summary) {
    json flops;
    if (!summary.flops.empty()) {
        json roles = json::object();
        for (const auto& [role, value] : summary.flops.role_flops) roles[role] = value;
        flops = {{"total", summary.flops.total},
                 {"roles", roles},
                 {"uncosted_roles", summary.flops.uncosted_roles}};
    }
    return {{"problems", summary.problems},
            {"answered", summary.answered},
            {"correct", summary.correct},
            {"resumed", summary.resumed},
            {"usage", usage_to_json(summary.usage)},
            {"terminations", counts_to_json(summary.termination_counts)},
            {"verdicts", counts_to_json(summary.verdict_counts)},
            {"wall_seconds", summary.wall_seconds},
            {"flops", flops}};
}

RunSummary summary_from_json(const json& j) {
    RunSummary summary;
    summary.problems = j.value("problems", 0);
    summary.answered = j.value("answered", 0);
    summary.correct = j.value("correct", 0);
    summary.resumed = j.value("resumed", 0);
    summary.usage = usage_from_json(j.value("usage", json::object()));
    summary.termination_counts = counts_from_json(j.value("terminations", json::object()));
    summary.verdict_counts = counts_from_json(j.value("verdicts", json::object()));
    summary.wall_seconds = j.value("wall_seconds", 0.0);
    if (j.contains("flops") && j["flops"].is_object()) {
        summary.flops.total = j["flops"].value("total", 0LL);
        json flop_roles = j["flops"].value("roles", json::object());
        for (const auto& [role, value] : flop_roles.items()) {
            summary.flops.role_flops[role] = value.get<long long>();
        }
        summary.flops.uncosted_roles =
            j["flops"].value("uncosted_roles", std::vector<std::string>{});
    }
    return summary;
}

namespace {

std::string counts_line(const std::map<std::string, int>& counts) {
    if (counts.empty()) return "-";
    std::string out;
    for (const auto& [key, value] : counts) {
        if (!out.empty()) out += "  ";
        out += key + "=" + std::to_string(value);
    }
    return out;
}

std::string render_table(const RunSummary& summary,
                         const std::vector<ProblemResult>& results) {
    std::ostringstream out;
    if (summary.problems == 0) {
        out << "0 problems: nothing to report (empty run)\n";
        return out.str();
    }
    char pct[32];
    std::snprintf(pct, sizeof(pct), "%.1f%%",
                  100.0 * summary.correct / summary.problems);
    out << "problems     : " << summary.problems << "\n";
    out << "answered     : " << summary.answered << "\n";
    out << "correct      : " << summary.correct << " (" << pct << ")\n";
    if (summary.resumed > 0) out << "resumed      : " << summary.resumed << "\n";
    out << "terminations : " << counts_line(summary.termination_counts) << "\n";
    out << "verdicts     : " << counts_line(summary.verdict_counts) << "\n";
    out << "tokens       :";
    if (summary.usage.roles.empty()) out << " -";
    for (const auto& [role, usage] : summary.usage.roles) {
        out << " " << role << "=" << (usage.prompt_tokens + usage.completion_tokens);
        if (usage.estimated) out << "~";
    }
    out << "\n";
    char checker[64];
    std::snprintf(checker, sizeof(checker), "%lld requests, %.2fs",
                  summary.usage.checker_requests, summary.usage.checker_seconds);
    out << "checker      : " << checker << "\n";
    if (!summary.flops.empty()) {
        out << "flops        : total=" << summary.flops.total;
        for (const auto& [role, value] : summary.flops.role_flops) {
            out << " " << role << "=" << value;
        }
        if (!summary.flops.uncosted_roles.empty()) {
            out << " (uncosted:";
            for (const auto& role : summary.flops.uncosted_roles) out << " " << role;
            out << ")";
        }
        out << "\n";
    }
    char wall[32];
    std::snprintf(wall, sizeof(wall), "%.2fs", summary.wall_seconds);
    out << "wall         : " << wall << "\n";

    if (!results.empty()) {
        size_t id_width = 2;
        for (const auto& row : results) id_width = std::max(id_width, row.problem_id.size());
        out << "\n";
        out << std::string(id_width - 2, ' ') << "id | ok | answer\n";
        for (const auto& row : results) {
            std::string ok = row.correct ? (*row.correct ? "y" : "n") : "?";
            out << std::string(id_width - row.problem_id.size(), ' ')
                << row.problem_id << " | " << ok << "  | " << row.answer << "\n";
        }
    }
    return out.str();
}

} // namespace

std::string render_report(const RunSummary& summary,
                          const std::vector<ProblemResult>& results,
                          const std::string& format) {
    if (format == "table") return render_table(summary, results);
    if (format == "json") {
        json rows = json::array();
        for (const auto& row : results) rows.push_back(problem_result_to_json(row));
        json out{{"summary", summary_to_json(summary)}, {"problems", rows}};
        return out.dump(2) + "\n";
    }
    throw ConfigError("unknown report format: " + format + " (use table or json)");
}

} // namespace hermes
