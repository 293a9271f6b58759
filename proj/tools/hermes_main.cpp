// Command-line front end: solve one problem, evaluate a dataset, replay a
// recorded trace, or re-render a results file.
//
// Exit codes: 0 success, 1 configuration error, 2 dataset or trace input
// error, 3 replay divergence.

#include "hermes/agent.hpp"
#include "hermes/config.hpp"
#include "hermes/errors.hpp"
#include "hermes/harness.hpp"
#include "hermes/memory.hpp"
#include "hermes/prover.hpp"
#include "hermes/replay.hpp"
#include "hermes/scheduler.hpp"
#include "hermes/trace.hpp"
#include "hermes/util.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>

namespace {

using namespace hermes;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitDiverged = 3;

struct CommonOptions {
    std::string config_path;
    bool quiet = false;
};

// Per-episode machinery behind one verification tool. The memory store
// outlives episodes on purpose: facts proved early in a run are offered
// as hypotheses later.
struct VerifierStack {
    std::optional<Scheduler> scheduler;
    std::optional<SchedulerVerificationBackend> backend;
    MemoryStore memory;
    std::optional<PipelineVerifier> verifier;

    StepVerifier* wire(const RunConfig& cfg, const BackendSet& set,
                       const PromptCatalog& catalog) {
        if (cfg.checker.executable_path.empty()) {
            throw ConfigError(
                "checker.executable_path is required to run the verification tool "
                "(disable the tool to go without it)");
        }
        SchedulerConfig sched;
        sched.default_workers = resolve_workers(cfg);
        sched.spawn_attempts = cfg.spawn_attempts;
        scheduler.emplace(cfg.checker, sched);
        backend.emplace(*scheduler);
        verifier.emplace(set, catalog, memory, *backend, cfg.prover, cfg.verify);
        return &*verifier;
    }
};

std::string one_line(std::string text, size_t limit) {
    for (char& c : text) {
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    }
    text = normalize_whitespace(text);
    if (text.size() > limit) text = text.substr(0, limit - 3) + "...";
    return text;
}

void stream_events(TraceRecorder& trace, bool quiet) {
    if (quiet) return;
    trace.set_listener([](const TraceEvent& ev) {
        if (ev.type == "tool_call") {
            std::cout << "  [" << ev.payload.value("step_id", "?") << "] verify: "
                      << one_line(ev.payload.value("proof_step", ""), 90) << "\n";
        } else if (ev.type == "verdict") {
            std::cout << "  [" << ev.payload.value("step_id", "?") << "] "
                      << ev.payload.value("label", "?");
            std::string detail = ev.payload.value("evidence", "");
            if (detail.empty()) detail = ev.payload.value("diagnosis", "");
            if (!detail.empty()) std::cout << ": " << one_line(detail, 80);
            std::cout << "\n";
        } else if (ev.type == "warning") {
            std::cout << "  warning (" << ev.payload.value("context", "?")
                      << "): " << one_line(ev.payload.value("text", ""), 100) << "\n";
        }
        std::cout.flush();
    });
}

void print_episode(const EpisodeResult& r, const FlopsBreakdown& flops) {
    std::cout << "answer      : " << (r.final_answer.empty() ? "(none)" : r.final_answer)
              << "\n";
    if (r.correct) std::cout << "correct     : " << (*r.correct ? "yes" : "no") << "\n";
    std::cout << "termination : " << termination_reason_name(r.termination) << "\n";
    std::cout << "tool calls  : " << r.tool_calls << "\n";
    if (!r.verdict_counts.empty()) {
        std::cout << "verdicts    :";
        for (const auto& [label, n] : r.verdict_counts)
            std::cout << " " << label << "=" << n;
        std::cout << "\n";
    }
    std::cout << "tokens      : " << r.usage.total_tokens() << "\n";
    if (r.usage.checker_requests > 0)
        std::cout << "checker     : " << r.usage.checker_requests << " requests\n";
    if (!flops.empty()) std::cout << "flops       : " << flops.total << "\n";
}

Problem pick_problem(const std::string& dataset, const std::string& id,
                     const std::string& text, const std::string& answer) {
    if (!text.empty()) {
        Problem p;
        p.id = id.empty() ? "adhoc" : id;
        p.statement = text;
        p.answer = answer;
        return p;
    }
    if (dataset.empty())
        throw ConfigError("pass --problem TEXT or --dataset PATH (with --id)");
    std::vector<Problem> problems = load_dataset(dataset);
    if (id.empty()) {
        if (problems.size() > 1)
            throw ConfigError("dataset has " + std::to_string(problems.size()) +
                              " problems; pick one with --id");
        return problems.front();
    }
    for (auto& p : problems) {
        if (p.id == id) return p;
    }
    throw DatasetError("no problem with id \"" + id + "\" in " + dataset);
}

int run_solve(const CommonOptions& common, const std::string& dataset,
              const std::string& id, const std::string& text, const std::string& answer,
              const std::string& trace_out, long long token_budget, double wall_clock,
              bool no_tool, int max_tool_calls) {
    RunConfig cfg = load_run_config(common.config_path);
    PromptCatalog catalog = load_prompts(cfg);
    BackendSet set = build_backends(cfg);

    Problem problem = pick_problem(dataset, id, text, answer);
    EpisodeConfig episode = cfg.episode;
    episode.episode_id = problem.id;
    if (token_budget > 0) episode.token_budget = token_budget;
    if (wall_clock > 0) episode.wall_clock_limit = wall_clock;
    if (no_tool) episode.tool_enabled = false;
    if (max_tool_calls >= 0) episode.max_tool_calls = max_tool_calls;

    VerifierStack stack;
    StepVerifier* verifier =
        episode.tool_enabled ? stack.wire(cfg, set, catalog) : nullptr;
    Agent agent(set, catalog, verifier);

    TraceRecorder trace;
    stream_events(trace, common.quiet);
    emit_run_config(trace, cfg.verify, cfg.prover);
    if (!common.quiet)
        std::cout << "solving " << problem.id << ": " << one_line(problem.statement, 90)
                  << "\n";
    EpisodeResult result = agent.run_episode(problem, episode, &trace);
    if (!trace_out.empty()) {
        trace.save(trace_out);
        if (!common.quiet) std::cout << "trace saved to " << trace_out << "\n";
    }
    print_episode(result, estimate_flops(result.usage, cfg.costs));
    return kExitOk;
}

int run_eval(const CommonOptions& common, const std::string& dataset,
             const std::string& mode, int samples, const std::string& results_path,
             const std::string& trace_dir, int limit, const std::string& format,
             bool permissive) {
    RunConfig cfg = load_run_config(common.config_path);
    PromptCatalog catalog = load_prompts(cfg);
    BackendSet set = build_backends(cfg);

    std::vector<Problem> problems = load_dataset(dataset, permissive);
    if (limit > 0 && static_cast<int>(problems.size()) > limit)
        problems.resize(static_cast<size_t>(limit));

    RunOptions options;
    options.mode = mode;
    options.samples = samples;
    options.episode = cfg.episode;
    options.results_path = results_path;
    if (mode == "zscot") {
        options.episode.tool_enabled = false;
    } else if (mode != "hermes") {
        throw ConfigError("mode must be \"hermes\" or \"zscot\"");
    }

    VerifierStack stack;
    StepVerifier* verifier = options.episode.tool_enabled
                                 ? stack.wire(cfg, set, catalog)
                                 : nullptr;
    Agent agent(set, catalog, verifier);
    if (!trace_dir.empty()) std::filesystem::create_directories(trace_dir);

    UsageRecord check_usage;
    EvalHooks hooks;
    hooks.run = [&](const Problem& problem, const EpisodeConfig& episode, int) {
        std::optional<TraceRecorder> rec;
        if (!trace_dir.empty()) {
            rec.emplace();
            emit_run_config(*rec, cfg.verify, cfg.prover);
        }
        if (!common.quiet)
            std::cout << "episode " << episode.episode_id << "\n" << std::flush;
        EpisodeResult r = agent.run_episode(problem, episode, rec ? &*rec : nullptr);
        if (rec) {
            std::string name = episode.episode_id;
            for (char& c : name) {
                if (c == '/' || c == '\\' || c == '#') c = '_';
            }
            rec->save(trace_dir + "/" + name + ".trace.jsonl");
        }
        if (!common.quiet)
            std::cout << "  -> " << (r.final_answer.empty() ? "(none)" : r.final_answer)
                      << " [" << termination_reason_name(r.termination) << "]\n"
                      << std::flush;
        return r;
    };
    hooks.check = [&](const Problem& problem, const std::string& answer) {
        CallContext ctx{nullptr, &check_usage, nullptr};
        return check_answer(set, catalog, problem.statement, answer, problem.answer, ctx);
    };

    std::vector<ProblemResult> rows;
    RunSummary summary = evaluate(problems, options, hooks, &rows);
    summary.usage.merge(check_usage);
    summary.flops = estimate_flops(summary.usage, cfg.costs);
    std::cout << render_report(summary, rows, format);
    return kExitOk;
}

int run_replay(const CommonOptions& common, const std::string& trace_path) {
    PromptCatalog catalog = common.config_path.empty()
                                ? PromptCatalog::defaults()
                                : load_prompts(load_run_config(common.config_path));
    ReplayReport report;
    try {
        report = replay_trace(trace_path, catalog);
    } catch (const DatasetError&) {
        throw;
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        // Unreadable trace files are input errors, same as bad datasets.
        throw DatasetError(e.what());
    }
    if (report.matched) {
        std::cout << "replay matched: " << trace_path << "\n";
        print_episode(report.result, FlopsBreakdown{});
        return kExitOk;
    }
    std::cerr << "replay diverged: " << report.message << "\n";
    return kExitDiverged;
}

int run_report(const CommonOptions& common, const std::string& results_path,
               const std::string& format) {
    std::vector<ProblemResult> rows = load_results(results_path);
    RunSummary summary = summarize_results(rows);
    if (!common.config_path.empty()) {
        RunConfig cfg = load_run_config(common.config_path);
        summary.flops = estimate_flops(summary.usage, cfg.costs);
    }
    std::cout << render_report(summary, rows, format);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Verified-reasoning agent: interleaves a tool-calling LLM with "
                 "formal checking of its proof steps"};
    app.require_subcommand(1);

    CommonOptions common;

    auto* solve = app.add_subcommand("solve", "Run one problem end to end");
    std::string solve_dataset, solve_id, solve_text, solve_answer, solve_trace;
    long long solve_budget = 0;
    double solve_wall = 0;
    bool solve_no_tool = false;
    int solve_max_tools = -1;
    solve->add_option("--config", common.config_path, "Run configuration JSON")
        ->required();
    solve->add_option("--dataset", solve_dataset, "Dataset JSONL to pick from");
    solve->add_option("--id", solve_id, "Problem id within the dataset");
    solve->add_option("--problem", solve_text, "Problem statement given inline");
    solve->add_option("--answer", solve_answer, "Ground truth for an inline problem");
    solve->add_option("--trace", solve_trace, "Write the episode trace here");
    solve->add_option("--token-budget", solve_budget, "Override the reasoner token budget");
    solve->add_option("--wall-clock", solve_wall, "Override the wall clock limit, seconds");
    solve->add_flag("--no-tool", solve_no_tool, "Disable the verification tool");
    solve->add_option("--max-tool-calls", solve_max_tools, "Override the tool call cap");
    solve->add_flag("--quiet", common.quiet, "No streaming output");

    auto* eval = app.add_subcommand("eval", "Evaluate a dataset");
    std::string eval_dataset, eval_mode = "hermes", eval_results, eval_trace_dir;
    std::string eval_format = "table";
    int eval_samples = 1, eval_limit = 0;
    bool eval_permissive = false;
    eval->add_option("--config", common.config_path, "Run configuration JSON")->required();
    eval->add_option("--dataset", eval_dataset, "Dataset JSONL")->required();
    eval->add_option("--mode", eval_mode, "hermes (tool on) or zscot (tool off)");
    eval->add_option("--samples", eval_samples, "Episodes per problem, majority voted");
    eval->add_option("--results", eval_results, "Results JSONL; existing rows resume");
    eval->add_option("--trace-dir", eval_trace_dir, "Write one trace per episode here");
    eval->add_option("--limit", eval_limit, "Evaluate only the first N problems");
    eval->add_option("--format", eval_format, "Report format: table or json");
    eval->add_flag("--permissive", eval_permissive, "Skip unreadable dataset lines");
    eval->add_flag("--quiet", common.quiet, "No per-episode progress");

    auto* replay = app.add_subcommand("replay", "Re-run a recorded trace and compare");
    std::string replay_path;
    replay->add_option("trace", replay_path, "Trace JSONL to replay")->required();
    replay->add_option("--config", common.config_path,
                       "Run configuration (for prompt overrides)");
    replay->add_flag("--quiet", common.quiet, "Suppress the episode summary");

    auto* report = app.add_subcommand("report", "Render a results file");
    std::string report_results, report_format = "table";
    report->add_option("--results", report_results, "Results JSONL")->required();
    report->add_option("--format", report_format, "table or json");
    report->add_option("--config", common.config_path, "Adds model costs for FLOPs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e); // prints help or the usage error
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (solve->parsed()) {
            return run_solve(common, solve_dataset, solve_id, solve_text, solve_answer,
                             solve_trace, solve_budget, solve_wall, solve_no_tool,
                             solve_max_tools);
        }
        if (eval->parsed()) {
            return run_eval(common, eval_dataset, eval_mode, eval_samples, eval_results,
                            eval_trace_dir, eval_limit, eval_format, eval_permissive);
        }
        if (replay->parsed()) return run_replay(common, replay_path);
        if (report->parsed()) return run_report(common, report_results, report_format);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DatasetError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
