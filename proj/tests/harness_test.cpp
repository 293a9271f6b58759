#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest/doctest.h>

#include "hermes/errors.hpp"
#include "hermes/harness.hpp"
#include "hermes/util.hpp"
#include "support/test_support.hpp"

#include <cstdio>
#include <fstream>
#include <random>

using namespace hermes;
using hermes::test::scratch_path;
using nlohmann::json;

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

} // namespace

TEST_CASE("load_dataset parses, validates, and reports line numbers") {
    std::string good = scratch_path("ds_good.jsonl");
    write_file(good,
               "{\"id\":\"a\",\"problem\":\"1+1?\",\"answer\":\"2\"}\n"
               "\n"
               "{\"id\":\"b\",\"problem\":\"2+2?\",\"answer\":\"4\",\"subject\":\"arith\"}\n");
    auto ds = load_dataset(good);
    REQUIRE(ds.size() == 2);
    CHECK(ds[0].id == "a");
    CHECK(ds[1].subject == "arith");

    std::string bad = scratch_path("ds_bad.jsonl");
    write_file(bad,
               "{\"id\":\"a\",\"problem\":\"p\",\"answer\":\"1\"}\n"
               "not json\n");
    CHECK_THROWS_WITH_AS(load_dataset(bad), doctest::Contains(":2:"), ParseError);
    CHECK(load_dataset(bad, true).size() == 1);

    std::string dup = scratch_path("ds_dup.jsonl");
    write_file(dup,
               "{\"id\":\"a\",\"problem\":\"p\",\"answer\":\"1\"}\n"
               "{\"id\":\"a\",\"problem\":\"q\",\"answer\":\"2\"}\n");
    CHECK_THROWS_WITH_AS(load_dataset(dup), doctest::Contains("duplicate"), ParseError);
    CHECK(load_dataset(dup, true).size() == 1);

    std::string empty = scratch_path("ds_empty.jsonl");
    write_file(empty, "\n\n");
    CHECK_THROWS_AS(load_dataset(empty), EmptyDataset);
    CHECK_THROWS_AS(load_dataset(scratch_path("ds_missing.jsonl")), DatasetError);
}

TEST_CASE("flops formula matches the closed form") {
    ModelCostConfig cost{7000000000LL, 32, 4096, 8192};
    long long per_token = 2LL * 7000000000LL + 2LL * 32 * 8192 * 4096;
    CHECK(flops_per_token(cost) == per_token);

    ModelCostConfig dense_only{1000, 0, 0, 8192};
    CHECK(flops_per_token(dense_only) == 2000);
}

TEST_CASE("flops estimate is linear in token counts") {
    std::mt19937 rng(31);
    ModelCostConfig cost{123456789LL, 24, 2048, 4096};
    for (int trial = 0; trial < 20; ++trial) {
        long long p1 = rng() % 10000;
        long long c1 = rng() % 10000;
        long long p2 = rng() % 10000;
        long long c2 = rng() % 10000;
        UsageRecord a;
        a.roles["reasoner"] = RoleUsage{p1, c1, 1, false};
        UsageRecord b;
        b.roles["reasoner"] = RoleUsage{p2, c2, 1, false};
        UsageRecord both = a;
        both.merge(b);
        auto fa = estimate_flops(a, {{"reasoner", cost}});
        auto fb = estimate_flops(b, {{"reasoner", cost}});
        auto fboth = estimate_flops(both, {{"reasoner", cost}});
        CHECK(fboth.total == fa.total + fb.total);
        CHECK(fa.total == (p1 + c1) * flops_per_token(cost));
    }
}

TEST_CASE("flops estimate flags uncosted roles") {
    ModelCostConfig cost{1000, 0, 0, 8192};
    UsageRecord usage;
    usage.roles["reasoner"] = RoleUsage{100, 50, 3, false};
    usage.roles["judge"] = RoleUsage{10, 1, 1, false};
    auto fb = estimate_flops(usage, {{"reasoner", cost}});
    CHECK(fb.role_flops.at("reasoner") == 150 * 2000);
    CHECK(fb.total == 150 * 2000);
    CHECK(fb.uncosted_roles == std::vector<std::string>{"judge"});
    CHECK_FALSE(fb.empty());
    CHECK(FlopsBreakdown{}.empty());
}

TEST_CASE("majority_vote groups canonically with earliest-first ties") {
    CHECK(majority_vote({"42", "41", "$42$"}) == "42");
    CHECK(majority_vote({"a", "b"}) == "a");
    CHECK(majority_vote({"", "  ", "x"}) == "x");
    CHECK(majority_vote({"B", "a", "b"}) == "B");
    CHECK(majority_vote({}) == "");
    CHECK(majority_vote({"", ""}) == "");
}

TEST_CASE("evaluate runs, votes, persists, and resumes") {
    std::string results_path = scratch_path("results.jsonl");
    std::remove(results_path.c_str());
    std::vector<Problem> problems{
        {"p1", "one plus one", "2", ""},
        {"p2", "two plus two", "4", ""},
        {"p3", "unanswerable", "7", ""},
    };
    int runs = 0;
    EvalHooks hooks;
    hooks.run = [&](const Problem& p, const EpisodeConfig& config, int sample) {
        ++runs;
        EpisodeResult r;
        r.episode_id = config.episode_id;
        r.problem_id = p.id;
        if (p.id == "p3") {
            r.termination = TerminationReason::token_budget;
        } else {
            r.final_answer = p.id == "p1" ? "2" : (sample == 0 ? "5" : "4");
            r.correct = r.final_answer == p.answer;
            r.termination = TerminationReason::answered;
        }
        r.usage.roles["reasoner"] = RoleUsage{20, 10, 1, true};
        r.wall_seconds = 0.5;
        return r;
    };
    hooks.check = [](const Problem& p, const std::string& answer) {
        return canonicalize_answer(answer) == canonicalize_answer(p.answer);
    };
    RunOptions options;
    options.samples = 3;
    options.results_path = results_path;

    std::vector<ProblemResult> rows;
    RunSummary summary = evaluate(problems, options, hooks, &rows);
    CHECK(runs == 9);
    CHECK(summary.problems == 3);
    CHECK(summary.answered == 2);
    CHECK(summary.correct == 2);
    CHECK(summary.resumed == 0);
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].answer == "4"); // wins 2-1 over the stray 5
    CHECK(rows[2].answer.empty());
    CHECK_FALSE(rows[2].correct.has_value());
    CHECK(summary.termination_counts.at("answered") == 6);
    CHECK(summary.termination_counts.at("token_budget") == 3);
    CHECK(summary.usage.roles.at("reasoner").calls == 9);
    CHECK(rows[0].episodes.size() == 3);
    CHECK(rows[0].episode_count == 3);

    // Full resume: nothing re-runs, rows come back without episode bodies.
    std::vector<ProblemResult> rows2;
    RunSummary resumed = evaluate(problems, options, hooks, &rows2);
    CHECK(runs == 9);
    CHECK(resumed.resumed == 3);
    CHECK(resumed.problems == 3);
    CHECK(resumed.correct == 2);
    CHECK(rows2[0].episodes.empty());
    CHECK(rows2[0].episode_count == 3);

    // Partial resume: drop p3's row, only it re-runs.
    {
        std::ifstream in(results_path);
        std::string line;
        std::string kept;
        while (std::getline(in, line))
            if (line.find("\"p3\"") == std::string::npos) kept += line + "\n";
        write_file(results_path, kept);
    }
    RunSummary partial = evaluate(problems, options, hooks, nullptr);
    CHECK(runs == 12);
    CHECK(partial.resumed == 2);
    CHECK(partial.problems == 3);

    // load_results + summarize_results rebuild the same headline numbers.
    auto reloaded = load_results(results_path);
    CHECK(reloaded.size() == 3);
    RunSummary rebuilt = summarize_results(reloaded);
    CHECK(rebuilt.problems == 3);
    CHECK(rebuilt.correct == 2);
    CHECK(rebuilt.resumed == 0);
    CHECK(rebuilt.usage.roles.at("reasoner").calls > 0);
}

TEST_CASE("load_results rejects missing and corrupt files") {
    CHECK_THROWS_AS(load_results(scratch_path("no_results.jsonl")), DatasetError);
    std::string corrupt = scratch_path("corrupt_results.jsonl");
    write_file(corrupt, "{\"problem_id\":\"p\"}\nnot json\n");
    CHECK_THROWS_WITH_AS(load_results(corrupt), doctest::Contains(":2:"), DatasetError);
}

TEST_CASE("reports render as table and json") {
    RunSummary summary;
    summary.problems = 2;
    summary.answered = 2;
    summary.correct = 1;
    summary.usage.roles["reasoner"] = RoleUsage{100, 40, 4, false};
    summary.termination_counts["answered"] = 2;
    std::vector<ProblemResult> rows(2);
    rows[0].problem_id = "p1";
    rows[0].answer = "42";
    rows[0].correct = true;
    rows[1].problem_id = "p2";
    rows[1].answer = "9";
    rows[1].correct = false;

    std::string table = render_report(summary, rows, "table");
    CHECK(table.find("problems     : 2") != std::string::npos);
    CHECK(table.find("p1 | y") != std::string::npos);
    CHECK(table.find("p2 | n") != std::string::npos);
    CHECK(render_report(RunSummary{}, {}, "table").find("0 problems") != std::string::npos);

    ModelCostConfig cost{1000, 0, 0, 8192};
    summary.flops = estimate_flops(summary.usage, {{"reasoner", cost}});
    std::string structured = render_report(summary, rows, "json");
    json parsed = json::parse(structured);
    RunSummary back = summary_from_json(parsed["summary"]);
    CHECK(back.problems == summary.problems);
    CHECK(back.correct == summary.correct);
    CHECK(back.flops.total == summary.flops.total);
    CHECK(back.usage.roles.at("reasoner").prompt_tokens == 100);
    ProblemResult row_back = problem_result_from_json(parsed["problems"][0]);
    CHECK(row_back.problem_id == "p1");
    REQUIRE(row_back.correct.has_value());
    CHECK(*row_back.correct);

    CHECK_THROWS_AS(render_report(summary, rows, "csv"), ConfigError);
}

TEST_CASE("usage json round trip") {
    UsageRecord usage;
    usage.roles["reasoner"] = RoleUsage{11, 7, 2, true};
    usage.roles["prover"] = RoleUsage{3, 4, 1, false};
    usage.checker_seconds = 1.5;
    usage.checker_requests = 9;
    UsageRecord back = usage_from_json(usage_to_json(usage));
    CHECK(back.roles.at("reasoner").prompt_tokens == 11);
    CHECK(back.roles.at("reasoner").estimated);
    CHECK_FALSE(back.roles.at("prover").estimated);
    CHECK(back.checker_seconds == 1.5);
    CHECK(back.checker_requests == 9);
    CHECK(back.total_tokens() == usage.total_tokens());
}
