#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest/doctest.h>

#include "hermes/agent.hpp"
#include "hermes/errors.hpp"
#include "hermes/trace.hpp"
#include "support/test_support.hpp"

#include <chrono>
#include <memory>
#include <thread>

using namespace hermes;
using hermes::test::profile;

namespace {

struct FakeVerifier : StepVerifier {
    std::vector<Verdict> script;
    std::vector<ProofStep> seen;
    size_t next = 0;
    StepVerdict verify_step(const ProofStep& step, CallContext&) override {
        seen.push_back(step);
        StepVerdict v;
        v.verdict = next < script.size() ? script[next++] : Verdict::verification_failure;
        return v;
    }
};

} // namespace

TEST_CASE("extract_final_answer takes the last balanced box") {
    CHECK(*extract_final_answer("so \\boxed{42}") == "42");
    CHECK(*extract_final_answer("\\boxed{1} then \\boxed{\\frac{2}{3}}") == "\\frac{2}{3}");
    CHECK_FALSE(extract_final_answer("no box").has_value());
    CHECK_FALSE(extract_final_answer("").has_value());
    // An unbalanced box is skipped in favor of a balanced one.
    CHECK(*extract_final_answer("\\boxed{unbalanced then \\boxed{7}") == "7");
    CHECK(*extract_final_answer("\\boxed{{a}{b}}") == "{a}{b}");
}

TEST_CASE("termination reason names") {
    CHECK(termination_reason_name(TerminationReason::answered) == std::string("answered"));
    CHECK(termination_reason_name(TerminationReason::token_budget) ==
          std::string("token_budget"));
    CHECK(termination_reason_name(TerminationReason::time_limit) ==
          std::string("time_limit"));
    CHECK(termination_reason_name(TerminationReason::backend_error) ==
          std::string("backend_error"));
}

TEST_CASE("tool-driven episode verifies steps and answers") {
    PromptCatalog catalog = PromptCatalog::defaults();
    BackendSet set;
    set.reasoner = std::make_shared<ScriptedChatBackend>(
        profile(Role::reasoner, "reasoner-model"),
        std::vector<ScriptItem>{
            tool_item("First, 6 * 7 = 42.", "reasoning step using a formal Lean4 verifier"),
            tool_item("Second, 42 > 40."),
            content_item("Both checks passed. \\boxed{42}", "CORRECT"),
        });
    set.judge = std::make_shared<ScriptedChatBackend>(profile(Role::judge, "judge"),
                                                      std::vector<ScriptItem>{});
    FakeVerifier verifier;
    verifier.script = {Verdict::correct, Verdict::correct};
    Agent agent(set, catalog, &verifier);

    Problem problem{"p1", "What is 6 times 7?", "42", "arithmetic"};
    EpisodeConfig config;
    config.episode_id = "ep-p1";
    TraceRecorder trace;
    EpisodeResult r = agent.run_episode(problem, config, &trace);

    CHECK(r.termination == TerminationReason::answered);
    CHECK(r.final_answer == "42");
    REQUIRE(r.correct.has_value());
    CHECK(*r.correct); // canonical equality, no judge call
    CHECK(r.tool_calls == 2);
    CHECK(r.verdict_counts.at("CORRECT") == 2);
    CHECK(r.episode_id == "ep-p1");
    CHECK(r.problem_id == "p1");
    CHECK(r.wall_seconds >= 0.0);

    REQUIRE(verifier.seen.size() == 2);
    CHECK(verifier.seen[0].step_id == "s1");
    CHECK(verifier.seen[1].step_id == "s2");
    CHECK(verifier.seen[0].episode_id == "ep-p1");
    CHECK(verifier.seen[0].text == "First, 6 * 7 = 42.");
    CHECK(verifier.seen[0].index == 1);

    CHECK(trace.events_of("episode_begin").size() == 1);
    CHECK(trace.events_of("tool_call").size() == 2);
    REQUIRE(trace.events_of("episode_end").size() == 1);
    auto begin = trace.events_of("episode_begin")[0];
    CHECK(begin.payload.at("episode_id") == "ep-p1");
    CHECK(begin.payload.at("problem_id") == "p1");
    CHECK(begin.payload.at("models").at("reasoner") == "reasoner-model");
    auto end = trace.events_of("episode_end")[0];
    CHECK(end.payload.at("termination") == "answered");
    CHECK(end.payload.at("correct").get<bool>() == true);
    CHECK(r.usage.roles.at("reasoner").calls == 3);
    CHECK(r.usage.roles.at("reasoner").estimated);
}

TEST_CASE("unboxed reply draws a nudge and the judge settles the answer") {
    PromptCatalog catalog = PromptCatalog::defaults();
    BackendSet set;
    set.reasoner = std::make_shared<ScriptedChatBackend>(
        profile(Role::reasoner, "reasoner-model"),
        std::vector<ScriptItem>{
            content_item("The answer is one half."),
            content_item("\\boxed{1/2}", "put the final answer in"),
        });
    set.judge = std::make_shared<ScriptedChatBackend>(
        profile(Role::judge, "judge"),
        std::vector<ScriptItem>{content_item("True", "the ground truth for that question")});
    Agent agent(set, catalog, nullptr);
    Problem problem{"p2", "Half of one?", "0.5", ""};
    EpisodeConfig config;
    config.tool_enabled = false;
    EpisodeResult r = agent.run_episode(problem, config, nullptr);
    CHECK(r.termination == TerminationReason::answered);
    REQUIRE(r.correct.has_value());
    CHECK(*r.correct);
    CHECK(r.usage.roles.at("judge").calls == 1);
    CHECK(r.tool_calls == 0);
}

TEST_CASE("no ground truth leaves correctness unset") {
    PromptCatalog catalog = PromptCatalog::defaults();
    BackendSet set;
    set.reasoner = std::make_shared<ScriptedChatBackend>(
        profile(Role::reasoner, "reasoner-model"),
        std::vector<ScriptItem>{content_item("\\boxed{5}")});
    Agent agent(set, catalog, nullptr);
    EpisodeConfig config;
    config.tool_enabled = false;
    EpisodeResult r = agent.run_episode(Problem{"p", "q 5", "", ""}, config, nullptr);
    CHECK(r.termination == TerminationReason::answered);
    CHECK(r.final_answer == "5");
    CHECK_FALSE(r.correct.has_value());
}

TEST_CASE("token budget trips with at most one reply of overshoot") {
    PromptCatalog catalog = PromptCatalog::defaults();
    BackendSet set;
    std::vector<ScriptItem> items;
    for (int i = 0; i < 50; ++i) items.push_back(content_item("still thinking, no answer"));
    set.reasoner = std::make_shared<ScriptedChatBackend>(
        profile(Role::reasoner, "reasoner-model"), std::move(items));
    Agent agent(set, catalog, nullptr);
    EpisodeConfig config;
    config.tool_enabled = false;
    config.token_budget = 30;
    EpisodeResult r = agent.run_episode(Problem{"p3", "Unanswerable?", "", ""}, config, nullptr);
    CHECK(r.termination == TerminationReason::token_budget);
    CHECK(r.final_answer.empty());
    CHECK_FALSE(r.correct.has_value());
    long long used = r.usage.total_tokens(Role::reasoner);
    CHECK(used >= 30);
    CHECK(used <= 30 + 60);
}

TEST_CASE("wall clock limit ends the episode as time_limit") {
    PromptCatalog catalog = PromptCatalog::defaults();
    struct SlowBackend : ChatBackend {
        BackendProfile p = hermes::test::profile(Role::reasoner, "slow");
        ChatReply chat(const std::vector<ChatMessage>&, const std::vector<ToolDeclaration>&,
                       const SamplingParams&) override {
            std::this_thread::sleep_for(std::chrono::milliseconds(60));
            ChatReply r;
            r.content = "no answer yet";
            return r;
        }
        const BackendProfile& profile() const override { return p; }
    };
    BackendSet set;
    set.reasoner = std::make_shared<SlowBackend>();
    Agent agent(set, catalog, nullptr);
    EpisodeConfig config;
    config.tool_enabled = false;
    config.wall_clock_limit = 0.15;
    EpisodeResult r = agent.run_episode(Problem{"p", "q", "", ""}, config, nullptr);
    CHECK(r.termination == TerminationReason::time_limit);
    CHECK(r.wall_seconds >= 0.15);
}

TEST_CASE("backend outage maps to backend_error with a warning") {
    PromptCatalog catalog = PromptCatalog::defaults();
    struct FailingBackend : ChatBackend {
        BackendProfile p = hermes::test::profile(Role::reasoner, "down");
        ChatReply chat(const std::vector<ChatMessage>&, const std::vector<ToolDeclaration>&,
                       const SamplingParams&) override {
            throw BackendUnavailable("scripted outage");
        }
        const BackendProfile& profile() const override { return p; }
    };
    BackendSet set;
    set.reasoner = std::make_shared<FailingBackend>();
    Agent agent(set, catalog, nullptr);
    EpisodeConfig config;
    config.tool_enabled = false;
    TraceRecorder trace;
    EpisodeResult r = agent.run_episode(Problem{"p4", "q", "", ""}, config, &trace);
    CHECK(r.termination == TerminationReason::backend_error);
    REQUIRE(trace.events_of("warning").size() == 1);
    CHECK(trace.events_of("warning")[0].payload.at("text") == "scripted outage");
}

TEST_CASE("tool call cap returns NO VERIFICATION without the verifier") {
    PromptCatalog catalog = PromptCatalog::defaults();
    BackendSet set;
    set.reasoner = std::make_shared<ScriptedChatBackend>(
        profile(Role::reasoner, "reasoner-model"),
        std::vector<ScriptItem>{
            tool_item("step one 1"),
            tool_item("step two 2"),
            tool_item("step three 3"),
            content_item("\\boxed{9}", "NO VERIFICATION"),
        });
    FakeVerifier verifier;
    verifier.script = {Verdict::correct, Verdict::incorrect};
    Agent agent(set, catalog, &verifier);
    EpisodeConfig config;
    config.max_tool_calls = 2;
    EpisodeResult r = agent.run_episode(Problem{"p5", "q 1+1", "", ""}, config, nullptr);
    CHECK(r.termination == TerminationReason::answered);
    CHECK(r.tool_calls == 3);
    CHECK(verifier.seen.size() == 2);
    CHECK(r.verdict_counts.size() == 2);
    CHECK(r.verdict_counts.count("NO VERIFICATION") == 0);
}

TEST_CASE("malformed tool arguments are reported and retried") {
    PromptCatalog catalog = PromptCatalog::defaults();
    BackendSet set;
    ScriptItem bad;
    ToolCallRequest call;
    call.name = kVerifyToolName;
    call.arguments_json = "{not json";
    bad.reply.tool_call = call;
    set.reasoner = std::make_shared<ScriptedChatBackend>(
        profile(Role::reasoner, "reasoner-model"),
        std::vector<ScriptItem>{
            bad,
            tool_item("retry: 3 < 5", "Malformed tool arguments"),
            content_item("\\boxed{3}"),
        });
    FakeVerifier verifier;
    verifier.script = {Verdict::correct};
    Agent agent(set, catalog, &verifier);
    TraceRecorder trace;
    EpisodeResult r =
        agent.run_episode(Problem{"p6", "q 3", "", ""}, EpisodeConfig{}, &trace);
    CHECK(r.termination == TerminationReason::answered);
    CHECK(r.tool_calls == 2);
    REQUIRE(verifier.seen.size() == 1);
    CHECK(verifier.seen[0].text == "retry: 3 < 5");
    auto calls = trace.events_of("tool_call");
    REQUIRE(calls.size() == 2);
    CHECK(calls[0].payload.at("result") == "MALFORMED");
    CHECK(calls[1].payload.at("result") == "CORRECT");
}

TEST_CASE("check_answer falls back to the judge and fails closed") {
    PromptCatalog catalog = PromptCatalog::defaults();
    auto check = [&](std::vector<ScriptItem> judge_script, const std::string& answer,
                     const std::string& truth) {
        BackendSet set;
        set.judge = std::make_shared<ScriptedChatBackend>(profile(Role::judge, "judge"),
                                                          std::move(judge_script));
        TraceRecorder trace;
        UsageRecord usage;
        CallContext ctx{&trace, &usage, nullptr};
        return check_answer(set, catalog, "the question", answer, truth, ctx);
    };
    // Canonical equality never consults the judge.
    CHECK(check({}, " $42$ ", "42"));
    CHECK(check({content_item("True")}, "1/2", "0.5"));
    CHECK_FALSE(check({content_item("False")}, "7", "8"));
    // Unparseable twice: fail closed.
    CHECK_FALSE(check({content_item("eh"), content_item("hm")}, "7", "8"));
}

TEST_CASE("render_tool_result leads with the verdict token") {
    PromptCatalog catalog = PromptCatalog::defaults();
    for (Verdict v : {Verdict::correct, Verdict::incorrect, Verdict::verification_failure,
                      Verdict::no_verification}) {
        std::string text = render_tool_result(catalog, v);
        CHECK(text.rfind(verdict_token(v), 0) == 0);
    }
}
