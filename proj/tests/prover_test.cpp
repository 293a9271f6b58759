#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest/doctest.h>

#include "hermes/errors.hpp"
#include "hermes/prover.hpp"
#include "hermes/trace.hpp"
#include "hermes/util.hpp"
#include "support/test_support.hpp"

#include <memory>

using namespace hermes;
using hermes::test::profile;
using hermes::test::stub_config;

namespace {

FormalStatement stmt(const std::string& goal) {
    FormalStatement st;
    st.body = "theorem test : " + goal + " := sorry";
    st.theorem_name = "test";
    st.origin_step = "s1";
    return st;
}

} // namespace

TEST_CASE("verdict_for covers all twelve cells") {
    const std::string pols[] = {"goal", "negation", ""};
    for (bool formalizable : {false, true}) {
        for (bool translated : {false, true}) {
            for (const auto& polarity : pols) {
                Verdict v = verdict_for(formalizable, translated, polarity);
                if (!formalizable) {
                    CHECK(v == Verdict::no_verification);
                } else if (!translated) {
                    CHECK(v == Verdict::verification_failure);
                } else if (polarity == "goal") {
                    CHECK(v == Verdict::correct);
                } else if (polarity == "negation") {
                    CHECK(v == Verdict::incorrect);
                } else {
                    CHECK(v == Verdict::verification_failure);
                }
            }
        }
    }
}

TEST_CASE("verdict tokens round trip") {
    CHECK(verdict_token(Verdict::correct) == std::string("CORRECT"));
    CHECK(verdict_token(Verdict::incorrect) == std::string("INCORRECT"));
    CHECK(verdict_token(Verdict::verification_failure) == std::string("VERIFICATION FAILURE"));
    CHECK(verdict_token(Verdict::no_verification) == std::string("NO VERIFICATION"));
    for (Verdict v : {Verdict::correct, Verdict::incorrect, Verdict::verification_failure,
                      Verdict::no_verification}) {
        CHECK(verdict_from_token(verdict_token(v)) == v);
    }
}

TEST_CASE("prescreen rule layer keys on digits and math symbols") {
    CHECK_FALSE(prescreen_rule_mathy("Let me restate the problem"));
    CHECK_FALSE(prescreen_rule_mathy("   "));
    CHECK_FALSE(prescreen_rule_mathy(""));
    CHECK(prescreen_rule_mathy("compute 2+2"));
    CHECK(prescreen_rule_mathy("x \\le y"));
    CHECK(prescreen_rule_mathy("\xe2\x88\x80 n, n = n"));
    CHECK(prescreen_rule_mathy("there are 3 cases"));
}

TEST_CASE("prescreen judge confirmation fails open") {
    PromptCatalog catalog = PromptCatalog::defaults();
    auto screen = [&](std::vector<ScriptItem> script, const std::string& text) {
        BackendSet set;
        set.judge = std::make_shared<ScriptedChatBackend>(profile(Role::judge, "judge"),
                                                          std::move(script));
        TraceRecorder trace;
        CallContext ctx{&trace, nullptr, nullptr};
        return prescreen_formalizable(set, catalog, text, ctx);
    };
    // Rule layer rejects without consulting the judge.
    CHECK_FALSE(screen({}, "purely narrative text"));
    CHECK(screen({content_item("True")}, "2 + 2 = 4"));
    CHECK_FALSE(screen({content_item("False")}, "the 3 of us agree"));
    // Unparseable twice: fail open.
    CHECK(screen({content_item("eh"), content_item("dunno")}, "2 + 2 = 4"));
}

TEST_CASE("builtin wave settles races at zero model cost") {
    Scheduler scheduler(stub_config(), SchedulerConfig{2, 2});
    SchedulerVerificationBackend live(scheduler, 2);
    BackendSet set;
    set.prover = std::make_shared<ScriptedChatBackend>(profile(Role::prover, "prover"),
                                                       std::vector<ScriptItem>{});
    PromptCatalog catalog = PromptCatalog::defaults();
    Prover prover(set, catalog);

    SUBCASE("goal side wins") {
        TraceRecorder trace;
        UsageRecord usage;
        CallContext ctx{&trace, &usage, nullptr};
        auto res = prover.prove(stmt("STUB_OK_GOAL_ONLY"), ProverBudget{}, live, ctx);
        CHECK(res.record.winner_polarity == "goal");
        CHECK(res.model_samples == 0);
        CHECK_FALSE(res.goal_only);
        // 4 tactics x 2 polarities, every job accounted for.
        CHECK(res.record.jobs.size() == 8);
        CHECK(res.record.winner_source.find("STUB_OK_GOAL_ONLY") != std::string::npos);
        CHECK(trace.events_of("race").size() == 1);
        CHECK(trace.events_of("race")[0].payload["phase"] == "builtin");
        CHECK(usage.checker_requests > 0);
        CHECK(usage.total_calls() == 0);
    }
    SUBCASE("negation side wins") {
        TraceRecorder trace;
        CallContext ctx{&trace, nullptr, nullptr};
        auto res = prover.prove(stmt("STUB_OK_NEG_ONLY"), ProverBudget{}, live, ctx);
        CHECK(res.record.winner_polarity == "negation");
        CHECK(res.record.winner_tag.rfind("neg-builtin-", 0) == 0);
    }
}

TEST_CASE("model wave spends exactly two K_p when builtins fail") {
    Scheduler scheduler(stub_config(), SchedulerConfig{2, 2});
    SchedulerVerificationBackend live(scheduler, 2);
    PromptCatalog catalog = PromptCatalog::defaults();

    SUBCASE("goal samples prove") {
        std::vector<ScriptItem> proofs;
        for (int i = 0; i < 4; ++i)
            proofs.push_back(content_item(
                "```lean4\ntheorem test : 1 + 1 = 2 := by STUB_OK\n```",
                "Complete the following Lean 4 code"));
        for (int i = 0; i < 4; ++i)
            proofs.push_back(content_item(
                "```lean4\ntheorem test_neg : \xc2\xac (1 + 1 = 2) := by no_such_tactic\n```"));
        BackendSet set;
        set.prover = std::make_shared<ScriptedChatBackend>(profile(Role::prover, "prover"),
                                                           std::move(proofs));
        Prover prover(set, catalog);
        TraceRecorder trace;
        UsageRecord usage;
        CallContext ctx{&trace, &usage, nullptr};
        auto res = prover.prove(stmt("1 + 1 = 2"), ProverBudget{}, live, ctx);
        CHECK(res.model_samples == 8);
        CHECK(res.record.winner_polarity == "goal");
        CHECK(res.record.winner_tag.rfind("goal-sample-", 0) == 0);
        auto races = trace.events_of("race");
        REQUIRE(races.size() == 2);
        CHECK(races[0].payload["phase"] == "builtin");
        CHECK(races[1].payload["phase"] == "model");
        CHECK(usage.roles.at("prover").calls == 8);
    }
    SUBCASE("nothing proves, every sample still spent") {
        std::vector<ScriptItem> proofs;
        for (int i = 0; i < 3; ++i)
            proofs.push_back(content_item("```lean4\ntheorem test : 9 = 9 := by bad\n```"));
        proofs.push_back(content_item("no code at all"));
        for (int i = 0; i < 4; ++i)
            proofs.push_back(content_item(
                "```lean4\ntheorem test_neg : \xc2\xac (9 = 9) := by bad\n```"));
        BackendSet set;
        set.prover = std::make_shared<ScriptedChatBackend>(profile(Role::prover, "prover"),
                                                           std::move(proofs));
        Prover prover(set, catalog);
        TraceRecorder trace;
        CallContext ctx{&trace, nullptr, nullptr};
        auto res = prover.prove(stmt("9 = 9"), ProverBudget{}, live, ctx);
        CHECK(res.model_samples == 8);
        CHECK_FALSE(res.record.proved());
        // The sample with no code block draws a warning, not a crash.
        CHECK(trace.events_of("warning").size() == 1);
    }
}

TEST_CASE("prover model disabled stops after the builtin wave") {
    Scheduler scheduler(stub_config(), SchedulerConfig{2, 2});
    SchedulerVerificationBackend live(scheduler, 2);
    PromptCatalog catalog = PromptCatalog::defaults();
    BackendSet set; // no prover backend needed when the wave is disabled
    ProverConfig config;
    config.use_prover_model = false;
    Prover prover(set, catalog, config);
    TraceRecorder trace;
    CallContext ctx{&trace, nullptr, nullptr};
    auto res = prover.prove(stmt("9 = 9"), ProverBudget{}, live, ctx);
    CHECK(res.model_samples == 0);
    CHECK_FALSE(res.record.proved());
    CHECK(trace.events_of("race").size() == 1);
}

TEST_CASE("scripted verifier replays records and flags divergence") {
    RaceRecord canned;
    canned.winner_polarity = "goal";
    canned.winner_tag = "goal-builtin-1";
    ScriptedVerificationBackend::RaceItem item;
    item.record = canned;
    item.check_jobs = true;
    VerificationJob job;
    job.tag = "goal-builtin-1";
    job.source = "theorem test : True := by trivial";
    item.job_hashes[job.tag] = fnv1a_hex(job.source);

    ScriptedVerificationBackend scripted({}, {item, item});
    auto rec = scripted.race_proofs({job}, Deadline{});
    CHECK(rec.winner_polarity == "goal");
    CHECK(scripted.races_remaining() == 1);

    VerificationJob altered = job;
    altered.source = "theorem test : False := by trivial";
    CHECK_THROWS_AS(scripted.race_proofs({altered}, Deadline{}), ScriptMismatch);
    CHECK_THROWS_AS(scripted.race_proofs({job}, Deadline{}), ScriptExhausted);
}

TEST_CASE("scripted compile checks verify source hashes") {
    ScriptedVerificationBackend::CompileItem any;
    ScriptedVerificationBackend::CompileItem pinned;
    pinned.source_hash = fnv1a_hex("exact source");
    ScriptedVerificationBackend scripted({any, pinned, pinned}, {});
    CHECK(scripted.check("whatever", Deadline{}).compiles());
    CHECK(scripted.check("exact source", Deadline{}).compiles());
    CHECK_THROWS_AS(scripted.check("different source", Deadline{}), ScriptMismatch);
    CHECK_THROWS_AS(scripted.check("exact source", Deadline{}), ScriptExhausted);
}

TEST_CASE("pipeline verifier runs a step to CORRECT and records memory") {
    PromptCatalog catalog = PromptCatalog::defaults();
    BackendSet set;
    set.judge = std::make_shared<ScriptedChatBackend>(
        profile(Role::judge, "judge"),
        std::vector<ScriptItem>{
            content_item("True", "checkable mathematical claim"),
            content_item("Two plus two equals four.", "plain English"),
            content_item("True", "equivalent"),
        });
    set.autoformalizer = std::make_shared<ScriptedChatBackend>(
        profile(Role::autoformalizer, "formalizer"),
        std::vector<ScriptItem>{
            content_item("```lean4\ntheorem test : 2 + 2 = 4 := by sorry\n```")});
    set.prover = std::make_shared<ScriptedChatBackend>(profile(Role::prover, "prover"),
                                                       std::vector<ScriptItem>{});
    set.embedder = std::make_shared<HashEmbedder>(profile(Role::embedder, "hash"), 16);

    ScriptedVerificationBackend::CompileItem compile_ok;
    RaceRecord canned;
    canned.winner_polarity = "goal";
    canned.winner_tag = "goal-builtin-1";
    canned.winner_source = "theorem step_s7 : 2 + 2 = 4 := by norm_num";
    ScriptedVerificationBackend::RaceItem race_item;
    race_item.record = canned;
    ScriptedVerificationBackend scripted({compile_ok}, {race_item});

    MemoryStore memory;
    PipelineVerifier pipeline(set, catalog, memory, scripted);
    TraceRecorder trace;
    UsageRecord usage;
    CallContext ctx{&trace, &usage, nullptr};

    StepVerdict v = pipeline.verify_step({"s7", "two plus two equals 4", "ep1", 1}, ctx);
    CHECK(v.verdict == Verdict::correct);
    REQUIRE(v.statement.has_value());
    CHECK(v.statement->theorem_name == "step_s7");
    CHECK(v.evidence.find("norm_num") != std::string::npos);
    CHECK_FALSE(v.memory_entry_id.empty());
    CHECK(memory.size() == 1);
    CHECK(memory.entries()[0].formal_proposition == "2 + 2 = 4");
    CHECK(trace.events_of("verdict").size() == 1);
    CHECK(trace.events_of("memory_record").size() == 1);
    CHECK(v.usage.roles.at("judge").calls == 3);
    CHECK(usage.roles.at("judge").calls == 3);
    CHECK(v.usage.roles.count("embedder") == 1);

    // A narrative step short-circuits without touching any backend.
    StepVerdict skip =
        pipeline.verify_step({"s8", "Let me restate the problem", "ep1", 2}, ctx);
    CHECK(skip.verdict == Verdict::no_verification);
    CHECK(usage.roles.at("judge").calls == 3);
}

TEST_CASE("pipeline verifier maps translation exhaustion to VERIFICATION FAILURE") {
    PromptCatalog catalog = PromptCatalog::defaults();
    BackendSet set;
    set.judge = std::make_shared<ScriptedChatBackend>(
        profile(Role::judge, "judge"),
        std::vector<ScriptItem>{content_item("True")});
    set.autoformalizer = std::make_shared<ScriptedChatBackend>(
        profile(Role::autoformalizer, "formalizer"),
        std::vector<ScriptItem>{content_item("nothing formal"),
                                content_item("still nothing")});
    ScriptedVerificationBackend scripted({}, {});
    MemoryStore memory;
    VerifyConfig config;
    config.translation.K_t = 2;
    PipelineVerifier pipeline(set, catalog, memory, scripted, ProverConfig{}, config);
    TraceRecorder trace;
    CallContext ctx{&trace, nullptr, nullptr};
    StepVerdict v = pipeline.verify_step({"s1", "2 + 2 = 4", "ep1", 1}, ctx);
    CHECK(v.verdict == Verdict::verification_failure);
    CHECK(v.translation_attempts == 2);
    CHECK_FALSE(v.diagnosis.empty());
    CHECK(memory.size() == 0);
}
