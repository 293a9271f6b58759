#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest/doctest.h>

#include "hermes/backends.hpp"
#include "hermes/errors.hpp"
#include "hermes/trace.hpp"
#include "hermes/util.hpp"
#include "support/test_support.hpp"

#include <cmath>
#include <memory>
#include <random>

using namespace hermes;
using hermes::test::profile;

TEST_CASE("role names round trip") {
    for (Role r : {Role::reasoner, Role::autoformalizer, Role::prover, Role::judge,
                   Role::embedder}) {
        CHECK(role_from_name(role_name(r)) == r);
    }
    CHECK_THROWS_AS(role_from_name("conductor"), ConfigError);
}

TEST_CASE("usage records are additive with a zero identity") {
    UsageRecord u;
    CHECK(u.total_tokens() == 0);
    CHECK(u.total_calls() == 0);

    u.add_call(Role::reasoner, {100, 20, false});
    u.add_call(Role::reasoner, {10, 5, true});
    u.add_call(Role::judge, {7, 1, false});
    CHECK(u.total_tokens(Role::reasoner) == 135);
    CHECK(u.total_tokens(Role::judge) == 8);
    CHECK(u.total_tokens() == 143);
    CHECK(u.total_calls() == 3);
    CHECK(u.roles.at("reasoner").estimated);
    CHECK_FALSE(u.roles.at("judge").estimated);

    UsageRecord v;
    v.add_call(Role::judge, {3, 3, false});
    v.checker_seconds = 1.5;
    v.checker_requests = 4;
    UsageRecord merged = u;
    merged.merge(v);
    CHECK(merged.total_tokens(Role::judge) == 14);
    CHECK(merged.total_calls() == 4);
    CHECK(merged.checker_requests == 4);

    UsageRecord zero;
    UsageRecord copy = u;
    copy.merge(zero);
    CHECK(copy.total_tokens() == u.total_tokens());
    CHECK(copy.total_calls() == u.total_calls());
}

TEST_CASE("merge equals call-by-call accumulation on random traffic") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        UsageRecord whole;
        UsageRecord left;
        UsageRecord right;
        int n = static_cast<int>(rng() % 12);
        for (int i = 0; i < n; ++i) {
            Role role = (rng() % 2) ? Role::reasoner : Role::prover;
            TokenCount tc{static_cast<long long>(rng() % 100),
                          static_cast<long long>(rng() % 50), (rng() % 2) == 0};
            whole.add_call(role, tc);
            ((i % 2) ? left : right).add_call(role, tc);
        }
        UsageRecord merged = left;
        merged.merge(right);
        CHECK(merged.total_tokens() == whole.total_tokens());
        CHECK(merged.total_calls() == whole.total_calls());
        CHECK(merged.total_tokens(Role::reasoner) == whole.total_tokens(Role::reasoner));
    }
}

TEST_CASE("scripted chat plays items in order and checks expectations") {
    std::vector<ScriptItem> script;
    script.push_back(content_item("first reply"));
    script.push_back(content_item("second reply", "marker"));
    ScriptedChatBackend backend(profile(Role::reasoner, "scripted"), std::move(script));

    auto r1 = backend.chat({{"user", "question", "", {}}}, {}, {});
    CHECK(r1.content == "first reply");
    CHECK(backend.remaining() == 1);

    CHECK_THROWS_AS(backend.chat({{"user", "no match here", "", {}}}, {}, {}),
                    ScriptMismatch);
    auto r2 = backend.chat({{"user", "the marker is present", "", {}}}, {}, {});
    CHECK(r2.content == "second reply");
    CHECK_THROWS_AS(backend.chat({{"user", "overrun", "", {}}}, {}, {}), ScriptExhausted);
    CHECK(backend.calls() >= 2);
}

TEST_CASE("tool_item produces a verification tool call") {
    ScriptedChatBackend backend(profile(Role::reasoner, "scripted"),
                                {tool_item("2 + 2 = 4")});
    auto r = backend.chat({{"user", "go", "", {}}}, {}, {});
    REQUIRE(r.tool_call.has_value());
    CHECK(r.tool_call->arguments_json.find("2 + 2 = 4") != std::string::npos);
}

TEST_CASE("scripted embedder plays back vectors and then throws") {
    ScriptedEmbedder emb(profile(Role::embedder, "scripted"), 2, {{1.0, 0.0}, {0.0, 1.0}});
    CHECK(emb.dimension() == 2);
    CHECK(emb.embed("a").vector == std::vector<double>{1.0, 0.0});
    CHECK(emb.embed("b").vector == std::vector<double>{0.0, 1.0});
    CHECK_THROWS_AS(emb.embed("c"), ScriptExhausted);
}

TEST_CASE("hash embedder is deterministic, unit norm, text sensitive") {
    HashEmbedder emb(profile(Role::embedder, "hash"), 16);
    CHECK(emb.dimension() == 16);
    auto a1 = emb.embed("2 + 2 = 4").vector;
    auto a2 = emb.embed("2 + 2 = 4").vector;
    auto b = emb.embed("3 + 3 = 6").vector;
    REQUIRE(a1.size() == 16);
    CHECK(a1 == a2);
    CHECK(a1 != b);
    double norm = 0;
    for (double x : a1) norm += x * x;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0));
    CHECK(cosine_similarity(a1, a1) == doctest::Approx(1.0));
    CHECK(cosine_similarity(a1, b) < 1.0);
}

TEST_CASE("cosine and normalize") {
    CHECK(cosine_similarity({1, 0}, {0, 1}) == doctest::Approx(0.0));
    CHECK(cosine_similarity({1, 1}, {2, 2}) == doctest::Approx(1.0));
    CHECK(cosine_similarity({0, 0}, {1, 2}) == 0.0);
    auto v = normalize({3, 4});
    CHECK(v[0] == doctest::Approx(0.6));
    CHECK(v[1] == doctest::Approx(0.8));
    CHECK(normalize({0, 0}) == std::vector<double>{0, 0});
}

TEST_CASE("for_role resolves each slot and rejects missing backends") {
    BackendSet set;
    set.reasoner = std::make_shared<ScriptedChatBackend>(
        profile(Role::reasoner, "r"), std::vector<ScriptItem>{});
    set.judge = std::make_shared<ScriptedChatBackend>(profile(Role::judge, "j"),
                                                      std::vector<ScriptItem>{});
    CHECK(&set.for_role(Role::reasoner) == set.reasoner.get());
    CHECK(&set.for_role(Role::judge) == set.judge.get());
    CHECK_THROWS_AS(set.for_role(Role::prover), ConfigError);
    CHECK_THROWS_AS(set.for_role(Role::embedder), ConfigError);
}

TEST_CASE("traced_chat fills usage, accumulates, and records the reply") {
    ChatReply reported;
    reported.content = "counted reply";
    reported.usage = {50, 7, false};
    ChatReply silent;
    silent.content = "three word reply";

    BackendSet set;
    set.reasoner = std::make_shared<ScriptedChatBackend>(
        profile(Role::reasoner, "modelA"),
        std::vector<ScriptItem>{{"", reported}, {"", silent}});

    TraceRecorder trace;
    UsageRecord usage;
    CallContext ctx{&trace, &usage, nullptr};

    std::vector<ChatMessage> msgs{{"system", "be terse", "", {}},
                                  {"user", "two plus two", "", {}}};
    auto r1 = traced_chat(set, Role::reasoner, msgs, {}, ctx);
    CHECK(r1.usage.prompt == 50);
    CHECK(r1.usage.completion == 7);
    CHECK_FALSE(r1.usage.estimated);

    auto r2 = traced_chat(set, Role::reasoner, msgs, {}, ctx);
    // Estimator: prompt = whitespace tokens across messages, completion from
    // the reply text.
    CHECK(r2.usage.estimated);
    CHECK(r2.usage.prompt == estimate_tokens("be terse") + estimate_tokens("two plus two"));
    CHECK(r2.usage.completion == 3);

    CHECK(usage.total_calls() == 2);
    CHECK(usage.total_tokens(Role::reasoner) == 50 + 7 + r2.usage.prompt + 3);
    CHECK(usage.roles.at("reasoner").estimated);

    auto events = trace.events_of("backend_reply");
    REQUIRE(events.size() == 2);
    CHECK(events[0].payload["id"] == "b1");
    CHECK(events[1].payload["id"] == "b2");
    CHECK(events[0].payload["role"] == "reasoner");
    CHECK(events[0].payload["model"] == "modelA");
    CHECK(events[0].payload["content"] == "counted reply");
    CHECK(events[0].payload["usage"]["prompt"] == 50);
    CHECK(events[0].payload["usage"]["estimated"] == false);
    CHECK(events[1].payload["usage"]["estimated"] == true);
    // Same messages, same request hash; it keys replay.
    CHECK(events[0].payload["request_hash"] == events[1].payload["request_hash"]);
    CHECK(events[0].payload["request_hash"].get<std::string>().size() == 16);
}

TEST_CASE("traced_embed records the vector for replay") {
    BackendSet set;
    set.embedder = std::make_shared<HashEmbedder>(profile(Role::embedder, "hash"), 8);
    TraceRecorder trace;
    UsageRecord usage;
    CallContext ctx{&trace, &usage, nullptr};

    auto v = traced_embed(set, "some step text", ctx);
    CHECK(v.size() == 8);
    auto events = trace.events_of("embedding");
    REQUIRE(events.size() == 1);
    CHECK(events[0].payload["id"] == "e1");
    CHECK(events[0].payload["text"] == "some step text");
    REQUIRE(events[0].payload["vector"].is_array());
    CHECK(events[0].payload["vector"].size() == 8);
    CHECK(usage.roles.count("embedder") == 1);
}

TEST_CASE("http backends reject https and schemeless endpoints") {
    BackendProfile p = profile(Role::reasoner, "remote");
    p.endpoint = "https://example.invalid/v1";
    CHECK_THROWS_AS(HttpChatBackend{p}, ConfigError);
    p.endpoint = "example.invalid/v1";
    CHECK_THROWS_AS(HttpChatBackend{p}, ConfigError);
}
