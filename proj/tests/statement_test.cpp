#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest/doctest.h>

#include "hermes/errors.hpp"
#include "hermes/statement.hpp"

using namespace hermes;

namespace {

FormalStatement stmt(std::string body, std::string header = "import Mathlib") {
    FormalStatement s;
    s.header = std::move(header);
    s.body = std::move(body);
    auto parts = parse_theorem(s.body);
    if (parts) s.theorem_name = parts->name;
    return s;
}

} // namespace

TEST_CASE("parse_theorem splits a plain declaration") {
    auto p = parse_theorem("theorem tiny : 1 + 1 = 2 := by norm_num");
    REQUIRE(p.has_value());
    CHECK(p->keyword == "theorem");
    CHECK(p->name == "tiny");
    CHECK(p->binders == "");
    CHECK(p->goal == "1 + 1 = 2");
    CHECK(p->proof == "by norm_num");
}

TEST_CASE("parse_theorem handles binders with inner colons") {
    auto p = parse_theorem(
        "theorem bounded (n : \xe2\x84\x95) (h : n > 2) : n + 1 > 3 := by omega");
    REQUIRE(p.has_value());
    CHECK(p->binders == "(n : \xe2\x84\x95) (h : n > 2)");
    CHECK(p->goal == "n + 1 > 3");
    CHECK(p->proof == "by omega");
}

TEST_CASE("parse_theorem accepts lemma and leading noise") {
    auto p = parse_theorem("-- comment\nlemma aux {x : Nat} : x = x := rfl");
    REQUIRE(p.has_value());
    CHECK(p->keyword == "lemma");
    CHECK(p->name == "aux");
    CHECK(p->binders == "{x : Nat}");
    CHECK(p->proof == "rfl");
}

TEST_CASE("parse_theorem keeps := inside the goal out of the proof split") {
    // The first depth-0 := after the separator starts the proof; one inside
    // brackets does not.
    auto p = parse_theorem("theorem t (f : Nat \xe2\x86\x92 Nat) : (f = fun n => n) \xe2\x86\x92 f 1 = 1 := by intro h; simp [h]");
    REQUIRE(p.has_value());
    CHECK(p->proof == "by intro h; simp [h]");
}

TEST_CASE("parse_theorem rejects malformed bodies") {
    CHECK_FALSE(parse_theorem("").has_value());
    CHECK_FALSE(parse_theorem("def foo := 3").has_value());
    CHECK_FALSE(parse_theorem("theorem").has_value());
    CHECK_FALSE(parse_theorem("theorem name_only").has_value());
    CHECK_FALSE(parse_theorem("theorem t : no_proof_marker").has_value());
    CHECK_FALSE(parse_theorem("theorem t :  := by simp").has_value());
    // "theorema" must not count as the keyword.
    CHECK_FALSE(parse_theorem("theorema t : 1 = 1 := rfl").has_value());
}

TEST_CASE("render after parse is a fixed point") {
    std::vector<std::string> bodies = {
        "theorem tiny : 1 + 1 = 2 := by norm_num",
        "theorem bounded (n : Nat) (h : n > 2) : n + 1 > 3 := by omega",
        "lemma aux {x : Nat} : x = x := rfl",
    };
    for (const auto& body : bodies) {
        auto p = parse_theorem(body);
        REQUIRE(p.has_value());
        std::string rendered = render_theorem(*p);
        CHECK(rendered == body);
        auto again = parse_theorem(rendered);
        REQUIRE(again.has_value());
        CHECK(render_theorem(*again) == rendered);
    }
}

TEST_CASE("full_source joins header and body") {
    FormalStatement s = stmt("theorem t : True := trivial");
    CHECK(s.full_source() == "import Mathlib\n\ntheorem t : True := trivial");
    s.header = "";
    CHECK(s.full_source() == "theorem t : True := trivial");
}

TEST_CASE("goal_view splits binder groups") {
    auto view = goal_view(stmt(
        "theorem t (n : Nat) {h : n > 0} [inst : Decidable (n = 1)] : n + 0 = n := by simp"));
    REQUIRE(view.has_value());
    REQUIRE(view->binders.size() == 3);
    CHECK(view->binders[0] == "(n : Nat)");
    CHECK(view->binders[1] == "{h : n > 0}");
    CHECK(view->binders[2] == "[inst : Decidable (n = 1)]");
    CHECK(view->goal == "n + 0 = n");
}

TEST_CASE("goal_view on binder-free statement") {
    auto view = goal_view(stmt("theorem t : 2 = 2 := rfl"));
    REQUIRE(view.has_value());
    CHECK(view->binders.empty());
    CHECK(view->goal == "2 = 2");
    CHECK_FALSE(goal_view(stmt("not lean at all")).has_value());
}

TEST_CASE("universal_closure") {
    GoalView flat{{}, "1 + 1 = 2"};
    CHECK(universal_closure(flat) == "1 + 1 = 2");
    GoalView bound{{"(n : Nat)", "(h : n > 0)"}, "n + 1 > 1"};
    CHECK(universal_closure(bound) == "\xe2\x88\x80 (n : Nat) (h : n > 0), n + 1 > 1");
}

TEST_CASE("negate_statement wraps the goal and renames") {
    FormalStatement s = stmt("theorem claim (n : Nat) : n + 0 = n := by sorry");
    FormalStatement neg = negate_statement(s);
    CHECK(neg.theorem_name == "claim_neg");
    CHECK(neg.body == "theorem claim_neg (n : Nat) : \xc2\xac (n + 0 = n) := by sorry");
    CHECK(neg.header == s.header);
    // Original untouched.
    CHECK(s.body == "theorem claim (n : Nat) : n + 0 = n := by sorry");
    CHECK_THROWS_AS(negate_statement(stmt("garbage")), NegationUnsupported);
}

TEST_CASE("inject_hypotheses appends h_mem binders in rank order") {
    FormalStatement s = stmt("theorem t (n : Nat) : n = n := by sorry");
    FormalStatement out = inject_hypotheses(
        s, {{"mem-3", "2 + 2 = 4"}, {"mem-1", "1 < 2"}});
    CHECK(out.body ==
          "theorem t (n : Nat) (h_mem_1 : 2 + 2 = 4) (h_mem_2 : 1 < 2) : n = n := by sorry");
    REQUIRE(out.injected_hypotheses.size() == 2);
    CHECK(out.injected_hypotheses[0] == "mem-3");
    CHECK(out.injected_hypotheses[1] == "mem-1");

    FormalStatement bare = stmt("theorem t : True := by sorry");
    CHECK(inject_hypotheses(bare, {{"m", "1 = 1"}}).body ==
          "theorem t (h_mem_1 : 1 = 1) : True := by sorry");
    CHECK(inject_hypotheses(bare, {}).body == bare.body);
    CHECK_THROWS_AS(inject_hypotheses(stmt("nope"), {{"m", "1 = 1"}}), NegationUnsupported);
}

TEST_CASE("rename_theorem rewrites name and body") {
    FormalStatement s = stmt("theorem scratch_7 : 1 = 1 := by rfl");
    FormalStatement renamed = rename_theorem(s, "step_s3");
    CHECK(renamed.theorem_name == "step_s3");
    CHECK(renamed.body == "theorem step_s3 : 1 = 1 := by rfl");
    // Unparseable bodies pass through unchanged.
    FormalStatement junk;
    junk.body = "not a theorem";
    CHECK(rename_theorem(junk, "x").body == "not a theorem");
}

TEST_CASE("with_proof swaps the placeholder for a tactic") {
    FormalStatement s = stmt("theorem t : 1 + 1 = 2 := by sorry");
    auto src = with_proof(s, "norm_num");
    REQUIRE(src.has_value());
    CHECK(*src == "import Mathlib\n\ntheorem t : 1 + 1 = 2 := by norm_num");
    FormalStatement junk;
    junk.body = "???";
    CHECK_FALSE(with_proof(junk, "simp").has_value());
}
