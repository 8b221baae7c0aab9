// Loop-summarization tests: iterated values per variable class (unchanged,
// constant progression, guarded writers, unknown), guarded array-write
// chains and their degradations, iteration-count synthesis for nested loops,
// closure of the looping condition, and summary memoization.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "apc/backbone.hpp"
#include "apc/loop_summary.hpp"
#include "apc/program.hpp"
#include "apc/smt.hpp"
#include "apc/symexec.hpp"

using namespace apc;

namespace {

struct PoolGuard {
    ~PoolGuard() { shutdown_solver_pool(); }
} pool_guard;

bool is_star_value(const Value& v) {
    if (auto* e = std::get_if<Expr>(&v)) return (*e)->kind == Kind::Star;
    return std::get<ArrayVal>(v).body->kind == Kind::Star;
}

// Summary of the first loop encountered in DFS order of `src`'s tree.
const LoopSummary& first_summary(const std::string& src, AnalysisContext& cx,
                                 ProgramGraph& p_out) {
    p_out = normalize(parse_program(src));
    BackboneTree t = build_backbone_tree(p_out);
    for (int n : t.dfs_order()) {
        auto c = loop_at(t, p_out, n);
        if (c) return overapproximate_loop(p_out, *c, cx);
    }
    throw std::runtime_error("no loop in test program");
}

}  // namespace

TEST_CASE("counting loop: constant progression and untouched variables") {
    CtxScope scope;
    AnalysisContext cx;
    ProgramGraph p;
    const LoopSummary& s = first_summary(
        "var i : int;\nvar n : int;\n"
        "i = 0;\nwhile (i < n) { i = i + 1; }\ntarget;\n",
        cx, p);
    REQUIRE(!s.trivial);
    REQUIRE(s.counters.size() == 1);
    Expr k = mk_counter(s.counters[0]);
    // i advances by 1 per iteration; n is untouched.
    CHECK(equal(std::get<Expr>(s.theta.vars.at("i")), add(mk_sym("i"), k)));
    CHECK(equal(std::get<Expr>(s.theta.vars.at("n")), mk_sym("n")));
    // The looping condition is one bounded universal whose matrix says the
    // guard held at every earlier iteration: with i=0, kappa=3 forces n >= 3.
    REQUIRE(s.phi->kind == Kind::Forall);
    Expr inst = substitute1(s.phi, mk_sym("i"), mk_int(0));
    Expr fixed = substitute1(inst, k, mk_int(3));
    CHECK(check_sat(mk_and({fixed, rel(CmpOp::Lt, mk_sym("n"), mk_int(3))}),
                    default_solver(), false)
              .status == SmtStatus::Unsat);
    CHECK(check_sat(mk_and({fixed, rel(CmpOp::Eq, mk_sym("n"), mk_int(3))}),
                    default_solver(), false)
              .status == SmtStatus::Sat);
}

TEST_CASE("guarded writer: a constant store becomes an ite over the count") {
    CtxScope scope;
    AnalysisContext cx;
    ProgramGraph p;
    const LoopSummary& s = first_summary(
        "var i : int;\nvar n : int;\nvar x : int;\n"
        "while (i < n) { x = 5; i = i + 1; }\ntarget;\n",
        cx, p);
    REQUIRE(!s.trivial);
    Expr k = mk_counter(s.counters[0]);
    Expr xv = std::get<Expr>(s.theta.vars.at("x"));
    CHECK(!is_star_value(s.theta.vars.at("x")));
    CHECK(contains_kind(xv, Kind::Ite));
    // Zero iterations leave x alone; any positive count lands the write.
    CHECK(expr_equal(substitute1(xv, k, mk_int(0)), mk_sym("x"),
                     default_solver()));
    CHECK(expr_equal(substitute1(xv, k, mk_int(2)), mk_int(5),
                     default_solver()));
}

TEST_CASE("oscillating variable collapses to unknown") {
    CtxScope scope;
    AnalysisContext cx;
    ProgramGraph p;
    const LoopSummary& s = first_summary(
        "var i : int;\n"
        "i = 1;\nwhile (i < 3) { if (i == 2) { i = 1; } else { i = 2; } }\n"
        "target;\n",
        cx, p);
    REQUIRE(!s.trivial);
    CHECK(is_star_value(s.theta.vars.at("i")));
    // The looping condition survives by interning the unknown-valued guards
    // as free predicate atoms instead of dropping to false.
    CHECK(contains_kind(s.phi, Kind::BoolSym));
    CHECK(check_sat(s.phi, default_solver(), false).status == SmtStatus::Sat);
}

TEST_CASE("array fill produces an exact guarded write chain") {
    CtxScope scope;
    AnalysisContext cx;
    ProgramGraph p;
    const LoopSummary& s = first_summary(
        "var i : int;\nvar n : int;\nvar A : int[10];\n"
        "while (i < n) { A[i] = 7; i = i + 1; }\ntarget;\n",
        cx, p);
    REQUIRE(!s.trivial);
    const ArrayVal& a = std::get<ArrayVal>(s.theta.vars.at("A"));
    REQUIRE(a.body->kind != Kind::Star);
    CHECK(contains_kind(a.body, Kind::Ite));
    Expr k = mk_counter(s.counters[0]);
    // From i=0 with kappa=3 rounds (all guards hold since n=10): cell 1 was
    // written with 7, cell 5 keeps the old A(5).
    std::vector<std::pair<Expr, Expr>> ground = {
        {k, mk_int(3)}, {mk_sym("i"), mk_int(0)}, {mk_sym("n"), mk_int(10)}};
    Expr hit = substitute(apply_array(a, {mk_int(1)}), ground);
    Expr miss = substitute(apply_array(a, {mk_int(5)}), ground);
    CHECK(expr_equal(hit, mk_int(7), default_solver()));
    CHECK(expr_equal(miss, mk_app("A", {mk_int(5)}), default_solver()));
}

TEST_CASE("array write of an unknown-valued variable degrades to unknown") {
    CtxScope scope;
    AnalysisContext cx;
    ProgramGraph p;
    const LoopSummary& s = first_summary(
        "var i : int;\nvar n : int;\nvar j : int;\nvar A : int[10];\n"
        "while (i < n) { A[0] = j; j = j * j; i = i + 1; }\ntarget;\n",
        cx, p);
    REQUIRE(!s.trivial);
    CHECK(is_star_value(s.theta.vars.at("j")));
    CHECK(is_star_value(s.theta.vars.at("A")));
}

TEST_CASE("self-indexed nonlinear store is still exact via the write index") {
    CtxScope scope;
    AnalysisContext cx;
    ProgramGraph p;
    // The stored value i*i is a function of the write position itself, so it
    // is expressible inside the chain as position*position.
    const LoopSummary& s = first_summary(
        "var i : int;\nvar n : int;\nvar A : int[10];\n"
        "while (i < n) { A[i] = i * i; i = i + 1; }\ntarget;\n",
        cx, p);
    REQUIRE(!s.trivial);
    const ArrayVal& a = std::get<ArrayVal>(s.theta.vars.at("A"));
    REQUIRE(a.body->kind != Kind::Star);
    Expr k = mk_counter(s.counters[0]);
    std::vector<std::pair<Expr, Expr>> ground = {
        {k, mk_int(4)}, {mk_sym("i"), mk_int(0)}, {mk_sym("n"), mk_int(10)}};
    CHECK(expr_equal(substitute(apply_array(a, {mk_int(3)}), ground),
                     mk_int(9), default_solver()));
}

TEST_CASE("per-round value at a fixed cell is only position-independent part") {
    CtxScope scope;
    AnalysisContext cx;
    ProgramGraph p;
    // Every round overwrites A[0] with the round-dependent i; the round
    // cannot be recovered from the write position, so that part of the value
    // degrades to an unconstrained term while the chain itself survives.
    const LoopSummary& s = first_summary(
        "var i : int;\nvar n : int;\nvar A : int[10];\n"
        "while (i < n) { A[0] = i; i = i + 1; }\ntarget;\n",
        cx, p);
    REQUIRE(!s.trivial);
    const ArrayVal& a = std::get<ArrayVal>(s.theta.vars.at("A"));
    REQUIRE(a.body->kind != Kind::Star);
    CHECK(contains_kind(a.body, Kind::Star));
}

TEST_CASE("nested rectangular loops: inner count synthesized as max{0,n}") {
    CtxScope scope;
    AnalysisContext cx;
    ProgramGraph p;
    const LoopSummary& s = first_summary(
        "var i : int;\nvar j : int;\nvar n : int;\n"
        "i = 0;\n"
        "while (i < n) { j = 0; while (j < n) { j = j + 1; } i = i + 1; }\n"
        "target;\n",
        cx, p);
    REQUIRE(!s.trivial);
    // Outer summary: i advances by 1, j lands on the synthesized inner
    // iteration count max{0, n} whenever the body ran.
    REQUIRE(s.counters.size() == 1);
    Expr k = mk_counter(s.counters[0]);
    CHECK(equal(std::get<Expr>(s.theta.vars.at("i")), add(mk_sym("i"), k)));
    Expr jv = std::get<Expr>(s.theta.vars.at("j"));
    REQUIRE(jv->kind != Kind::Star);
    Expr once = substitute1(jv, k, mk_int(1));
    CHECK(expr_equal(once, mk_max(mk_int(0), mk_sym("n")), default_solver()));
    // Closure: only the summary's own counters occur free, no parameters.
    std::vector<long long> params;
    collect_ids(s.phi, Kind::Param, params);
    CHECK(params.empty());
    std::vector<long long> counters;
    collect_ids(s.phi, Kind::Counter, counters);
    for (long long c : counters)
        CHECK(std::find(s.counters.begin(), s.counters.end(), c) !=
              s.counters.end());
}

TEST_CASE("nested triangular loops: inner count depends on the round") {
    CtxScope scope;
    AnalysisContext cx;
    ProgramGraph p;
    const LoopSummary& s = first_summary(
        "var i : int;\nvar j : int;\nvar n : int;\n"
        "i = 0;\n"
        "while (i < n) { j = 0; while (j < i) { j = j + 1; } i = i + 1; }\n"
        "target;\n",
        cx, p);
    REQUIRE(!s.trivial);
    Expr k = mk_counter(s.counters[0]);
    Expr jv = std::get<Expr>(s.theta.vars.at("j"));
    REQUIRE(jv->kind != Kind::Star);
    // After kappa rounds starting from i, the last inner run counts to
    // max{0, i + kappa - 1}: from i=0, three rounds leave j = 2.
    Expr v = substitute1(substitute1(jv, k, mk_int(3)), mk_sym("i"), mk_int(0));
    CHECK(expr_equal(v, mk_int(2), default_solver()));
}

TEST_CASE("a body that can never run yields the trivial summary") {
    CtxScope scope;
    AnalysisContext cx;
    ProgramGraph p;
    const LoopSummary& s = first_summary(
        "var i : int;\nvar n : int;\n"
        "while (i < n) { assume(0 < 0); i = i + 1; }\ntarget;\n",
        cx, p);
    CHECK(s.trivial);
}

TEST_CASE("summaries are memoized by induced program text") {
    CtxScope scope;
    AnalysisContext cx;
    ProgramGraph p = normalize(parse_program(
        "var i : int;\nvar n : int;\n"
        "i = 0;\nwhile (i < n) { i = i + 1; }\n"
        "i = 0;\nwhile (i < n) { i = i + 1; }\ntarget;\n"));
    BackboneTree t = build_backbone_tree(p);
    int hits = 0;
    for (int n : t.dfs_order()) {
        auto c = loop_at(t, p, n);
        if (!c) continue;
        const LoopSummary& a = overapproximate_loop(p, *c, cx);
        const LoopSummary& b = overapproximate_loop(p, *c, cx);
        CHECK(&a == &b);
        ++hits;
    }
    CHECK(hits == 2);
    CHECK(cx.memo.size() == 1);
}

TEST_CASE("summary_to_text is deterministic and names every variable") {
    CtxScope scope;
    AnalysisContext cx;
    ProgramGraph p;
    const LoopSummary& s = first_summary(
        "var i : int;\nvar n : int;\n"
        "while (i < n) { i = i + 2; }\ntarget;\n",
        cx, p);
    std::string txt = summary_to_text(s);
    CHECK(txt == summary_to_text(s));
    CHECK(txt.find("phi = ") != std::string::npos);
    CHECK(txt.find("theta(i)") != std::string::npos);
    CHECK(txt.find("theta(n)") != std::string::npos);
}
