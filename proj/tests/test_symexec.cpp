// Symbolic-execution tests: per-instruction semantics, path-condition
// assembly, executor behavior on loop-free and looping programs, infeasible
// subtree pruning, and summary instantiation metadata.
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

ProgramGraph prog(const std::string& src) {
    return normalize(parse_program(src));
}

Instruction parse_single(const std::string& stmt_src) {
    // Wrap one statement into a tiny program and pull its (unique) non-skip
    // edge; the parse brackets statements with skip edges.
    ProgramGraph p = parse_program("var x : int;\nvar A : int[4];\n" +
                                   stmt_src + "\ntarget;\n");
    for (const auto& edges : p.succ)
        for (const auto& e : edges)
            if (e.instr.k != Instruction::K::Skip) return e.instr;
    return make_skip();
}

}  // namespace

TEST_CASE("skip and assignment semantics") {
    CtxScope scope;
    ProgramGraph p = parse_program("var x : int;\nvar A : int[4];\ntarget;\n");
    AnalysisContext cx(p);
    SymbolicState th = generic_state(p.decls);

    auto [g1, t1] = exec_instruction(make_skip(), th, mk_bool(true), cx);
    CHECK(is_true(g1));
    CHECK(equal(t1.scalar("x"), mk_sym("x")));

    auto [g2, t2] =
        exec_instruction(parse_single("x = x + 3;"), th, mk_bool(true), cx);
    CHECK(is_true(g2));
    CHECK(equal(t2.scalar("x"), add(mk_sym("x"), mk_int(3))));
}

TEST_CASE("array assignment builds an ite write over the old value") {
    CtxScope scope;
    ProgramGraph p = parse_program("var x : int;\nvar A : int[4];\ntarget;\n");
    AnalysisContext cx(p);
    SymbolicState th = generic_state(p.decls);
    auto [g, t2] =
        exec_instruction(parse_single("A[x] = 7;"), th, mk_bool(true), cx);
    CHECK(is_true(g));
    const ArrayVal& a = t2.array("A");
    Expr chi = mk_placeholder(a.params[0]);
    Expr want = ite(rel(CmpOp::Eq, chi, mk_sym("x")), mk_int(7),
                    mk_app("A", {chi}));
    CHECK(equal(a.body, want));
    // Reading back through the lambda: A[x] is now 7.
    CHECK(equal(apply_array(a, {mk_sym("x")}), mk_int(7)));
}

TEST_CASE("assume yields its guard; assert consults validity") {
    CtxScope scope;
    ProgramGraph p = parse_program("var x : int;\nvar A : int[4];\ntarget;\n");
    AnalysisContext cx(p);
    SymbolicState th = generic_state(p.decls);

    auto [g, t] = exec_instruction(parse_single("assume(x < 5);"), th,
                                   mk_bool(true), cx);
    CHECK(equal(g, rel(CmpOp::Lt, mk_sym("x"), mk_int(5))));

    // Assert that follows from the path condition: gamma true.
    auto [g2, t2] = exec_instruction(parse_single("assert(x < 9);"), th,
                                     rel(CmpOp::Lt, mk_sym("x"), mk_int(5)),
                                     cx);
    CHECK(is_true(g2));
    // Assert that does not follow: gamma false (pessimistic side).
    auto [g3, t3] = exec_instruction(parse_single("assert(x < 3);"), th,
                                     rel(CmpOp::Lt, mk_sym("x"), mk_int(5)),
                                     cx);
    CHECK(is_false(g3));
}

TEST_CASE("loop-free execution fills Psi and Theta along paths") {
    CtxScope scope;
    ProgramGraph p = prog(
        "var x : int;\n"
        "if (x < 0) { x = 0 - x; }\n"
        "target;\n");
    AnalysisContext cx(p);
    BackboneTree t = build_backbone_tree(p);
    execute_backbone_tree(t, p, generic_state(p.decls), cx);
    REQUIRE(!t.empty());
    CHECK(is_true(t.psi.at(0)));
    auto lv = t.leaves();
    REQUIRE(lv.size() == 2);
    // One leaf negated x, the other kept it.
    Expr a = t.theta.at(lv[0]).scalar("x");
    Expr b = t.theta.at(lv[1]).scalar("x");
    bool negated_first = equal(a, neg(mk_sym("x")));
    CHECK((negated_first ? equal(b, mk_sym("x")) : equal(a, mk_sym("x"))));
}

TEST_CASE("infeasible subtrees are pruned by the throttled checks") {
    CtxScope scope;
    ProgramGraph p = prog(
        "var x : int;\n"
        "assume(x > 4);\n"
        "if (x < 2) { target; }\n"
        "skip;\n");
    AnalysisContext cx(p);
    BackboneTree t = build_backbone_tree(p);
    execute_backbone_tree(t, p, generic_state(p.decls), cx);
    CHECK(t.empty());  // the only path to target is contradictory
    CHECK(cx.pruned >= 1);
    CHECK(cx.solver_checks >= 1);
}

TEST_CASE("pc_of wraps loop entries in existential counter closures") {
    CtxScope scope;
    ProgramGraph p = prog(
        "var i : int;\n"
        "var n : int;\n"
        "i = 0;\n"
        "while (i < n) { i = i + 1; }\n"
        "target;\n");
    AnalysisContext cx(p);
    BackboneTree t = build_backbone_tree(p);
    execute_backbone_tree(t, p, generic_state(p.decls), cx);
    REQUIRE(!t.empty());
    REQUIRE(t.loop_entries.size() == 1);
    int entry = t.loop_entries.begin()->first;
    const auto& info = t.loop_entries.begin()->second;
    REQUIRE(info.counters.size() == 1);
    CHECK(info.taus.size() == 1);
    CHECK(info.bodies.size() == 1);
    // Psi at the entry is the forall form over the matrix.
    CHECK(t.psi.at(entry)->kind == Kind::Forall);
    // pc through the entry existentially closes the counter.
    Expr pc = pc_of(t, entry, mk_bool(true));
    CHECK(contains_kind(pc, Kind::Exists));
    std::vector<long long> free_counters;
    collect_ids(pc, Kind::Counter, free_counters);
    CHECK(free_counters.empty());
    // pc_hat_at at the root is the identity wrapper.
    CHECK(is_true(pc_hat_at(t, 0, mk_bool(true))));
}

TEST_CASE("summary instantiation freshens counters per entry") {
    CtxScope scope;
    // The same loop twice: the memoized summary must be instantiated with
    // distinct counters at each entry.
    ProgramGraph p = prog(
        "var i : int;\n"
        "var n : int;\n"
        "i = 0;\n"
        "while (i < n) { i = i + 1; }\n"
        "i = 0;\n"
        "while (i < n) { i = i + 1; }\n"
        "target;\n");
    AnalysisContext cx(p);
    BackboneTree t = build_backbone_tree(p);
    execute_backbone_tree(t, p, generic_state(p.decls), cx);
    REQUIRE(!t.empty());
    REQUIRE(t.loop_entries.size() == 2);
    auto it = t.loop_entries.begin();
    auto c1 = it->second.counters;
    auto c2 = std::next(it)->second.counters;
    REQUIRE(c1.size() == 1);
    REQUIRE(c2.size() == 1);
    CHECK(c1[0] != c2[0]);
    CHECK(cx.memo.size() == 1);  // one summary, reused
}

TEST_CASE("psi_to_text is deterministic") {
    CtxScope scope;
    ProgramGraph p = prog(
        "var x : int;\n"
        "if (x < 0) { x = 1; }\n"
        "target;\n");
    AnalysisContext cx(p);
    BackboneTree t = build_backbone_tree(p);
    execute_backbone_tree(t, p, generic_state(p.decls), cx);
    std::string a = psi_to_text(t, p);
    CHECK(a == psi_to_text(t, p));
    CHECK(a.find("Psi ") != std::string::npos);
    CHECK(a.find("Theta ") != std::string::npos);
}
