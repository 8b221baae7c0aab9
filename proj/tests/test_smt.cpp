// SMT backend tests: emission, solver round-trips, model parsing (including
// function graphs), async racing handles, and star declaration handling.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "apc/expr.hpp"
#include "apc/smt.hpp"

using namespace apc;

namespace {
struct PoolGuard {
    ~PoolGuard() { shutdown_solver_pool(); }
} pool_guard;
}  // namespace

TEST_CASE("emit_script declares free symbols by kind") {
    CtxScope scope;
    Expr e = mk_and2(rel(CmpOp::Lt, mk_sym("x"), mk_int(3)),
                     rel(CmpOp::Eq, mk_app("A", {mk_sym("x"), mk_int(0)}),
                         mk_sym("y")));
    std::string s = emit_script(e, false);
    CHECK(s.find("(declare-const x Int)") != std::string::npos);
    CHECK(s.find("(declare-const y Int)") != std::string::npos);
    CHECK(s.find("(declare-fun A (Int Int) Int)") != std::string::npos);
    CHECK(s.find("(check-sat)") != std::string::npos);
    // Bound variables are not declared.
    Expr t = mk_param(1);
    std::string s2 = emit_script(
        forall({t}, implies(rel(CmpOp::Le, mk_int(0), t),
                            rel(CmpOp::Lt, t, mk_sym("n")))),
        false);
    CHECK(s2.find("(declare-const n Int)") != std::string::npos);
    CHECK(s2.find("forall") != std::string::npos);
}

TEST_CASE("check_sat decides simple formulas and returns models") {
    CtxScope scope;
    SolverConfig cfg = default_solver();
    Expr x = mk_sym("x");
    SmtOutcome sat = check_sat(
        mk_and2(rel(CmpOp::Lt, mk_int(5), x), rel(CmpOp::Lt, x, mk_int(7))),
        cfg, true);
    REQUIRE(sat.status == SmtStatus::Sat);
    REQUIRE(sat.model.has_value());
    CHECK(sat.model->int_or("x", -1) == 6);
    SmtOutcome unsat = check_sat(
        mk_and2(rel(CmpOp::Lt, x, mk_int(0)), rel(CmpOp::Lt, mk_int(0), x)),
        cfg, false);
    CHECK(unsat.status == SmtStatus::Unsat);
}

TEST_CASE("check_valid and expr_equal") {
    CtxScope scope;
    SolverConfig cfg = default_solver();
    Expr x = mk_sym("x");
    CHECK(check_valid(mk_or2(rel(CmpOp::Le, x, mk_int(0)),
                             rel(CmpOp::Ge, x, mk_int(0))),
                      cfg) == Validity::Valid);
    CHECK(check_valid(rel(CmpOp::Le, x, mk_int(0)), cfg) ==
          Validity::NotValid);
    CHECK(expr_equal(add(x, x), mul_const(2, x), cfg));
    CHECK(!expr_equal(add(x, mk_int(1)), x, cfg));
}

TEST_CASE("uninterpreted function models evaluate through the closure") {
    CtxScope scope;
    SolverConfig cfg = default_solver();
    Expr A0 = mk_app("A", {mk_int(0)});
    Expr A1 = mk_app("A", {mk_int(1)});
    SmtOutcome out = check_sat(
        mk_and2(rel(CmpOp::Eq, A0, mk_int(72)), rel(CmpOp::Eq, A1, mk_int(101))),
        cfg, true);
    REQUIRE(out.status == SmtStatus::Sat);
    REQUIRE(out.model.has_value());
    const FnModel& f = out.model->funcs.at("A");
    REQUIRE(f.eval);
    CHECK(f.eval({0}) == 72);
    CHECK(f.eval({1}) == 101);
}

TEST_CASE("star terms become fresh unconstrained constants") {
    CtxScope scope;
    SolverConfig cfg = default_solver();
    // x == star is satisfiable for any x: star is a free constant.
    Expr e = mk_and2(rel(CmpOp::Eq, mk_sym("x"), mk_int(42)),
                     rel(CmpOp::Lt, mk_star(), mk_sym("x")));
    // The atomic predicate with star interned to a proposition; the script
    // declares it as a Bool constant and remains satisfiable.
    SmtOutcome out = check_sat(e, cfg, false);
    CHECK(out.status == SmtStatus::Sat);
}

TEST_CASE("mod emission follows SMT-LIB euclidean semantics") {
    CtxScope scope;
    SolverConfig cfg = default_solver();
    Expr e = rel(CmpOp::Eq, mk_mod(mk_sym("x"), mk_int(3)), mk_int(2));
    Expr with_neg = mk_and2(e, rel(CmpOp::Eq, mk_sym("x"), mk_int(-7)));
    CHECK(check_sat(with_neg, cfg, false).status == SmtStatus::Sat);
}

TEST_CASE("async checks race and cancel") {
    CtxScope scope;
    SolverConfig cfg = default_solver();
    Expr x = mk_sym("x");
    std::string s1 = emit_script(rel(CmpOp::Eq, x, mk_int(1)), false);
    std::string s2 = emit_script(
        mk_and2(rel(CmpOp::Lt, x, mk_int(0)), rel(CmpOp::Lt, mk_int(0), x)),
        false);
    AsyncCheck a = start_script(s1, cfg, false);
    AsyncCheck b = start_script(s2, cfg, false);
    SmtOutcome ra = a.join();
    SmtOutcome rb = b.join();
    CHECK(ra.status == SmtStatus::Sat);
    CHECK(rb.status == SmtStatus::Unsat);
    AsyncCheck c = start_script(s1, cfg, false);
    c.cancel();  // must not crash or deadlock
    long long q0 = solver_query_count();
    check_sat(rel(CmpOp::Eq, x, mk_int(2)), cfg, false);
    CHECK(solver_query_count() > q0);
}

TEST_CASE("run_script handles raw scripts with extra assertions") {
    CtxScope scope;
    SolverConfig cfg = default_solver();
    Expr e = rel(CmpOp::Lt, mk_sym("n"), mk_int(10));
    std::string extra = "(assert (> n 8))";
    SmtOutcome out = check_sat(e, cfg, true, extra);
    REQUIRE(out.status == SmtStatus::Sat);
    CHECK(out.model->int_or("n", -1) == 9);
}
