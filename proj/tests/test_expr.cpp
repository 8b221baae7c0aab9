// Expression-kernel tests: canonicalization, linear normal form, star
// collapsing and predicate interning, substitution families, and rendering.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "apc/expr.hpp"

using namespace apc;

TEST_CASE("linear canonicalization folds constants and merges terms") {
    CtxScope scope;
    Expr x = mk_sym("x");
    Expr e = add(add(x, mk_int(2)), add(x, mk_int(3)));
    long long c0 = 0;
    std::vector<std::pair<Expr, long long>> terms;
    lin_decompose(e, c0, terms);
    CHECK(c0 == 5);
    REQUIRE(terms.size() == 1);
    CHECK(equal(terms[0].first, x));
    CHECK(terms[0].second == 2);
    CHECK(equal(sub(e, e), mk_int(0)));
}

TEST_CASE("relations normalize all six comparison spellings") {
    CtxScope scope;
    Expr x = mk_sym("x"), y = mk_sym("y");
    // a > b and b < a must canonicalize identically.
    CHECK(equal(rel(CmpOp::Gt, x, y), rel(CmpOp::Lt, y, x)));
    CHECK(equal(rel(CmpOp::Ge, x, y), rel(CmpOp::Le, y, x)));
    // Constant relations fold to booleans.
    CHECK(is_true(rel(CmpOp::Lt, mk_int(1), mk_int(2))));
    CHECK(is_false(rel(CmpOp::Eq, mk_int(1), mk_int(2))));
}

TEST_CASE("boolean connectives simplify units") {
    CtxScope scope;
    Expr p = rel(CmpOp::Lt, mk_sym("x"), mk_int(0));
    CHECK(equal(mk_and2(mk_bool(true), p), p));
    CHECK(is_false(mk_and2(mk_bool(false), p)));
    CHECK(equal(mk_or2(mk_bool(false), p), p));
    CHECK(is_true(mk_or2(mk_bool(true), p)));
    CHECK(equal(mk_not(mk_not(p)), p));
    CHECK(equal(implies(mk_bool(true), p), p));
}

TEST_CASE("star taints terms and interns atomic predicates") {
    CtxScope scope;
    Expr s = mk_star();
    CHECK(s->has_star);
    CHECK(add(s, mk_int(1))->has_star);
    CHECK(equal(starify(add(s, mk_int(1))), mk_star()));
    // An atomic predicate over star becomes a propositional symbol, shared
    // per structural identity.
    Expr p1 = rel(CmpOp::Lt, add(s, mk_int(1)), mk_int(3));
    Expr p2 = rel(CmpOp::Lt, add(mk_star(), mk_int(1)), mk_int(3));
    CHECK(p1->kind == Kind::BoolSym);
    CHECK(equal(p1, p2));
    Expr p3 = rel(CmpOp::Lt, s, mk_int(7));
    CHECK(!equal(p1, p3));
}

TEST_CASE("substitute replaces structurally and renormalizes") {
    CtxScope scope;
    Expr x = mk_sym("x"), y = mk_sym("y");
    Expr e = add(mul_const(2, x), mk_int(1));
    Expr r = substitute1(e, x, add(y, mk_int(3)));
    CHECK(equal(r, add(mul_const(2, y), mk_int(7))));
}

TEST_CASE("rename_atoms alpha-renames binder lists") {
    CtxScope scope;
    Expr t = mk_param(100);
    Expr body = implies(rel(CmpOp::Le, mk_int(0), t),
                        rel(CmpOp::Lt, t, mk_sym("n")));
    Expr q = forall({t}, body);
    Expr t2 = mk_param(200);
    Expr q2 = rename_atoms(q, {{t, t2}});
    CHECK(q2->binders.size() == 1);
    CHECK(equal(q2->binders[0], t2));
    CHECK(!contains_atom(q2, t));
}

TEST_CASE("factor_replace rewrites covering linear terms") {
    CtxScope scope;
    Expr k1 = mk_counter(1), k2 = mk_counter(2), g = mk_sym("s");
    Expr h = add(k1, k2);  // rewrite kappa1 + kappa2 -> s
    Expr e = add(add(k1, k2), mk_sym("i"));
    CHECK(equal(factor_replace(e, h, g), add(g, mk_sym("i"))));
    // Multiplier 2: 2*k1 + 2*k2 covers h twice.
    Expr e2 = add(mul_const(2, k1), mul_const(2, k2));
    CHECK(equal(factor_replace(e2, h, g), mul_const(2, g)));
    // Partial cover does not rewrite.
    CHECK(equal(factor_replace(k1, h, g), k1));
}

TEST_CASE("tau_substitute wipes leftover parameters to star") {
    CtxScope scope;
    Expr tau = mk_param(7), other = mk_param(8), g = mk_sym("s");
    Expr e = rel(CmpOp::Lt, add(tau, other), mk_sym("n"));
    Expr r = tau_substitute(e, tau, g);
    // tau became s; the foreign parameter became star, so the atom interned.
    CHECK(r->kind == Kind::BoolSym);
    Expr clean = rel(CmpOp::Lt, add(tau, mk_sym("i")), mk_sym("n"));
    Expr r2 = tau_substitute(clean, tau, g);
    CHECK(equal(r2, rel(CmpOp::Lt, add(g, mk_sym("i")), mk_sym("n"))));
}

TEST_CASE("collect_syms sees through binders and skips bound atoms") {
    CtxScope scope;
    Expr t = mk_param(3);
    Expr e = exists({t}, mk_and2(rel(CmpOp::Eq, mk_app("A", {t}), mk_sym("v")),
                                 rel(CmpOp::Le, mk_int(0), t)));
    std::map<std::string, int> sc, ar;
    collect_syms(e, sc, ar);
    CHECK(sc.count("v") == 1);
    CHECK(ar.at("A") == 1);
    std::vector<long long> ids;
    collect_ids(e, Kind::Param, ids);
    CHECK(ids.empty());  // bound occurrences only
}

TEST_CASE("to_text is deterministic and round-trip stable") {
    CtxScope scope;
    Expr e = ite(rel(CmpOp::Le, mk_counter(1), mk_sym("n")),
                 add(mk_sym("i"), mk_counter(1)), mk_sym("i"));
    CHECK(to_text(e) == to_text(e));
    CHECK(to_text(mk_max(mk_int(0), mk_sym("n"))) ==
          to_text(max0(mk_sym("n"))));
}

TEST_CASE("euclidean mod semantics") {
    CtxScope scope;
    CHECK(euclid_mod(7, 3) == 1);
    CHECK(euclid_mod(-7, 3) == 2);
    CHECK(euclid_mod(-7, -3) == 2);
    CHECK(equal(mk_mod(mk_int(-7), mk_int(3)), mk_int(2)));
}
