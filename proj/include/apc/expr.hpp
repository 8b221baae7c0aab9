// SPDX-License-Identifier: MIT
//
// Immutable symbolic expression kernel: linear integer arithmetic over
// scalar symbols, array applications, path counters k<N>, parameters t<N>,
// placeholders x<N>, the collapsing unknown `star`, ite / max / mod nodes,
// and first-order connectives with bounded quantifiers.
//
// Construction canonicalizes: sums are kept in linear normal form, relations
// are folded against constants, boolean connectives are flattened, and any
// term that contains `star` collapses to `star` (atomic predicates over such
// terms are interned as fresh propositional symbols star_p<N>).
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace apc {

enum class Kind {
    IntConst,
    BoolConst,
    Sym,         // scalar symbol (program variable's initial value, or artificial)
    BoolSym,     // propositional symbol (star_p<N>)
    Star,        // the collapsing unknown value
    Counter,     // path counter k<id>
    Param,       // parameter t<id>
    Placeholder, // placeholder x<id>
    Linear,      // c0 + sum coeff_i * atom_i
    Mul,         // non-linear product
    Mod,         // Euclidean remainder
    Max,         // max of two terms
    App,         // array application A(e1,...,en)
    Rel,         // d OP 0 where d is kids[0]
    Not,
    And,
    Or,
    Implies,
    Ite,
    Forall,
    Exists,
};

// Relations are normalized so only these four ops appear, applied to (d, 0).
enum class RelOp { Eq, Ne, Lt, Le };

struct Node;
using Expr = std::shared_ptr<const Node>;

struct Node {
    Kind kind;
    long long ival = 0;  // IntConst value; Counter/Param/Placeholder id
    bool bval = false;   // BoolConst
    std::string name;    // Sym, BoolSym, App
    RelOp rel = RelOp::Eq;
    long long lin_const = 0;                        // Linear
    std::vector<std::pair<Expr, long long>> terms;  // Linear: atom -> coeff
    std::vector<Expr> kids;     // operands / App args / quantifier body (last)
    std::vector<Expr> binders;  // Forall/Exists bound atoms
    std::size_t hash = 0;
    bool has_star = false;
};

// ---- total order / equality -------------------------------------------------
int cmp(const Expr& a, const Expr& b);
bool equal(const Expr& a, const Expr& b);
struct ExprLess {
    bool operator()(const Expr& a, const Expr& b) const { return cmp(a, b) < 0; }
};

// ---- leaf constructors ------------------------------------------------------
Expr mk_int(long long v);
Expr mk_bool(bool b);
Expr mk_sym(const std::string& name);
Expr mk_bsym(const std::string& name);
Expr mk_star();
Expr mk_counter(long long id);
Expr mk_param(long long id);
Expr mk_placeholder(long long id);

// ---- term constructors ------------------------------------------------------
Expr add(const Expr& a, const Expr& b);
Expr sub(const Expr& a, const Expr& b);
Expr neg(const Expr& a);
Expr mul_const(long long c, const Expr& e);
Expr mul(const Expr& a, const Expr& b);
Expr mk_mod(const Expr& a, const Expr& b);
Expr mk_max(const Expr& a, const Expr& b);
Expr max0(const Expr& e);
Expr mk_app(const std::string& name, const std::vector<Expr>& args);

// ---- formula constructors ---------------------------------------------------
// rel() accepts the six comparison spellings and normalizes to RelOp.
enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };
Expr rel(CmpOp op, const Expr& a, const Expr& b);
Expr mk_not(const Expr& a);
Expr mk_and(std::vector<Expr> xs);
Expr mk_or(std::vector<Expr> xs);
Expr mk_and2(const Expr& a, const Expr& b);
Expr mk_or2(const Expr& a, const Expr& b);
Expr implies(const Expr& a, const Expr& b);
Expr ite(const Expr& c, const Expr& t, const Expr& e);
// Alias of ite kept for call sites that deliberately embed a star branch
// (the guarded technical star inside iterated array values).
Expr ite_raw(const Expr& c, const Expr& t, const Expr& e);
// Collapse a star-tainted term to the bare star value. Applied at symbolic
// state writes so observable state values follow the collapsing-term rule,
// while formulas keep the pre-collapse structure for star_p interning.
Expr starify(const Expr& e);
Expr forall(std::vector<Expr> binders, const Expr& body);
Expr exists(std::vector<Expr> binders, const Expr& body);

inline bool is_true(const Expr& e) { return e->kind == Kind::BoolConst && e->bval; }
inline bool is_false(const Expr& e) { return e->kind == Kind::BoolConst && !e->bval; }
bool is_bool_expr(const Expr& e);

// ---- linear view ------------------------------------------------------------
// Decompose into constant + atom/coeff list (empty list for constants).
void lin_decompose(const Expr& e, long long& c0,
                   std::vector<std::pair<Expr, long long>>& out);

// ---- traversal --------------------------------------------------------------
// Free occurrences only (quantifier-bound atoms are skipped).
void collect_syms(const Expr& e, std::map<std::string, int>& scalars,
                  std::map<std::string, int>& arrays);
void collect_ids(const Expr& e, Kind kind, std::vector<long long>& ids);
bool contains_kind(const Expr& e, Kind kind);
bool contains_sym(const Expr& e, const std::string& name);
bool contains_atom(const Expr& e, const Expr& atom);

// ---- substitution -----------------------------------------------------------
// Simultaneous replacement of structurally-equal subterms; results are
// re-canonicalized bottom-up.
// Rebuilds a node from children mapped through f, re-running
// canonicalization bottom-up (atoms are returned unchanged).
Expr rebuild(const Expr& e, const std::function<Expr(const Expr&)>& f);

Expr substitute(const Expr& e, const std::vector<std::pair<Expr, Expr>>& subst);
Expr substitute1(const Expr& e, const Expr& from, const Expr& to);
// Like substitute, but also maps matching atoms inside quantifier binder
// lists (alpha-renaming; the replacements must themselves be atoms).
Expr rename_atoms(const Expr& e, const std::vector<std::pair<Expr, Expr>>& subst);

// Linear factoring replacement: rewrite every (sub)term whose linear normal
// form covers h's non-constant part with integer multiplier mu != 0 into
// term - mu*h + mu*g. Does not wipe parameters.
Expr factor_replace(const Expr& e, const Expr& h, const Expr& g);

// Full tau-substitution e{h/g}: factor_replace, then all parameters occurring
// free in e or h become star.
Expr tau_substitute(const Expr& e, const Expr& h, const Expr& g);

// ---- rendering --------------------------------------------------------------
std::string to_text(const Expr& e);

// ---- expression context -----------------------------------------------------
// Thread-local allocator for counter/param/placeholder ids and the registry
// that interns star-containing atomic predicates as star_p<N> symbols
// (shared per structural identity of the pre-collapse predicate).
struct ExprContext {
    long long next_counter = 1;
    long long next_param = 1;
    long long next_placeholder = 1;
    int next_star_prop = 0;
    std::map<std::string, Expr> star_props;

    long long fresh_counter() { return next_counter++; }
    long long fresh_param() { return next_param++; }
    long long fresh_placeholder() { return next_placeholder++; }
    Expr star_prop_for(const std::string& key);
};

ExprContext& ctx();
// Installs a fresh context for the lifetime of the scope (tests, per-run).
struct CtxScope {
    CtxScope();
    ~CtxScope();
    ExprContext context;

private:
    ExprContext* prev_;
};

// Euclidean division helpers (SMT-LIB `mod` semantics).
long long euclid_mod(long long a, long long b);

}  // namespace apc
