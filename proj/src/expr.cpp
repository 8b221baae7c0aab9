// SPDX-License-Identifier: MIT
#include "apc/expr.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

namespace apc {

// ---------------------------------------------------------------------------
// context
// ---------------------------------------------------------------------------

static thread_local ExprContext g_default_ctx;
static thread_local ExprContext* g_ctx = nullptr;

ExprContext& ctx() { return g_ctx ? *g_ctx : g_default_ctx; }

CtxScope::CtxScope() : prev_(g_ctx) { g_ctx = &context; }
CtxScope::~CtxScope() { g_ctx = prev_; }

Expr ExprContext::star_prop_for(const std::string& key) {
    auto it = star_props.find(key);
    if (it != star_props.end()) return it->second;
    Expr p = mk_bsym("star_p" + std::to_string(next_star_prop++));
    star_props.emplace(key, p);
    return p;
}

long long euclid_mod(long long a, long long b) {
    if (b == 0) throw std::domain_error("mod by zero");
    long long m = a % b;
    if (m < 0) m += (b < 0 ? -b : b);
    return m;
}

// ---------------------------------------------------------------------------
// hashing / comparison
// ---------------------------------------------------------------------------

static std::size_t hash_combine(std::size_t h, std::size_t v) {
    return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

static std::size_t node_hash(const Node& n) {
    std::size_t h = static_cast<std::size_t>(n.kind) * 0x9e3779b1;
    h = hash_combine(h, std::hash<long long>{}(n.ival));
    h = hash_combine(h, n.bval ? 1 : 0);
    h = hash_combine(h, std::hash<std::string>{}(n.name));
    h = hash_combine(h, static_cast<std::size_t>(n.rel));
    h = hash_combine(h, std::hash<long long>{}(n.lin_const));
    for (const auto& [t, c] : n.terms) {
        h = hash_combine(h, t->hash);
        h = hash_combine(h, std::hash<long long>{}(c));
    }
    for (const auto& k : n.kids) h = hash_combine(h, k->hash);
    for (const auto& b : n.binders) h = hash_combine(h, b->hash);
    return h;
}

static Expr finish(Node n) {
    n.hash = node_hash(n);
    if (n.kind == Kind::Star) n.has_star = true;
    for (const auto& [t, c] : n.terms) n.has_star = n.has_star || t->has_star;
    for (const auto& k : n.kids) n.has_star = n.has_star || k->has_star;
    return std::make_shared<const Node>(std::move(n));
}

int cmp(const Expr& a, const Expr& b) {
    if (a.get() == b.get()) return 0;
    if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
    if (a->hash != b->hash) return a->hash < b->hash ? -1 : 1;
    if (a->ival != b->ival) return a->ival < b->ival ? -1 : 1;
    if (a->bval != b->bval) return a->bval < b->bval ? -1 : 1;
    if (int c = a->name.compare(b->name)) return c < 0 ? -1 : 1;
    if (a->rel != b->rel) return a->rel < b->rel ? -1 : 1;
    if (a->lin_const != b->lin_const) return a->lin_const < b->lin_const ? -1 : 1;
    if (a->terms.size() != b->terms.size())
        return a->terms.size() < b->terms.size() ? -1 : 1;
    for (std::size_t i = 0; i < a->terms.size(); ++i) {
        if (int c = cmp(a->terms[i].first, b->terms[i].first)) return c;
        if (a->terms[i].second != b->terms[i].second)
            return a->terms[i].second < b->terms[i].second ? -1 : 1;
    }
    if (a->kids.size() != b->kids.size()) return a->kids.size() < b->kids.size() ? -1 : 1;
    for (std::size_t i = 0; i < a->kids.size(); ++i)
        if (int c = cmp(a->kids[i], b->kids[i])) return c;
    if (a->binders.size() != b->binders.size())
        return a->binders.size() < b->binders.size() ? -1 : 1;
    for (std::size_t i = 0; i < a->binders.size(); ++i)
        if (int c = cmp(a->binders[i], b->binders[i])) return c;
    return 0;
}

bool equal(const Expr& a, const Expr& b) { return cmp(a, b) == 0; }

// ---------------------------------------------------------------------------
// leaves
// ---------------------------------------------------------------------------

Expr mk_int(long long v) {
    Node n;
    n.kind = Kind::IntConst;
    n.ival = v;
    return finish(std::move(n));
}

Expr mk_bool(bool b) {
    Node n;
    n.kind = Kind::BoolConst;
    n.bval = b;
    return finish(std::move(n));
}

Expr mk_sym(const std::string& name) {
    Node n;
    n.kind = Kind::Sym;
    n.name = name;
    return finish(std::move(n));
}

Expr mk_bsym(const std::string& name) {
    Node n;
    n.kind = Kind::BoolSym;
    n.name = name;
    return finish(std::move(n));
}

Expr mk_star() {
    Node n;
    n.kind = Kind::Star;
    return finish(std::move(n));
}

static Expr mk_id_leaf(Kind k, long long id) {
    Node n;
    n.kind = k;
    n.ival = id;
    return finish(std::move(n));
}

Expr mk_counter(long long id) { return mk_id_leaf(Kind::Counter, id); }
Expr mk_param(long long id) { return mk_id_leaf(Kind::Param, id); }
Expr mk_placeholder(long long id) { return mk_id_leaf(Kind::Placeholder, id); }

// ---------------------------------------------------------------------------
// linear terms
// ---------------------------------------------------------------------------

void lin_decompose(const Expr& e, long long& c0,
                   std::vector<std::pair<Expr, long long>>& out) {
    c0 = 0;
    out.clear();
    if (e->kind == Kind::IntConst) {
        c0 = e->ival;
    } else if (e->kind == Kind::Linear) {
        c0 = e->lin_const;
        out = e->terms;
    } else {
        out.emplace_back(e, 1);
    }
}

static Expr lin_build(long long c0, std::vector<std::pair<Expr, long long>> terms) {
    // Merge equal atoms, drop zero coefficients, keep atoms sorted.
    std::sort(terms.begin(), terms.end(),
              [](const auto& a, const auto& b) { return cmp(a.first, b.first) < 0; });
    std::vector<std::pair<Expr, long long>> merged;
    for (auto& [t, c] : terms) {
        if (!merged.empty() && equal(merged.back().first, t))
            merged.back().second += c;
        else
            merged.emplace_back(t, c);
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const auto& p) { return p.second == 0; }),
                 merged.end());
    if (merged.empty()) return mk_int(c0);
    if (merged.size() == 1 && merged[0].second == 1 && c0 == 0) return merged[0].first;
    Node n;
    n.kind = Kind::Linear;
    n.lin_const = c0;
    n.terms = std::move(merged);
    return finish(std::move(n));
}

Expr add(const Expr& a, const Expr& b) {
    long long ca, cb;
    std::vector<std::pair<Expr, long long>> ta, tb;
    lin_decompose(a, ca, ta);
    lin_decompose(b, cb, tb);
    for (auto& p : tb) ta.push_back(p);
    return lin_build(ca + cb, std::move(ta));
}

Expr mul_const(long long c, const Expr& e) {
    long long c0;
    std::vector<std::pair<Expr, long long>> ts;
    lin_decompose(e, c0, ts);
    for (auto& p : ts) p.second *= c;
    return lin_build(c0 * c, std::move(ts));
}

Expr neg(const Expr& a) { return mul_const(-1, a); }
Expr sub(const Expr& a, const Expr& b) { return add(a, neg(b)); }

Expr mul(const Expr& a, const Expr& b) {
    if (a->kind == Kind::IntConst) return mul_const(a->ival, b);
    if (b->kind == Kind::IntConst) return mul_const(b->ival, a);
    Node n;
    n.kind = Kind::Mul;
    if (cmp(a, b) <= 0)
        n.kids = {a, b};
    else
        n.kids = {b, a};
    return finish(std::move(n));
}

Expr mk_mod(const Expr& a, const Expr& b) {
    if (a->kind == Kind::IntConst && b->kind == Kind::IntConst && b->ival != 0)
        return mk_int(euclid_mod(a->ival, b->ival));
    Node n;
    n.kind = Kind::Mod;
    n.kids = {a, b};
    return finish(std::move(n));
}

Expr mk_max(const Expr& a, const Expr& b) {
    if (a->kind == Kind::IntConst && b->kind == Kind::IntConst)
        return mk_int(std::max(a->ival, b->ival));
    Node n;
    n.kind = Kind::Max;
    n.kids = {a, b};
    return finish(std::move(n));
}

Expr max0(const Expr& e) { return mk_max(mk_int(0), e); }

Expr mk_app(const std::string& name, const std::vector<Expr>& args) {
    Node n;
    n.kind = Kind::App;
    n.name = name;
    n.kids = args;
    return finish(std::move(n));
}

// ---------------------------------------------------------------------------
// formulas
// ---------------------------------------------------------------------------

bool is_bool_expr(const Expr& e) {
    switch (e->kind) {
        case Kind::BoolConst:
        case Kind::BoolSym:
        case Kind::Rel:
        case Kind::Not:
        case Kind::And:
        case Kind::Or:
        case Kind::Implies:
        case Kind::Forall:
        case Kind::Exists:
            return true;
        case Kind::Ite:
            return is_bool_expr(e->kids[1]);
        default:
            return false;
    }
}

// Renders the pre-collapse predicate "d OP 0" (with the star still inside)
// so that structurally identical star predicates share one star_p symbol.
static std::string star_key(RelOp op, const Expr& d);

static Expr mk_rel_node(RelOp op, const Expr& d) {
    Node n;
    n.kind = Kind::Rel;
    n.rel = op;
    n.kids = {d};
    return finish(std::move(n));
}

// d OP 0 with constant folding, sign normalization and star interning.
static Expr rel0(RelOp op, Expr d) {
    if (d->kind == Kind::IntConst) {
        long long v = d->ival;
        switch (op) {
            case RelOp::Eq: return mk_bool(v == 0);
            case RelOp::Ne: return mk_bool(v != 0);
            case RelOp::Lt: return mk_bool(v < 0);
            case RelOp::Le: return mk_bool(v <= 0);
        }
    }
    if ((op == RelOp::Eq || op == RelOp::Ne)) {
        // Canonical sign: first atom's coefficient positive.
        long long c0;
        std::vector<std::pair<Expr, long long>> ts;
        lin_decompose(d, c0, ts);
        if (!ts.empty() && ts[0].second < 0) d = neg(d);
    }
    if (d->has_star) return ctx().star_prop_for(star_key(op, d));
    return mk_rel_node(op, d);
}

Expr rel(CmpOp op, const Expr& a, const Expr& b) {
    switch (op) {
        case CmpOp::Eq: return rel0(RelOp::Eq, sub(a, b));
        case CmpOp::Ne: return rel0(RelOp::Ne, sub(a, b));
        case CmpOp::Lt: return rel0(RelOp::Lt, sub(a, b));
        case CmpOp::Le: return rel0(RelOp::Le, sub(a, b));
        case CmpOp::Gt: return rel0(RelOp::Lt, sub(b, a));
        case CmpOp::Ge: return rel0(RelOp::Le, sub(b, a));
    }
    throw std::logic_error("bad CmpOp");
}

Expr mk_not(const Expr& a) {
    if (a->kind == Kind::BoolConst) return mk_bool(!a->bval);
    if (a->kind == Kind::Not) return a->kids[0];
    if (a->kind == Kind::Rel) {
        const Expr& d = a->kids[0];
        switch (a->rel) {
            case RelOp::Eq: return rel0(RelOp::Ne, d);
            case RelOp::Ne: return rel0(RelOp::Eq, d);
            case RelOp::Lt: return rel0(RelOp::Le, neg(d));  // !(d<0) == -d<=0
            case RelOp::Le: return rel0(RelOp::Lt, neg(d));  // !(d<=0) == -d<0
        }
    }
    Node n;
    n.kind = Kind::Not;
    n.kids = {a};
    return finish(std::move(n));
}

static Expr mk_nary(Kind kind, std::vector<Expr> xs) {
    const bool is_and = kind == Kind::And;
    std::vector<Expr> flat;
    for (auto& x : xs) {
        if (x->kind == kind) {
            for (const auto& k : x->kids) flat.push_back(k);
        } else if (x->kind == Kind::BoolConst) {
            if (x->bval != is_and) return mk_bool(!is_and);  // absorbing element
        } else {
            flat.push_back(x);
        }
    }
    // Order-stable dedup.
    std::vector<Expr> out;
    for (auto& x : flat) {
        bool dup = false;
        for (const auto& y : out)
            if (equal(x, y)) {
                dup = true;
                break;
            }
        if (!dup) out.push_back(x);
    }
    if (out.empty()) return mk_bool(is_and);
    if (out.size() == 1) return out[0];
    Node n;
    n.kind = kind;
    n.kids = std::move(out);
    return finish(std::move(n));
}

Expr mk_and(std::vector<Expr> xs) { return mk_nary(Kind::And, std::move(xs)); }
Expr mk_or(std::vector<Expr> xs) { return mk_nary(Kind::Or, std::move(xs)); }
Expr mk_and2(const Expr& a, const Expr& b) { return mk_and({a, b}); }
Expr mk_or2(const Expr& a, const Expr& b) { return mk_or({a, b}); }

Expr implies(const Expr& a, const Expr& b) {
    if (is_true(a)) return b;
    if (is_false(a)) return mk_bool(true);
    if (is_true(b)) return mk_bool(true);
    if (is_false(b)) return mk_not(a);
    Node n;
    n.kind = Kind::Implies;
    n.kids = {a, b};
    return finish(std::move(n));
}

static Expr mk_ite_impl(const Expr& c, const Expr& t, const Expr& e, bool raw) {
    (void)raw;
    if (is_true(c)) return t;
    if (is_false(c)) return e;
    if (equal(t, e)) return t;
    Node n;
    n.kind = Kind::Ite;
    n.kids = {c, t, e};
    return finish(std::move(n));
}

Expr ite(const Expr& c, const Expr& t, const Expr& e) {
    return mk_ite_impl(c, t, e, false);
}
Expr ite_raw(const Expr& c, const Expr& t, const Expr& e) {
    return mk_ite_impl(c, t, e, true);
}

Expr starify(const Expr& e) {
    return (e->has_star && !is_bool_expr(e)) ? mk_star() : e;
}

static Expr mk_quant(Kind kind, std::vector<Expr> binders, const Expr& body) {
    if (body->kind == Kind::BoolConst || binders.empty()) return body;
    Node n;
    n.kind = kind;
    n.binders = std::move(binders);
    n.kids = {body};
    return finish(std::move(n));
}

Expr forall(std::vector<Expr> binders, const Expr& body) {
    return mk_quant(Kind::Forall, std::move(binders), body);
}
Expr exists(std::vector<Expr> binders, const Expr& body) {
    return mk_quant(Kind::Exists, std::move(binders), body);
}

// ---------------------------------------------------------------------------
// traversal
// ---------------------------------------------------------------------------

namespace {
template <typename F>
void walk(const Expr& e, std::vector<Expr>& bound, F&& f) {
    f(e, bound);
    if (e->kind == Kind::Forall || e->kind == Kind::Exists) {
        std::size_t base = bound.size();
        for (const auto& b : e->binders) bound.push_back(b);
        walk(e->kids[0], bound, f);
        bound.resize(base);
        return;
    }
    for (const auto& [t, c] : e->terms) walk(t, bound, f);
    for (const auto& k : e->kids) walk(k, bound, f);
}

bool is_bound(const Expr& e, const std::vector<Expr>& bound) {
    for (const auto& b : bound)
        if (equal(b, e)) return true;
    return false;
}
}  // namespace

void collect_syms(const Expr& e, std::map<std::string, int>& scalars,
                  std::map<std::string, int>& arrays) {
    std::vector<Expr> bound;
    walk(e, bound, [&](const Expr& n, const std::vector<Expr>&) {
        if (n->kind == Kind::Sym) scalars.emplace(n->name, 0);
        if (n->kind == Kind::App) arrays.emplace(n->name, (int)n->kids.size());
    });
}

void collect_ids(const Expr& e, Kind kind, std::vector<long long>& ids) {
    std::set<long long> seen;
    std::vector<Expr> bound;
    walk(e, bound, [&](const Expr& n, const std::vector<Expr>& bnd) {
        if (n->kind == kind && !is_bound(n, bnd) && seen.insert(n->ival).second)
            ids.push_back(n->ival);
    });
}

bool contains_kind(const Expr& e, Kind kind) {
    bool found = false;
    std::vector<Expr> bound;
    walk(e, bound, [&](const Expr& n, const std::vector<Expr>& bnd) {
        if (n->kind == kind && !is_bound(n, bnd)) found = true;
    });
    return found;
}

bool contains_sym(const Expr& e, const std::string& name) {
    bool found = false;
    std::vector<Expr> bound;
    walk(e, bound, [&](const Expr& n, const std::vector<Expr>&) {
        if ((n->kind == Kind::Sym || n->kind == Kind::App) && n->name == name)
            found = true;
    });
    return found;
}

bool contains_atom(const Expr& e, const Expr& atom) {
    bool found = false;
    std::vector<Expr> bound;
    walk(e, bound, [&](const Expr& n, const std::vector<Expr>& bnd) {
        if (equal(n, atom) && !is_bound(n, bnd)) found = true;
    });
    return found;
}

// ---------------------------------------------------------------------------
// substitution
// ---------------------------------------------------------------------------

// Rebuild a node from (possibly) new children so canonicalization reruns.
Expr rebuild(const Expr& e, const std::function<Expr(const Expr&)>& f) {
    switch (e->kind) {
        case Kind::IntConst:
        case Kind::BoolConst:
        case Kind::Sym:
        case Kind::BoolSym:
        case Kind::Star:
        case Kind::Counter:
        case Kind::Param:
        case Kind::Placeholder:
            return e;
        case Kind::Linear: {
            Expr acc = mk_int(e->lin_const);
            for (const auto& [t, c] : e->terms) acc = add(acc, mul_const(c, f(t)));
            return acc;
        }
        case Kind::Mul: return mul(f(e->kids[0]), f(e->kids[1]));
        case Kind::Mod: return mk_mod(f(e->kids[0]), f(e->kids[1]));
        case Kind::Max: return mk_max(f(e->kids[0]), f(e->kids[1]));
        case Kind::App: {
            std::vector<Expr> args;
            for (const auto& k : e->kids) args.push_back(f(k));
            return mk_app(e->name, args);
        }
        case Kind::Rel: return rel0(e->rel, f(e->kids[0]));
        case Kind::Not: return mk_not(f(e->kids[0]));
        case Kind::And: {
            std::vector<Expr> xs;
            for (const auto& k : e->kids) xs.push_back(f(k));
            return mk_and(std::move(xs));
        }
        case Kind::Or: {
            std::vector<Expr> xs;
            for (const auto& k : e->kids) xs.push_back(f(k));
            return mk_or(std::move(xs));
        }
        case Kind::Implies: return implies(f(e->kids[0]), f(e->kids[1]));
        case Kind::Ite: {
            return ite(f(e->kids[0]), f(e->kids[1]), f(e->kids[2]));
        }
        case Kind::Forall: return forall(e->binders, f(e->kids[0]));
        case Kind::Exists: return exists(e->binders, f(e->kids[0]));
    }
    throw std::logic_error("rebuild: bad kind");
}

Expr substitute(const Expr& e, const std::vector<std::pair<Expr, Expr>>& subst) {
    if (subst.empty()) return e;
    std::function<Expr(const Expr&)> go = [&](const Expr& n) -> Expr {
        for (const auto& [from, to] : subst)
            if (equal(n, from)) return to;
        return rebuild(n, go);
    };
    return go(e);
}

Expr substitute1(const Expr& e, const Expr& from, const Expr& to) {
    return substitute(e, {{from, to}});
}

Expr rename_atoms(const Expr& e, const std::vector<std::pair<Expr, Expr>>& subst) {
    if (subst.empty()) return e;
    auto map_atom = [&](const Expr& n) -> Expr {
        for (const auto& [from, to] : subst)
            if (equal(n, from)) return to;
        return n;
    };
    std::function<Expr(const Expr&)> go = [&](const Expr& n) -> Expr {
        if (n->kind == Kind::Forall || n->kind == Kind::Exists) {
            std::vector<Expr> bs;
            bs.reserve(n->binders.size());
            for (const auto& b : n->binders) bs.push_back(map_atom(b));
            Expr body = go(n->kids[0]);
            return n->kind == Kind::Forall ? forall(std::move(bs), body)
                                           : exists(std::move(bs), body);
        }
        for (const auto& [from, to] : subst)
            if (equal(n, from)) return to;
        return rebuild(n, go);
    };
    return go(e);
}

Expr factor_replace(const Expr& e, const Expr& h, const Expr& g) {
    long long hc;
    std::vector<std::pair<Expr, long long>> hterms;
    lin_decompose(h, hc, hterms);

    std::function<Expr(const Expr&)> go = [&](const Expr& n) -> Expr {
        if (equal(n, h)) return g;
        Expr r = rebuild(n, go);
        if (hterms.empty()) return r;
        // Try to factor mu*h out of r's linear normal form.
        long long rc;
        std::vector<std::pair<Expr, long long>> rterms;
        lin_decompose(r, rc, rterms);
        if (rterms.empty()) return r;
        auto coeff_of = [&](const Expr& atom) -> long long {
            for (const auto& [t, c] : rterms)
                if (equal(t, atom)) return c;
            return 0;
        };
        long long a0 = hterms[0].second;
        long long c0 = coeff_of(hterms[0].first);
        if (c0 == 0 || c0 % a0 != 0) return r;
        long long mu = c0 / a0;
        if (mu == 0) return r;
        for (const auto& [t, a] : hterms)
            if (coeff_of(t) != mu * a) return r;
        return add(sub(r, mul_const(mu, h)), mul_const(mu, g));
    };
    return go(e);
}

Expr tau_substitute(const Expr& e, const Expr& h, const Expr& g) {
    std::vector<long long> params;
    collect_ids(e, Kind::Param, params);
    collect_ids(h, Kind::Param, params);
    Expr r = factor_replace(e, h, g);
    std::set<long long> uniq(params.begin(), params.end());
    std::vector<std::pair<Expr, Expr>> wipe;
    for (long long id : uniq) wipe.emplace_back(mk_param(id), mk_star());
    return substitute(r, wipe);
}

// ---------------------------------------------------------------------------
// rendering
// ---------------------------------------------------------------------------

static void render(const Expr& e, std::ostream& os);

static void render_term_list(std::ostream& os, long long c0,
                             const std::vector<std::pair<Expr, long long>>& ts,
                             bool emit_zero) {
    bool first = true;
    for (const auto& [t, c] : ts) {
        if (!first) os << " + ";
        first = false;
        if (c == 1) {
            render(t, os);
        } else {
            os << c << "*";
            render(t, os);
        }
    }
    if (c0 != 0 || first) {
        if (!first) os << " + ";
        os << c0;
    } else {
        (void)emit_zero;
    }
}

static const char* rel_text(RelOp op) {
    switch (op) {
        case RelOp::Eq: return "==";
        case RelOp::Ne: return "!=";
        case RelOp::Lt: return "<";
        case RelOp::Le: return "<=";
    }
    return "?";
}

static void render(const Expr& e, std::ostream& os) {
    switch (e->kind) {
        case Kind::IntConst: os << e->ival; return;
        case Kind::BoolConst: os << (e->bval ? "true" : "false"); return;
        case Kind::Sym:
        case Kind::BoolSym: os << e->name; return;
        case Kind::Star: os << "star"; return;
        case Kind::Counter: os << "k" << e->ival; return;
        case Kind::Param: os << "t" << e->ival; return;
        case Kind::Placeholder: os << "x" << e->ival; return;
        case Kind::Linear:
            render_term_list(os, e->lin_const, e->terms, true);
            return;
        case Kind::Mul:
            os << "(";
            render(e->kids[0], os);
            os << " * ";
            render(e->kids[1], os);
            os << ")";
            return;
        case Kind::Mod:
            os << "(";
            render(e->kids[0], os);
            os << " mod ";
            render(e->kids[1], os);
            os << ")";
            return;
        case Kind::Max:
            os << "max(";
            render(e->kids[0], os);
            os << ", ";
            render(e->kids[1], os);
            os << ")";
            return;
        case Kind::App: {
            os << e->name << "(";
            bool first = true;
            for (const auto& a : e->kids) {
                if (!first) os << ", ";
                first = false;
                render(a, os);
            }
            os << ")";
            return;
        }
        case Kind::Rel: {
            // Split d OP 0 into lhs OP rhs with positive coefficients on both
            // sides for readability: d = pos - neg + c.
            long long c0;
            std::vector<std::pair<Expr, long long>> ts;
            lin_decompose(e->kids[0], c0, ts);
            std::vector<std::pair<Expr, long long>> pos, negs;
            for (const auto& [t, c] : ts)
                (c > 0 ? pos : negs).emplace_back(t, c > 0 ? c : -c);
            long long lc = c0 > 0 ? c0 : 0, rc = c0 < 0 ? -c0 : 0;
            render_term_list(os, lc, pos, pos.empty());
            os << " " << rel_text(e->rel) << " ";
            render_term_list(os, rc, negs, negs.empty());
            return;
        }
        case Kind::Not:
            os << "!(";
            render(e->kids[0], os);
            os << ")";
            return;
        case Kind::And:
        case Kind::Or: {
            os << "(";
            bool first = true;
            for (const auto& k : e->kids) {
                if (!first) os << (e->kind == Kind::And ? " && " : " || ");
                first = false;
                render(k, os);
            }
            os << ")";
            return;
        }
        case Kind::Implies:
            os << "(";
            render(e->kids[0], os);
            os << " -> ";
            render(e->kids[1], os);
            os << ")";
            return;
        case Kind::Ite:
            os << "ite(";
            render(e->kids[0], os);
            os << ", ";
            render(e->kids[1], os);
            os << ", ";
            render(e->kids[2], os);
            os << ")";
            return;
        case Kind::Forall:
        case Kind::Exists: {
            os << (e->kind == Kind::Forall ? "forall (" : "exists (");
            bool first = true;
            for (const auto& b : e->binders) {
                if (!first) os << " ";
                first = false;
                render(b, os);
            }
            os << ") (";
            render(e->kids[0], os);
            os << ")";
            return;
        }
    }
}

std::string to_text(const Expr& e) {
    std::ostringstream os;
    render(e, os);
    return os.str();
}

static std::string star_key(RelOp op, const Expr& d) {
    std::ostringstream os;
    os << rel_text(op) << "|";
    render(d, os);
    return os.str();
}

}  // namespace apc
