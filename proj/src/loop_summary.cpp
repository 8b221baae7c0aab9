// SPDX-License-Identifier: MIT
#include "apc/loop_summary.hpp"

#include <algorithm>
#include <sstream>

namespace apc {
namespace {

// Conjunction of the Psi values along the path root..node (no existential
// counter closure: used after artificial-variable introduction, where the
// nested counters are gone from the formulas).
Expr pc_plain(const BackboneTree& t, int node) {
    std::vector<Expr> parts;
    for (int n = node; n >= 0; n = t.nodes[n].parent) {
        auto it = t.psi.find(n);
        if (it != t.psi.end()) parts.push_back(it->second);
    }
    std::reverse(parts.begin(), parts.end());
    return mk_and(std::move(parts));
}

std::set<long long> ids_of(const Expr& e, Kind k) {
    std::vector<long long> v;
    collect_ids(e, k, v);
    return std::set<long long>(v.begin(), v.end());
}

bool value_is_star(const Value& v) {
    if (std::holds_alternative<Expr>(v))
        return std::get<Expr>(v)->kind == Kind::Star;
    return std::get<ArrayVal>(v).body->kind == Kind::Star;
}

// All alive strict descendants of `node`, preorder.
std::vector<int> descendants_of(const BackboneTree& t, int node) {
    std::vector<int> out, stack(t.nodes[node].kids.rbegin(),
                                t.nodes[node].kids.rend());
    while (!stack.empty()) {
        int n = stack.back();
        stack.pop_back();
        if (!t.alive[n]) continue;
        out.push_back(n);
        for (auto it = t.nodes[n].kids.rbegin(); it != t.nodes[n].kids.rend();
             ++it)
            stack.push_back(*it);
    }
    return out;
}

// ---------------------------------------------------------------------------
// scalar iteration
// ---------------------------------------------------------------------------

// Guard for the jpos-th writer among `writers`: its own counter is positive
// and, when there are competitors, its last firing (located by the other
// writers' iteration counts) is not followed by any competitor firing.
Expr writer_guard(std::size_t jpos,
                  const std::vector<std::pair<int, Expr>>& writers,
                  const std::vector<Expr>& pcs, const InducedAnalysis& ia) {
    int j = writers[jpos].first;
    Expr kj = mk_counter(ia.counters[j]);
    Expr base = rel(CmpOp::Gt, kj, mk_int(0));
    if (writers.size() == 1) return base;
    std::vector<Expr> taus, taups;
    std::vector<std::pair<Expr, Expr>> sub_t, sub_tp;
    std::vector<int> others;
    for (const auto& [r, rho] : writers)
        if (r != j) others.push_back(r);
    for (int r : others) {
        Expr t1 = mk_param(ctx().fresh_param());
        Expr t2 = mk_param(ctx().fresh_param());
        taus.push_back(t1);
        taups.push_back(t2);
        sub_t.emplace_back(mk_counter(ia.counters[r]), t1);
        sub_tp.emplace_back(mk_counter(ia.counters[r]), t2);
    }
    std::vector<Expr> inner;
    for (std::size_t o = 0; o < others.size(); ++o) {
        inner.push_back(rel(CmpOp::Le, mk_int(0), taus[o]));
        inner.push_back(
            rel(CmpOp::Le, taus[o], mk_counter(ia.counters[others[o]])));
    }
    inner.push_back(substitute(pcs[j], sub_t));
    // Strictly-later positions of the competitors: componentwise no decrease
    // and a strict increase in total, still within bounds.
    std::vector<Expr> ante;
    Expr sum1 = mk_int(0), sum2 = mk_int(0);
    for (std::size_t o = 0; o < others.size(); ++o) {
        ante.push_back(rel(CmpOp::Le, taus[o], taups[o]));
        sum1 = add(sum1, taus[o]);
        sum2 = add(sum2, taups[o]);
    }
    ante.push_back(rel(CmpOp::Lt, sum1, sum2));
    for (std::size_t o = 0; o < others.size(); ++o)
        ante.push_back(
            rel(CmpOp::Le, taups[o], mk_counter(ia.counters[others[o]])));
    std::vector<Expr> none_later;
    for (int r : others)
        none_later.push_back(mk_not(substitute(pcs[r], sub_tp)));
    inner.push_back(
        forall(taups, implies(mk_and(std::move(ante)),
                              mk_and(std::move(none_later)))));
    return mk_and2(base, exists(taus, mk_and(std::move(inner))));
}

// The collapsing-term rule at the value level: a path condition consulted
// while materializing a value must not mention a variable whose iterated
// value is still unknown — predicate interning would silently turn the
// unknown into a free proposition inside a concrete-looking value.
bool pc_tainted(const Expr& pc, const SymbolicState& st) {
    std::map<std::string, int> scalars, arrays;
    collect_syms(pc, scalars, arrays);
    for (const auto& m : {scalars, arrays})
        for (const auto& [name, _] : m) {
            auto it = st.vars.find(name);
            if (it != st.vars.end() && value_is_star(it->second)) return true;
        }
    return false;
}

Value iterate_scalar(const std::string& var, const InducedAnalysis& ia,
                     const SymbolicState& theta, const SymbolicState& pc_state,
                     AnalysisContext&) {
    Expr a = mk_sym(var);
    enum { Unchanged, Prog, Writers, Bottom } kind = Unchanged;
    std::vector<std::pair<int, Expr>> incs, writers;
    std::size_t n = ia.leaf_nodes.size();
    for (std::size_t i = 0; i < n && kind != Bottom; ++i) {
        Expr e2 = apply_state(ia.tree.theta.at(ia.leaf_nodes[i]).scalar(var),
                              theta);
        if (equal(e2, a)) continue;
        if (e2->has_star) {
            kind = Bottom;
            break;
        }
        Expr d = sub(e2, a);
        if (!contains_sym(d, var) && !contains_kind(d, Kind::Counter) &&
            !contains_kind(d, Kind::Param)) {
            if (kind == Writers) kind = Bottom;
            else {
                kind = Prog;
                incs.emplace_back(static_cast<int>(i), d);
            }
            continue;
        }
        std::set<long long> cs = ids_of(e2, Kind::Counter);
        bool rho_ok = !contains_sym(e2, var) &&
                      !contains_kind(e2, Kind::Param) &&
                      (cs.empty() || (cs.size() == 1 && *cs.begin() == ia.counters[i]));
        if (rho_ok) {
            if (kind == Prog) kind = Bottom;
            else {
                kind = Writers;
                writers.emplace_back(static_cast<int>(i), e2);
            }
            continue;
        }
        kind = Bottom;
    }
    switch (kind) {
        case Unchanged: return a;
        case Prog: {
            Expr r = a;
            for (const auto& [i, d] : incs)
                r = add(r, mul(d, mk_counter(ia.counters[i])));
            return r;
        }
        case Writers: {
            std::vector<Expr> pcs(n, mk_bool(true));
            for (const auto& [i, rho] : writers) {
                Expr raw = pc_plain(ia.tree, ia.leaf_nodes[i]);
                if (pc_tainted(raw, pc_state)) return mk_star();
                pcs[i] = apply_state(raw, pc_state);
            }
            Expr r = a;
            for (std::size_t jp = writers.size(); jp-- > 0;) {
                // The surviving write of path j happened when that path had
                // completed one round fewer, so its value is taken at the
                // decremented counter (the guard already forces it > 0).
                Expr kj = mk_counter(ia.counters[writers[jp].first]);
                Expr rho = substitute1(writers[jp].second, kj,
                                       sub(kj, mk_int(1)));
                r = ite(writer_guard(jp, writers, pcs, ia), rho, r);
            }
            return r;
        }
        case Bottom: break;
    }
    return mk_star();
}

// ---------------------------------------------------------------------------
// array iteration
// ---------------------------------------------------------------------------

struct ArrWrite {
    int pos;                       // leaf index of the writing path
    std::vector<Expr> v;           // written index, over counters
    std::vector<Expr> w;           // v with counters replaced by taus
    Expr value;                    // written value, over counters
    Expr guard;                    // path pc, state-applied, counters -> taus
};

// Parses a plain write chain ite(chi = i1, v1, ite(chi = i2, v2, ... A(chi)))
// into (index, value) pairs, outermost first. Any other shape fails.
bool parse_chain(const Expr& body, const std::vector<Expr>& chi,
                 const Expr& generic_read,
                 std::vector<std::pair<std::vector<Expr>, Expr>>& out) {
    Expr cur = body;
    while (!equal(cur, generic_read)) {
        if (cur->kind != Kind::Ite) return false;
        Expr cond = cur->kids[0];
        std::vector<Expr> conjs;
        if (cond->kind == Kind::And)
            conjs.assign(cond->kids.begin(), cond->kids.end());
        else
            conjs.push_back(cond);
        if (conjs.size() != chi.size()) return false;
        std::vector<Expr> idx(chi.size());
        std::vector<char> seen(chi.size(), 0);
        for (const Expr& c : conjs) {
            if (c->kind != Kind::Rel || c->rel != RelOp::Eq) return false;
            Expr diff = c->kids[0];  // chi_d - idx_d (some sign)
            long long c0;
            std::vector<std::pair<Expr, long long>> ts;
            lin_decompose(diff, c0, ts);
            int hit = -1;
            long long coeff = 0;
            for (std::size_t d = 0; d < chi.size(); ++d)
                for (const auto& [t, k] : ts)
                    if (equal(t, chi[d])) {
                        if (hit != -1) return false;
                        hit = static_cast<int>(d);
                        coeff = k;
                    }
            if (hit == -1 || (coeff != 1 && coeff != -1) || seen[hit])
                return false;
            // diff = coeff*chi + r = 0  =>  idx = -r/coeff.
            Expr r = sub(diff, mul_const(coeff, chi[hit]));
            idx[hit] = coeff == 1 ? neg(r) : r;
            if (std::any_of(chi.begin(), chi.end(), [&](const Expr& x) {
                    return contains_atom(idx[hit], x);
                }))
                return false;
            seen[hit] = 1;
        }
        out.emplace_back(std::move(idx), cur->kids[1]);
        cur = cur->kids[2];
    }
    return true;
}

// Substitutes w components for chi in a term, then collapses any leftover
// iteration parameters of the term or the index to star.
Expr vec_tau_sub(Expr e, const std::vector<Expr>& w,
                 const std::vector<Expr>& chi) {
    std::set<long long> params = ids_of(e, Kind::Param);
    for (const Expr& wd : w)
        for (long long id : ids_of(wd, Kind::Param)) params.insert(id);
    for (std::size_t d = 0; d < w.size(); ++d)
        e = factor_replace(e, w[d], chi[d]);
    std::vector<std::pair<Expr, Expr>> wipe;
    for (long long id : params) wipe.emplace_back(mk_param(id), mk_star());
    return substitute(e, wipe);
}

struct ArrayFold {
    const InducedAnalysis& ia;
    const AnalysisContext& cx;
    std::string var;
    std::vector<Expr> chi;
    std::vector<ArrWrite> writes;
    std::map<long long, long long> tau_of_counter;  // counter id -> tau id

    Expr kappa_of_tau(long long tau) const {
        for (std::size_t i = 0; i < ia.taus.size(); ++i)
            if (ia.taus[i] == tau) return mk_counter(ia.counters[i]);
        throw std::logic_error("array fold: unknown tau");
    }

    // Constant offset solving w_i(tau) = w_j(tau') with tau' = tau + delta,
    // when every component difference is the same integer. Used by the
    // simplification rules only.
    bool common_shift(std::size_t i, std::size_t j, long long& delta) const {
        bool have = false;
        for (std::size_t d = 0; d < chi.size(); ++d) {
            long long c0;
            std::vector<std::pair<Expr, long long>> ts;
            lin_decompose(sub(writes[i].w[d], writes[j].w[d]), c0, ts);
            if (!ts.empty()) return false;
            if (have && c0 != delta) return false;
            delta = c0;
            have = true;
        }
        return have;
    }

    // True when every write indexes with coefficient exactly 1 on a single
    // shared tau — the precondition of both simplification rules.
    bool single_tau_family(long long& tau) const {
        bool have = false;
        for (const ArrWrite& wr : writes)
            for (const Expr& wd : wr.w) {
                std::set<long long> ps = ids_of(wd, Kind::Param);
                if (ps.size() > 1) return false;
                if (ps.empty()) continue;
                long long t = *ps.begin();
                if (have && t != tau) return false;
                tau = t;
                have = true;
                long long c0;
                std::vector<std::pair<Expr, long long>> ts;
                lin_decompose(wd, c0, ts);
                for (const auto& [a, c] : ts)
                    if (equal(a, mk_param(t)) && c != 1) return false;
            }
        return have;
    }

    // Exclusion over other firings: future (between tau and the bound) or
    // past (between zero and tau).
    Expr exclusion(std::size_t ipos, bool future) const {
        std::set<long long> involved;
        for (const ArrWrite& wr : writes)
            for (const Expr& wd : wr.w)
                for (long long id : ids_of(wd, Kind::Param)) involved.insert(id);
        std::map<long long, Expr> primed;
        std::vector<Expr> binders;
        for (long long id : involved) {
            Expr tp = mk_param(ctx().fresh_param());
            primed[id] = tp;
            binders.push_back(tp);
        }
        std::vector<Expr> ante, body;
        std::set<std::string> seen;
        auto push_unique = [&](std::vector<Expr>& into, const Expr& e) {
            if (seen.insert(to_text(e)).second) into.push_back(e);
        };
        for (std::size_t j = 0; j < writes.size(); ++j) {
            std::vector<long long> tj;
            std::set<long long> tjset;
            for (const Expr& wd : writes[j].w)
                for (long long id : ids_of(wd, Kind::Param))
                    if (tjset.insert(id).second) tj.push_back(id);
            if (!tj.empty()) {
                if (tj.size() == 1) {
                    Expr t = mk_param(tj[0]), tp = primed.at(tj[0]);
                    if (future) {
                        push_unique(ante, rel(CmpOp::Lt, t, tp));
                        push_unique(ante,
                                    rel(CmpOp::Lt, tp, kappa_of_tau(tj[0])));
                    } else {
                        push_unique(ante, rel(CmpOp::Le, mk_int(0), tp));
                        push_unique(ante, rel(CmpOp::Lt, tp, t));
                    }
                } else {
                    Expr s1 = mk_int(0), s2 = mk_int(0);
                    for (long long id : tj) {
                        Expr t = mk_param(id), tp = primed.at(id);
                        if (future) {
                            push_unique(ante, rel(CmpOp::Le, t, tp));
                            push_unique(ante,
                                        rel(CmpOp::Lt, tp, kappa_of_tau(id)));
                        } else {
                            push_unique(ante, rel(CmpOp::Le, mk_int(0), tp));
                            push_unique(ante, rel(CmpOp::Le, tp, t));
                        }
                        s1 = add(s1, t);
                        s2 = add(s2, tp);
                    }
                    push_unique(ante, future ? rel(CmpOp::Lt, s1, s2)
                                             : rel(CmpOp::Lt, s2, s1));
                }
            }
            bool self_const = j == ipos && tj.empty();
            if (self_const) continue;  // same element, same firing: no clash
            std::vector<std::pair<Expr, Expr>> ren;
            for (long long id : tj)
                ren.emplace_back(mk_param(id), primed.at(id));
            std::vector<Expr> eqs;
            for (std::size_t d = 0; d < chi.size(); ++d)
                eqs.push_back(
                    rel(CmpOp::Eq, chi[d], substitute(writes[j].w[d], ren)));
            body.push_back(mk_not(mk_and(std::move(eqs))));
        }
        return forall(std::move(binders),
                      implies(mk_and(std::move(ante)), mk_and(std::move(body))));
    }

    // Membership guard h_i: chi equals the i-th written index at some firing
    // within bounds, no later write hits chi, and the writing path was taken.
    Expr membership(std::size_t ipos, bool with_phi) const {
        const ArrWrite& wr = writes[ipos];
        std::vector<Expr> conj;
        for (std::size_t d = 0; d < chi.size(); ++d)
            conj.push_back(rel(CmpOp::Eq, chi[d], wr.w[d]));
        std::set<long long> strict = ids_of(wr.guard, Kind::Param);
        for (const Expr& wd : wr.w)
            for (long long id : ids_of(wd, Kind::Param)) strict.insert(id);
        Expr phi = with_phi ? exclusion(ipos, true) : mk_bool(true);
        std::set<long long> bound = strict;
        for (long long id : ids_of(phi, Kind::Param)) bound.insert(id);
        std::vector<Expr> binders;
        for (long long tau : ia.taus) {
            if (!bound.count(tau)) continue;
            binders.push_back(mk_param(tau));
            conj.push_back(rel(CmpOp::Le, mk_int(0), mk_param(tau)));
            if (strict.count(tau))
                conj.push_back(rel(CmpOp::Lt, mk_param(tau), kappa_of_tau(tau)));
        }
        if (with_phi) conj.push_back(phi);
        if (!is_true(wr.guard)) conj.push_back(wr.guard);
        return exists(std::move(binders), mk_and(std::move(conj)));
    }

    // Collapsed membership for the boundary rule: the only surviving firing
    // is tau = kappa - 1.
    Expr collapsed(std::size_t ipos, long long tau, bool guarded) const {
        const ArrWrite& wr = writes[ipos];
        Expr last = sub(kappa_of_tau(tau), mk_int(1));
        std::vector<std::pair<Expr, Expr>> at{{mk_param(tau), last}};
        std::vector<Expr> conj;
        for (std::size_t d = 0; d < chi.size(); ++d)
            conj.push_back(rel(CmpOp::Eq, chi[d], substitute(wr.w[d], at)));
        if (!is_true(wr.guard)) conj.push_back(substitute(wr.guard, at));
        if (guarded)
            conj.push_back(rel(CmpOp::Le, mk_int(1), kappa_of_tau(tau)));
        return mk_and(std::move(conj));
    }

    // Value for a write whose right-hand side reads the array itself.
    Expr self_read_value(std::size_t ipos, const Expr& h) const {
        const ArrWrite& wr = writes[ipos];
        const Expr& s = wr.value;
        long long own_counter = ia.counters[wr.pos];
        long long own_tau = ia.taus[wr.pos];
        // Locate a single read a(z) with unit coefficient.
        long long c0;
        std::vector<std::pair<Expr, long long>> ts;
        lin_decompose(s, c0, ts);
        const Expr* app = nullptr;
        for (const auto& [t, c] : ts)
            if (t->kind == Kind::App && t->name == var) {
                if (app || c != 1) return mk_star();
                app = &t;
            }
        if (!app) return mk_star();
        Expr read = *app;
        Expr f = sub(s, read);
        if (contains_sym(f, var) || contains_kind(f, Kind::Counter) ||
            contains_kind(f, Kind::Param))
            return mk_star();
        for (const Expr& z : read->kids)
            if (contains_kind(z, Kind::Param)) return mk_star();
        bool idx_const = true;
        for (const Expr& z : read->kids)
            if (contains_kind(z, Kind::Counter)) idx_const = false;
        if (idx_const) {
            // Repeated updates of one fixed element: f per firing.
            Expr t = add(mul(f, mk_param(own_tau)), read);
            return vec_tau_sub(t, wr.w, chi);
        }
        // Read index linear in the own counter: z*kappa + y per component.
        std::size_t dim = chi.size();
        std::vector<long long> zc(dim), q(dim), p(dim);
        std::vector<Expr> y(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            long long rc;
            std::vector<std::pair<Expr, long long>> rts;
            lin_decompose(read->kids[d], rc, rts);
            long long z = 0;
            for (const auto& [t, c] : rts)
                if (equal(t, mk_counter(own_counter))) z = c;
                else if (contains_kind(t, Kind::Counter)) return mk_star();
            zc[d] = z;
            y[d] = sub(read->kids[d], mul_const(z, mk_counter(own_counter)));
            // p: per-firing step of the written index; q: write/read offset.
            long long vc0, qc0;
            std::vector<std::pair<Expr, long long>> vts, qts;
            Expr stepped = substitute1(wr.v[d], mk_counter(own_counter),
                                       add(mk_counter(own_counter), mk_int(1)));
            lin_decompose(sub(stepped, wr.v[d]), vc0, vts);
            if (!vts.empty()) return mk_star();
            p[d] = vc0;
            lin_decompose(sub(wr.v[d], read->kids[d]), qc0, qts);
            if (!qts.empty() || qc0 == 0) return mk_star();
            q[d] = qc0;
        }
        bool some_pos = false;
        for (std::size_t d = 0; d < dim; ++d) {
            if (p[d] * q[d] < 0) return mk_star();
            if (p[d] * q[d] > 0) some_pos = true;
        }
        if (!some_pos) return mk_star();
        long long maxq = 0;
        for (std::size_t d = 0; d < dim; ++d)
            maxq = std::max(maxq, std::llabs(q[d]));
        // Residue lines: elements on the same line differ by |q| in the read
        // direction; each line accumulates f per revisit from its origin.
        auto line_value = [&](long long j) {
            std::vector<Expr> args;
            for (std::size_t d = 0; d < dim; ++d) {
                long long qh = std::min(std::llabs(q[d]), j);
                args.push_back(add(mul_const(zc[d] * qh,
                                             mk_counter(own_counter)),
                                   y[d]));
            }
            return add(mul(f, mk_counter(own_counter)), mk_app(var, args));
        };
        Expr rho = line_value(maxq - 1 >= 0 ? maxq - 1 : 0);
        for (long long j = maxq - 2; j >= 0; --j) {
            std::vector<Expr> cond;
            for (std::size_t d = 0; d < dim; ++d) {
                long long qh = std::min(std::llabs(q[d]), j);
                cond.push_back(rel(CmpOp::Eq,
                                   mk_mod(read->kids[d],
                                          mk_int(std::llabs(q[d]))),
                                   mk_int(qh)));
            }
            rho = ite(mk_and(std::move(cond)), line_value(j), rho);
        }
        Expr rho_t = substitute1(rho, mk_counter(own_counter),
                                 mk_param(own_tau));
        Expr past = exclusion(ipos, false);
        return ite_raw(mk_and2(h, past), vec_tau_sub(rho_t, wr.w, chi),
                       mk_star());
    }

    Expr write_value(std::size_t ipos, const Expr& h,
                     const std::vector<std::pair<Expr, Expr>>& sub_kt) const {
        const ArrWrite& wr = writes[ipos];
        if (contains_sym(wr.value, var)) return self_read_value(ipos, h);
        return vec_tau_sub(substitute(wr.value, sub_kt), wr.w, chi);
    }
};

Value iterate_array(const std::string& var, int arity,
                    const InducedAnalysis& ia, const SymbolicState& theta,
                    const SymbolicState& pc_state, AnalysisContext& cx) {
    const ArrayVal& gen = theta.array(var);
    ArrayFold fold{ia, cx, var, {}, {}, {}};
    for (long long pid : gen.params) fold.chi.push_back(mk_placeholder(pid));
    std::vector<std::pair<Expr, Expr>> sub_kt;
    for (std::size_t i = 0; i < ia.counters.size(); ++i) {
        sub_kt.emplace_back(mk_counter(ia.counters[i]), mk_param(ia.taus[i]));
        fold.tau_of_counter[ia.counters[i]] = ia.taus[i];
    }
    Expr generic_read = mk_app(var, fold.chi);
    for (std::size_t i = 0; i < ia.leaf_nodes.size(); ++i) {
        int leaf = ia.leaf_nodes[i];
        ArrayVal av = apply_state(ia.tree.theta.at(leaf).array(var), theta);
        Expr body = av.body;
        if (av.params != gen.params) {
            std::vector<std::pair<Expr, Expr>> ren;
            for (std::size_t d = 0; d < av.params.size(); ++d)
                ren.emplace_back(mk_placeholder(av.params[d]), fold.chi[d]);
            body = substitute(body, ren);
        }
        if (body->has_star) return ArrayVal{gen.params, mk_star()};
        std::vector<std::pair<std::vector<Expr>, Expr>> chain;
        if (!parse_chain(body, fold.chi, generic_read, chain))
            return ArrayVal{gen.params, mk_star()};
        if (chain.empty()) continue;
        Expr raw_pc = pc_plain(ia.tree, leaf);
        if (pc_tainted(raw_pc, pc_state)) return ArrayVal{gen.params, mk_star()};
        Expr guard = substitute(apply_state(raw_pc, pc_state), sub_kt);
        for (auto& [idx, val] : chain) {
            ArrWrite wr;
            wr.pos = static_cast<int>(i);
            wr.v = idx;
            for (const Expr& c : idx) wr.w.push_back(substitute(c, sub_kt));
            wr.value = val;
            wr.guard = guard;
            fold.writes.push_back(std::move(wr));
        }
    }
    if (fold.writes.empty()) return gen;

    // Simplification preconditions, computed once over the whole write set.
    long long shared_tau = 0;
    bool families_ok =
        cx.simplify && fold.single_tau_family(shared_tau);
    auto conflict_shift = [&](std::size_t i) {
        // Smallest positive firing gap at which a later write revisits the
        // i-th index; 0 when none exists.
        long long best = 0;
        for (std::size_t j = 0; j < fold.writes.size(); ++j) {
            long long delta;
            if (!fold.common_shift(i, j, delta)) return -1LL;  // unknown
            if (delta >= 1 && (best == 0 || delta < best)) best = delta;
        }
        return best;
    };

    Expr acc = generic_read;
    for (std::size_t ip = fold.writes.size(); ip-- > 0;) {
        Expr h, t;
        long long shift = families_ok ? conflict_shift(ip) : -1;
        if (families_ok && shift == 1) {
            h = fold.collapsed(ip, shared_tau, cx.simplify_guarded);
            t = fold.write_value(ip, h, sub_kt);
        } else if (families_ok && shift == 0) {
            h = fold.membership(ip, /*with_phi=*/false);
            t = fold.write_value(ip, h, sub_kt);
        } else {
            h = fold.membership(ip, /*with_phi=*/true);
            t = fold.write_value(ip, h, sub_kt);
        }
        acc = ite_raw(h, t, acc);
    }
    return ArrayVal{gen.params, acc};
}

}  // namespace

// ---------------------------------------------------------------------------
// per-variable dispatch
// ---------------------------------------------------------------------------

Value iterate_variable(const std::string& var, const InducedAnalysis& ia,
                       const SymbolicState& theta, AnalysisContext& cx,
                       const SymbolicState* pc_state) {
    const SymbolicState& ps = pc_state ? *pc_state : theta;
    int ar = ia.prog.array_arity(var);
    if (ar > 0) return iterate_array(var, ar, ia, theta, ps, cx);
    return iterate_scalar(var, ia, theta, ps, cx);
}

// ---------------------------------------------------------------------------
// artificial iteration-count variables
// ---------------------------------------------------------------------------

void introduce_artificials(InducedAnalysis& ia, AnalysisContext& cx) {
    for (int node : ia.tree.dfs_order()) {
        auto it = ia.tree.loop_entries.find(node);
        if (it == ia.tree.loop_entries.end() || it->second.counters.empty())
            continue;
        BackboneTree::LoopEntryInfo& info = it->second;
        std::string name = cx.fresh_name("s");
        Expr ssym = mk_sym(name);
        ia.artificials.push_back(name);
        ia.art_vertex[name] = node;
        long long sp = ctx().fresh_param();
        Expr spar = mk_param(sp);
        Expr sumtau = mk_int(0);
        for (long long t : info.taus) sumtau = add(sumtau, mk_param(t));
        std::vector<Expr> parts;
        for (const Expr& b : info.bodies)
            parts.push_back(tau_substitute(b, sumtau, spar));
        Expr body = mk_or(std::move(parts));
        ia.art_param[name] = sp;
        ia.art_body[name] = body;
        ia.tree.psi[node] =
            forall({spar}, implies(mk_and2(rel(CmpOp::Le, mk_int(0), spar),
                                           rel(CmpOp::Lt, spar, ssym)),
                                   body));
        // Below the vertex, a full sum of this loop's counters becomes the
        // iteration count; any remaining single counter is unknowable.
        Expr sumk = mk_int(0);
        for (long long k : info.counters) sumk = add(sumk, mk_counter(k));
        std::vector<std::pair<Expr, Expr>> wipe;
        for (long long k : info.counters)
            wipe.emplace_back(mk_counter(k), mk_star());
        auto ksub = [&](const Expr& e) {
            return substitute(factor_replace(e, sumk, ssym), wipe);
        };
        for (int d : descendants_of(ia.tree, node)) {
            if (auto pit = ia.tree.psi.find(d); pit != ia.tree.psi.end())
                pit->second = ksub(pit->second);
            if (auto lit = ia.tree.loop_entries.find(d);
                lit != ia.tree.loop_entries.end())
                for (Expr& b : lit->second.bodies) b = ksub(b);
            if (auto tit = ia.tree.theta.find(d); tit != ia.tree.theta.end())
                for (auto& [vn, val] : tit->second.vars) {
                    if (std::holds_alternative<Expr>(val)) {
                        Expr e = ksub(std::get<Expr>(val));
                        val = e->has_star ? mk_star() : e;
                    } else {
                        ArrayVal a = std::get<ArrayVal>(val);
                        a.body = ksub(a.body);
                        val = a;
                    }
                }
        }
    }
}

Value iterations_of_loop(const std::string& art, const InducedAnalysis& ia,
                         const SymbolicState& theta, AnalysisContext& cx) {
    int node = ia.art_vertex.at(art);
    std::optional<Loop> loop = loop_at(ia.tree, ia.prog, node);
    if (!loop) return mk_star();
    std::map<int, std::string> art_at;
    for (const auto& [nm, v] : ia.art_vertex) art_at[v] = nm;
    auto zeta = [&](int v) -> Expr {
        auto ai = art_at.find(v);
        if (ai != art_at.end()) {
            // Weakened looping condition: the body holds at the last
            // iteration when there is one.
            Expr s2 = mk_sym(ai->second);
            Expr last = sub(s2, mk_int(1));
            Expr b = substitute1(ia.art_body.at(ai->second),
                                 mk_param(ia.art_param.at(ai->second)), last);
            return implies(rel(CmpOp::Le, mk_int(0), last), b);
        }
        auto it = ia.tree.psi.find(v);
        return it != ia.tree.psi.end() ? it->second : mk_bool(true);
    };
    std::vector<Expr> disj;
    for (int d : descendants_of(ia.tree, node)) {
        if (!loop->exits.count(ia.tree.nodes[d].cfg)) continue;
        std::vector<Expr> conj;
        for (int v = d; v != ia.tree.nodes[node].parent;
             v = ia.tree.nodes[v].parent)
            conj.push_back(apply_state(zeta(v), theta));
        std::reverse(conj.begin(), conj.end());
        disj.push_back(mk_and(std::move(conj)));
    }
    if (disj.empty()) return mk_star();
    Expr gamma = mk_or(std::move(disj));

    std::vector<std::string> scal;
    for (const VarDecl& d : ia.prog.decls)
        if (d.arity == 0) scal.push_back(d.name);

    // Distinguish array elements under the universal closure: every array
    // read gets an extra argument that is an injective image of the scalar
    // input vector, so different inputs cannot alias element values.
    Expr axiom = mk_bool(true);
    if (!scal.empty()) {
        bool has_array = false;
        for (const VarDecl& d : ia.prog.decls)
            if (d.arity > 0 && contains_sym(gamma, d.name)) has_array = true;
        if (has_array) {
            std::string rho = cx.fresh_name("rho");
            std::vector<Expr> tag_args;
            for (const std::string& s : scal) tag_args.push_back(mk_sym(s));
            Expr tag = mk_app(rho, tag_args);
            std::function<Expr(const Expr&)> go = [&](const Expr& e) -> Expr {
                if (e->kind == Kind::App && ia.prog.array_arity(e->name) > 0) {
                    std::vector<Expr> args;
                    for (const Expr& k : e->kids) args.push_back(go(k));
                    args.push_back(tag);
                    return mk_app(e->name, args);
                }
                return rebuild(e, go);
            };
            gamma = go(gamma);
            std::vector<Expr> b1, b2, eqs;
            for (std::size_t i = 0; i < scal.size(); ++i) {
                b1.push_back(mk_param(ctx().fresh_param()));
                b2.push_back(mk_param(ctx().fresh_param()));
                eqs.push_back(rel(CmpOp::Eq, b1.back(), b2.back()));
            }
            Expr l = rel(CmpOp::Eq, mk_app(rho, b1), mk_app(rho, b2));
            Expr r = mk_and(std::move(eqs));
            std::vector<Expr> binders = b1;
            binders.insert(binders.end(), b2.begin(), b2.end());
            axiom = forall(std::move(binders),
                           mk_and2(implies(l, r), implies(r, l)));
        }
    }

    // Unknown coefficients of s = max{0, (M kappa + w)^T (a; 1)}.
    std::size_t m = scal.size(), n = ia.counters.size();
    std::vector<std::vector<std::string>> M(m + 1);
    std::vector<std::string> w(m + 1);
    std::vector<Expr> coeffs;
    for (std::size_t r = 0; r <= m; ++r) {
        for (std::size_t j = 0; j < n; ++j) {
            M[r].push_back(cx.fresh_name("c"));
            coeffs.push_back(mk_sym(M[r].back()));
        }
        w[r] = cx.fresh_name("c");
        coeffs.push_back(mk_sym(w[r]));
    }
    auto row = [&](std::size_t r, const std::vector<Expr>& kap) {
        Expr e = mk_sym(w[r]);
        for (std::size_t j = 0; j < n; ++j)
            e = add(e, mul(mk_sym(M[r][j]), kap[j]));
        return e;
    };

    // Universal closure: scalars, other artificials, the counters, and the
    // iteration count itself become bound parameters.
    std::vector<std::pair<Expr, Expr>> usub;
    std::vector<Expr> binders;
    std::map<std::string, Expr> scal_param;
    std::map<std::string, int> fs, fa;
    collect_syms(gamma, fs, fa);
    std::set<std::string> univ(scal.begin(), scal.end());
    for (const auto& [nm, ar] : fs)
        if (ar == 0 && ia.prog.array_arity(nm) == 0) univ.insert(nm);
    univ.insert(art);
    for (const std::string& nm : univ) {
        Expr pp = mk_param(ctx().fresh_param());
        usub.emplace_back(mk_sym(nm), pp);
        scal_param[nm] = pp;
        binders.push_back(pp);
    }
    std::vector<Expr> kap;
    for (std::size_t j = 0; j < n; ++j) {
        Expr pp = mk_param(ctx().fresh_param());
        usub.emplace_back(mk_counter(ia.counters[j]), pp);
        kap.push_back(pp);
        binders.push_back(pp);
    }
    std::vector<Expr> ante;
    for (const Expr& k : kap) ante.push_back(rel(CmpOp::Le, mk_int(0), k));
    ante.push_back(rel(CmpOp::Le, mk_int(0), scal_param.at(art)));
    ante.push_back(substitute(gamma, usub));
    Expr val = row(m, kap);
    for (std::size_t r = 0; r < m; ++r)
        val = add(val, mul(scal_param.count(scal[r]) ? scal_param[scal[r]]
                                                     : mk_sym(scal[r]),
                           row(r, kap)));
    Expr target = rel(CmpOp::Eq, scal_param.at(art), max0(val));
    Expr S = forall(std::move(binders),
                    implies(mk_and(std::move(ante)), target));

    const long long ladder[] = {-1, 1, 4, 16};
    for (long long bound : ladder) {
        Expr query = mk_and2(axiom, S);
        if (bound > 0) {
            std::vector<Expr> bs;
            for (const Expr& c : coeffs) {
                bs.push_back(rel(CmpOp::Le, neg(mk_int(bound)), c));
                bs.push_back(rel(CmpOp::Le, c, mk_int(bound)));
            }
            query = mk_and2(mk_and(std::move(bs)), query);
        }
        ++cx.solver_checks;
        SmtOutcome out = check_sat(query, cx.quick_solver(), /*want_model=*/true);
        if (out.status == SmtStatus::Unsat) return mk_star();
        if (out.status != SmtStatus::Sat) continue;
        auto coeff = [&](const std::string& nm) {
            return out.model ? out.model->int_or(nm, 0) : 0;
        };
        auto crow = [&](std::size_t r) {
            Expr e = mk_int(coeff(w[r]));
            for (std::size_t j = 0; j < n; ++j)
                e = add(e, mul_const(coeff(M[r][j]),
                                     mk_counter(ia.counters[j])));
            return e;
        };
        Expr res = crow(m);
        for (std::size_t r = 0; r < m; ++r)
            res = add(res, mul(mk_sym(scal[r]), crow(r)));
        return max0(res);
    }
    return mk_star();
}

// ---------------------------------------------------------------------------
// Kleene fixpoint
// ---------------------------------------------------------------------------

SymbolicState compute_iterated_state(const InducedAnalysis& ia,
                                     const SymbolicState& theta_g,
                                     AnalysisContext& cx) {
    SymbolicState th = star_state(ia.prog.decls);
    for (const std::string& nm : ia.artificials) th.vars[nm] = mk_star();
    bool changed = true;
    while (changed) {
        changed = false;
        for (const VarDecl& d : ia.prog.decls) {
            if (!value_is_star(th.vars.at(d.name))) continue;
            SymbolicState probe = th;
            probe.vars[d.name] = theta_g.vars.at(d.name);
            Value v = iterate_variable(d.name, ia, probe, cx, &th);
            if (!value_is_star(v)) {
                th.vars[d.name] = v;
                changed = true;
            }
        }
        for (const std::string& nm : ia.artificials) {
            if (!value_is_star(th.vars.at(nm))) continue;
            SymbolicState probe = th;
            probe.vars[nm] = mk_sym(nm);
            Value v = iterations_of_loop(nm, ia, probe, cx);
            if (!value_is_star(v)) {
                th.vars[nm] = v;
                changed = true;
            }
        }
    }
    return th;
}

// ---------------------------------------------------------------------------
// looping condition
// ---------------------------------------------------------------------------

Expr looping_condition(const BackboneTree& orig_tree,
                       const std::vector<int>& leaf_nodes,
                       const std::vector<long long>& counters,
                       const std::vector<long long>& taus,
                       const SymbolicState& theta_kappa,
                       std::vector<Expr>* bodies_out) {
    std::size_t n = leaf_nodes.size();
    std::vector<std::pair<Expr, Expr>> kt;
    for (std::size_t j = 0; j < n; ++j)
        kt.emplace_back(mk_counter(counters[j]), mk_param(taus[j]));
    std::vector<Expr> parts;
    for (std::size_t i = 0; i < n; ++i) {
        Expr m = substitute(
            apply_state(pc_of(orig_tree, leaf_nodes[i], mk_bool(true)),
                        theta_kappa),
            kt);
        if (bodies_out) bodies_out->push_back(m);
        Expr inner = m;
        if (n > 1) {
            std::vector<Expr> binders, conj;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                binders.push_back(mk_param(taus[j]));
                conj.push_back(rel(CmpOp::Le, mk_int(0), mk_param(taus[j])));
                conj.push_back(rel(CmpOp::Le, mk_param(taus[j]),
                                   mk_counter(counters[j])));
            }
            conj.push_back(m);
            inner = exists(std::move(binders), mk_and(std::move(conj)));
        }
        parts.push_back(forall(
            {mk_param(taus[i])},
            implies(mk_and2(rel(CmpOp::Le, mk_int(0), mk_param(taus[i])),
                            rel(CmpOp::Lt, mk_param(taus[i]),
                                mk_counter(counters[i]))),
                    inner)));
    }
    return mk_and(std::move(parts));
}

// ---------------------------------------------------------------------------
// whole-loop summarization
// ---------------------------------------------------------------------------

static LoopSummary build_summary(const ProgramGraph& ind, AnalysisContext& cx) {
    InducedAnalysis ia;
    ia.prog = ind;
    ia.tree = build_backbone_tree(ind);
    LoopSummary s;
    if (ia.tree.empty()) {
        s.trivial = true;
        return s;
    }
    SymbolicState tg = generic_state(ind.decls);
    execute_backbone_tree(ia.tree, ind, tg, cx);
    if (ia.tree.empty()) {
        s.trivial = true;
        return s;
    }
    ia.leaf_nodes = ia.tree.leaves();
    for (std::size_t i = 0; i < ia.leaf_nodes.size(); ++i) {
        ia.counters.push_back(ctx().fresh_counter());
        ia.taus.push_back(ctx().fresh_param());
    }
    BackboneTree orig = ia.tree;  // pre-artificial formulas for phi^kappa
    introduce_artificials(ia, cx);
    SymbolicState thk = compute_iterated_state(ia, tg, cx);
    s.phi = looping_condition(orig, ia.leaf_nodes, ia.counters, ia.taus, thk,
                              &s.bodies);
    for (const VarDecl& d : ind.decls) s.theta.vars[d.name] = thk.vars.at(d.name);
    s.counters = ia.counters;
    s.taus = ia.taus;
    // Structural closure check: the looping condition may only have the
    // loop's own counters free, and no leaked bound parameters.
    std::set<long long> cs = ids_of(s.phi, Kind::Counter);
    for (long long c : cs)
        if (std::find(s.counters.begin(), s.counters.end(), c) ==
            s.counters.end())
            throw std::logic_error("looping condition leaks a foreign counter");
    if (!ids_of(s.phi, Kind::Param).empty())
        throw std::logic_error("looping condition leaks a bound parameter");
    return s;
}

const LoopSummary& overapproximate_loop(const ProgramGraph& p, const Loop& c,
                                        AnalysisContext& cx) {
    ProgramGraph ind = induced_program(p, c);
    std::string key = cfg_to_json(ind);
    auto it = cx.memo.find(key);
    if (it != cx.memo.end()) return it->second;
    LoopSummary s = build_summary(ind, cx);
    return cx.memo.emplace(key, std::move(s)).first->second;
}

std::string summary_to_text(const LoopSummary& s) {
    std::ostringstream os;
    if (s.trivial) {
        os << "phi = true (empty induced tree)\n";
        return os.str();
    }
    os << "phi = " << to_text(s.phi) << "\n";
    for (const auto& [name, val] : s.theta.vars)
        os << "theta(" << name << ") = " << value_to_text(val) << "\n";
    return os.str();
}

}  // namespace apc
