// SPDX-License-Identifier: MIT
//
// Target-reachability formula assembly and the racing decision procedure.
#include "apc/formula_builder.hpp"

#include <chrono>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace apc {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

// ===========================================================================
// phi-hat assembly
// ===========================================================================

Expr build_phi_hat(const BackboneTree& t) {
    if (t.nodes.empty() || !t.alive[0]) return mk_bool(false);
    // F(v) = pc-hat at v applied to (true at leaves, else the disjunction of
    // the surviving children's formulas).
    std::function<Expr(int)> F = [&](int v) -> Expr {
        Expr inner;
        if (t.is_leaf(v)) {
            inner = mk_bool(true);
        } else {
            std::vector<Expr> kids;
            for (int c : t.nodes[v].kids)
                if (t.alive[c]) kids.push_back(F(c));
            inner = mk_or(std::move(kids));  // empty -> false (pruned subtree)
        }
        return pc_hat_at(t, v, inner);
    };
    return F(0);
}

// ===========================================================================
// K-bounded unfolding
// ===========================================================================

namespace {

Expr fresh_like(const Expr& b) {
    static long long serial = 0;
    switch (b->kind) {
        case Kind::Counter: return mk_counter(ctx().fresh_counter());
        case Kind::Param: return mk_param(ctx().fresh_param());
        case Kind::Placeholder: return mk_placeholder(ctx().fresh_placeholder());
        case Kind::Sym: return mk_sym(b->name + "!u" + std::to_string(++serial));
        case Kind::BoolSym: return mk_bsym(b->name + "!u" + std::to_string(++serial));
        default: throw UnfoldError("existential binder is not an atom");
    }
}

Expr unfold_go(const Expr& e, int k) {
    switch (e->kind) {
        case Kind::Forall: {
            // Every universal the builder emits ranges over bounded iteration
            // indices and has implication shape; enumerate 0..K-1 per binder.
            const Expr& body = e->kids[0];
            if (body->kind != Kind::Implies)
                throw UnfoldError("universal body is not an implication: " +
                                  to_text(body));
            std::size_t nb = e->binders.size();
            std::vector<long long> v(nb, 0);
            std::vector<Expr> copies;
            for (;;) {
                std::vector<std::pair<Expr, Expr>> sub;
                for (std::size_t i = 0; i < nb; ++i)
                    sub.emplace_back(e->binders[i], mk_int(v[i]));
                copies.push_back(unfold_go(substitute(body, sub), k));
                std::size_t d = 0;
                while (d < nb && ++v[d] >= k) v[d++] = 0;
                if (d == nb) break;
            }
            return mk_and(std::move(copies));
        }
        case Kind::Exists: {
            // Fresh free witnesses; counters stay within the unfolding bound.
            std::vector<std::pair<Expr, Expr>> sub;
            std::vector<Expr> parts;
            for (const auto& b : e->binders) {
                Expr f = fresh_like(b);
                sub.emplace_back(b, f);
                if (b->kind == Kind::Counter)
                    parts.push_back(rel(CmpOp::Le, f, mk_int(k)));
            }
            parts.push_back(unfold_go(substitute(e->kids[0], sub), k));
            return mk_and(std::move(parts));
        }
        default:
            return rebuild(e, [k](const Expr& c) { return unfold_go(c, k); });
    }
}

}  // namespace

Expr unfold(const Expr& phi, int k) {
    if (k <= 0) throw UnfoldError("unfolding bound must be positive");
    return unfold_go(phi, k);
}

// ===========================================================================
// decision procedure
// ===========================================================================

namespace {

// Runs one script synchronously, retrying a crashed worker once.
SmtOutcome run_retry(const std::string& script, const SolverConfig& cfg) {
    SmtOutcome o = run_script(script, cfg, /*want_model=*/true);
    if (o.status == SmtStatus::Error)
        o = run_script(script, cfg, /*want_model=*/true);
    return o;
}

struct Lane {
    std::string script;
    AsyncCheck check;
    bool finished = false;
    bool retried = false;
    SmtOutcome outcome;
    double ms = 0;
    Clock::time_point start;

    void launch(const SolverConfig& cfg) {
        start = Clock::now();
        check = start_script(script, cfg, /*want_model=*/true);
    }
    // Harvests a finished query; restarts once on a crash. Returns true when
    // the lane just produced a final (non-error) outcome.
    bool poll(const SolverConfig& cfg) {
        if (finished || !check.done()) return false;
        outcome = check.join();
        if (outcome.status == SmtStatus::Error && !retried) {
            retried = true;
            launch(cfg);
            return false;
        }
        ms = ms_since(start);
        finished = true;
        return true;
    }
};

DecideResult decide_scripts(const std::string& direct_script,
                            const std::string& unfolded_script,
                            bool have_unfolded, const SolverConfig& cfg,
                            bool race, DecideResult r) {
    if (!race) {
        // Sequential mode: the cheap bounded form first, then the full form.
        if (have_unfolded) {
            Clock::time_point t0 = Clock::now();
            SmtOutcome u = run_retry(unfolded_script, cfg);
            r.solve_unfolded_ms = ms_since(t0);
            if (u.status == SmtStatus::Sat) {
                r.status = SmtStatus::Sat;
                r.winner = "unfolded";
                r.model = u.model;
                return r;
            }
            if (u.status == SmtStatus::Unsat) r.bounded_unsat = true;
        }
        Clock::time_point t0 = Clock::now();
        SmtOutcome d = run_retry(direct_script, cfg);
        r.solve_direct_ms = ms_since(t0);
        if (d.status == SmtStatus::Sat || d.status == SmtStatus::Unsat) {
            r.status = d.status;
            r.winner = "direct";
            r.model = d.model;
        }
        return r;
    }

    Lane direct{direct_script};
    Lane unfolded{unfolded_script};
    direct.launch(cfg);
    if (have_unfolded) unfolded.launch(cfg);
    else unfolded.finished = true;

    while (!direct.finished || !unfolded.finished) {
        if (direct.poll(cfg)) {
            r.solve_direct_ms = direct.ms;
            if (direct.outcome.status == SmtStatus::Sat ||
                direct.outcome.status == SmtStatus::Unsat) {
                if (!unfolded.finished) unfolded.check.cancel();
                r.status = direct.outcome.status;
                r.winner = "direct";
                r.model = direct.outcome.model;
                return r;
            }
        }
        if (unfolded.poll(cfg)) {
            r.solve_unfolded_ms = unfolded.ms;
            if (unfolded.outcome.status == SmtStatus::Sat) {
                if (!direct.finished) direct.check.cancel();
                r.status = SmtStatus::Sat;
                r.winner = "unfolded";
                r.model = unfolded.outcome.model;
                return r;
            }
            // An unfolded unsat is only evidence about the bounded form; keep
            // waiting for the direct lane.
            if (unfolded.outcome.status == SmtStatus::Unsat)
                r.bounded_unsat = true;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    return r;  // both lanes inconclusive
}

}  // namespace

DecideResult decide(const Expr& phi_hat, const SolverConfig& cfg, int k,
                    bool race) {
    DecideResult r;
    if (is_false(phi_hat)) {
        r.status = SmtStatus::Unsat;
        r.winner = "direct";
        return r;
    }
    Clock::time_point t0 = Clock::now();
    bool have_unfolded = true;
    Expr u = mk_bool(false);
    try {
        u = unfold(phi_hat, k);
    } catch (const UnfoldError&) {
        have_unfolded = false;
    }
    r.unfold_ms = ms_since(t0);
    std::string su = have_unfolded ? emit_script(u, true) : std::string();
    return decide_scripts(emit_script(phi_hat, true), su, have_unfolded, cfg,
                          race, std::move(r));
}

namespace {

// Declarations for program symbols the formula does not itself mention, plus
// the frontier assertion; spliced between a script's own declarations and its
// assertion so the frontier's symbols are always in scope.
std::string frontier_extra(const Expr& e, const std::string& frontier_smt,
                           const std::vector<VarDecl>& decls) {
    std::map<std::string, int> scalars, arrays;
    collect_syms(e, scalars, arrays);
    std::ostringstream os;
    for (const auto& d : decls) {
        if (d.arity == 0) {
            if (scalars.count(d.name)) continue;
            os << "(declare-const " << d.name << " Int)\n";
        } else {
            if (arrays.count(d.name)) continue;
            os << "(declare-fun " << d.name << " (";
            for (int i = 0; i < d.arity; ++i) os << (i ? " Int" : "Int");
            os << ") Int)\n";
        }
    }
    os << "(assert " << frontier_smt << ")";
    return os.str();
}

}  // namespace

DecideResult prune_check(const Expr& phi_hat, const std::string& frontier_smt,
                         const std::vector<VarDecl>& decls,
                         const SolverConfig& cfg, int k, bool race) {
    DecideResult r;
    if (is_false(phi_hat)) {
        r.status = SmtStatus::Unsat;
        r.winner = "direct";
        return r;
    }
    Clock::time_point t0 = Clock::now();
    bool have_unfolded = true;
    Expr u = mk_bool(false);
    try {
        u = unfold(phi_hat, k);
    } catch (const UnfoldError&) {
        have_unfolded = false;
    }
    r.unfold_ms = ms_since(t0);
    std::string sd =
        emit_script(phi_hat, true, frontier_extra(phi_hat, frontier_smt, decls));
    std::string su =
        have_unfolded
            ? emit_script(u, true, frontier_extra(u, frontier_smt, decls))
            : std::string();
    return decide_scripts(sd, su, have_unfolded, cfg, race, std::move(r));
}

// ===========================================================================
// JSON rendering
// ===========================================================================

std::string verdict_json(const DecideResult& r) {
    nlohmann::json j;
    switch (r.status) {
        case SmtStatus::Sat: j["status"] = "sat"; break;
        case SmtStatus::Unsat: j["status"] = "unsat"; break;
        default: j["status"] = "unknown"; break;
    }
    j["winner"] = r.winner;
    j["bounded_unsat"] = r.bounded_unsat;
    j["timings_ms"] = {{"build", r.build_ms},
                       {"unfold", r.unfold_ms},
                       {"solve_direct", r.solve_direct_ms},
                       {"solve_unfolded", r.solve_unfolded_ms}};
    if (r.model) {
        nlohmann::json m;
        for (const auto& [n, v] : r.model->ints) m["ints"][n] = v;
        for (const auto& [n, v] : r.model->bools) m["bools"][n] = v;
        for (const auto& [n, f] : r.model->funcs) {
            nlohmann::json fn;
            fn["default"] = f.def;
            fn["points"] = nlohmann::json::array();
            for (const auto& [args, val] : f.points)
                fn["points"].push_back({{"args", args}, {"value", val}});
            m["funcs"][n] = fn;
        }
        j["model"] = m;
    }
    return j.dump(2);
}

}  // namespace apc
