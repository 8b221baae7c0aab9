// SPDX-License-Identifier: MIT
#include "apc/symexec.hpp"

#include <sstream>

#include "apc/loop_summary.hpp"

namespace apc {

std::string AnalysisContext::fresh_name(const std::string& prefix) {
    for (;;) {
        int n = fresh_count_[prefix]++;
        std::string cand = prefix + std::to_string(n);
        if (reserved.insert(cand).second) return cand;
    }
}

// ---------------------------------------------------------------------------
// instruction semantics
// ---------------------------------------------------------------------------

std::pair<Expr, SymbolicState> exec_instruction(const Instruction& ins,
                                                const SymbolicState& theta,
                                                const Expr& phi,
                                                AnalysisContext& cx) {
    switch (ins.k) {
        case Instruction::K::Skip:
            return {mk_bool(true), theta};
        case Instruction::K::Assume: {
            Expr g = eval_pred(theta, ins.pred);
            // A syntactically false guard is the one case where the
            // satisfiability pretest can fail without a solver; feasibility
            // of the accumulated condition is checked by the executor.
            if (is_false(g)) return {mk_bool(false), theta};
            return {g, theta};
        }
        case Instruction::K::Assert: {
            Expr g = eval_pred(theta, ins.pred);
            if (is_true(g)) return {mk_bool(true), theta};
            if (is_false(g)) return {mk_bool(false), theta};
            ++cx.solver_checks;
            Validity v = check_valid(implies(phi, g), cx.quick_solver());
            // Unknown degrades to the pessimistic side: treat the assertion
            // as possibly failing, so the path contributes nothing.
            if (v == Validity::Valid) return {mk_bool(true), theta};
            return {mk_bool(false), theta};
        }
        case Instruction::K::Assign: {
            SymbolicState th = theta;
            th.set_scalar(ins.var, eval_pexpr(theta, *ins.rhs));
            return {mk_bool(true), th};
        }
        case Instruction::K::ArrayAssign: {
            const ArrayVal& old = theta.array(ins.var);
            std::vector<Expr> conds;
            for (std::size_t d = 0; d < ins.idxs.size(); ++d)
                conds.push_back(rel(CmpOp::Eq, mk_placeholder(old.params[d]),
                                    eval_pexpr(theta, *ins.idxs[d])));
            Expr body = ite(mk_and(std::move(conds)),
                            eval_pexpr(theta, *ins.rhs), old.body);
            SymbolicState th = theta;
            th.set_array(ins.var, ArrayVal{old.params, body});
            return {mk_bool(true), th};
        }
    }
    throw std::logic_error("exec_instruction: bad kind");
}

// ---------------------------------------------------------------------------
// path conditions
// ---------------------------------------------------------------------------

Expr pc_hat_at(const BackboneTree& t, int node, const Expr& phi) {
    if (node == 0) return phi;
    Expr psi = t.psi.count(node) ? t.psi.at(node) : mk_bool(true);
    auto le = t.loop_entries.find(node);
    if (le != t.loop_entries.end() && !le->second.counters.empty()) {
        std::vector<Expr> binders, parts;
        for (long long id : le->second.counters) {
            binders.push_back(mk_counter(id));
            parts.push_back(rel(CmpOp::Le, mk_int(0), mk_counter(id)));
        }
        parts.push_back(psi);
        parts.push_back(phi);
        return exists(std::move(binders), mk_and(std::move(parts)));
    }
    return mk_and2(psi, phi);
}

Expr pc_of(const BackboneTree& t, int node, const Expr& phi) {
    Expr acc = phi;
    for (int n = node; n >= 0; n = t.nodes[n].parent) acc = pc_hat_at(t, n, acc);
    return acc;
}

// ---------------------------------------------------------------------------
// summary instantiation
// ---------------------------------------------------------------------------

static Value rename_value(const Value& v,
                          const std::vector<std::pair<Expr, Expr>>& subst) {
    if (std::holds_alternative<Expr>(v))
        return rename_atoms(std::get<Expr>(v), subst);
    const ArrayVal& a = std::get<ArrayVal>(v);
    return ArrayVal{a.params, rename_atoms(a.body, subst)};
}

InstantiatedSummary instantiate_summary(const LoopSummary& s,
                                        const SymbolicState& theta_in) {
    InstantiatedSummary out;
    if (s.trivial) {
        out.psi = mk_bool(true);
        out.theta = theta_in;
        return out;
    }
    std::vector<std::pair<Expr, Expr>> subst;
    for (long long id : s.counters) {
        long long f = ctx().fresh_counter();
        subst.emplace_back(mk_counter(id), mk_counter(f));
        out.info.counters.push_back(f);
    }
    for (long long id : s.taus) {
        long long f = ctx().fresh_param();
        subst.emplace_back(mk_param(id), mk_param(f));
        out.info.taus.push_back(f);
    }
    out.psi = apply_state(rename_atoms(s.phi, subst), theta_in);
    for (const Expr& b : s.bodies)
        out.info.bodies.push_back(apply_state(rename_atoms(b, subst), theta_in));
    SymbolicState renamed = s.theta;
    for (auto& [name, val] : renamed.vars) val = rename_value(val, subst);
    out.theta = compose(renamed, theta_in);
    return out;
}

// ---------------------------------------------------------------------------
// executor
// ---------------------------------------------------------------------------

// True unless the accumulated path condition at `node` is provably
// unsatisfiable; unknown solver answers keep the subtree (sound side).
static bool frontier_feasible(BackboneTree& t, int node, AnalysisContext& cx) {
    Expr pc = pc_of(t, node, mk_bool(true));
    if (is_false(pc)) return false;
    if (is_true(pc)) return true;
    ++cx.solver_checks;
    SmtOutcome out = check_sat(pc, cx.quick_solver(), /*want_model=*/false);
    return out.status != SmtStatus::Unsat;
}

static void exec_node(BackboneTree& t, const ProgramGraph& p,
                      int node, const SymbolicState& theta,
                      AnalysisContext& cx) {
    if (t.is_leaf(node)) {
        t.theta[node] = theta;
        return;
    }
    std::vector<int> kids = t.nodes[node].kids;  // copy: pruning edits links
    for (int c : kids) {
        if (!t.alive[c]) continue;
        std::optional<Loop> loop = loop_at(t, p, c);
        if (loop) {
            const LoopSummary& s = overapproximate_loop(p, *loop, cx);
            InstantiatedSummary inst = instantiate_summary(s, theta);
            t.psi[c] = inst.psi;
            if (!inst.info.counters.empty()) t.loop_entries[c] = inst.info;
            // A summary formula is rarely `true`; check feasibility here so
            // loops whose entry condition already contradicts the prefix are
            // cut before their subtree is explored.
            if (!s.trivial && !frontier_feasible(t, c, cx)) {
                ++cx.pruned;
                prune_subtree(t, c);
                continue;
            }
            exec_node(t, p, c, inst.theta, cx);
            continue;
        }
        const Instruction* ins = nullptr;
        for (const auto& e : p.succ[t.nodes[node].cfg])
            if (e.dst == t.nodes[c].cfg) { ins = &e.instr; break; }
        if (!ins) throw std::logic_error("execute: tree edge without CFG edge");
        Expr phi = pc_of(t, node, mk_bool(true));
        auto [gamma, th2] = exec_instruction(*ins, theta, phi, cx);
        t.psi[c] = gamma;
        if (is_false(gamma)) {
            ++cx.pruned;
            prune_subtree(t, c);
            continue;
        }
        // Conjoining `true` cannot flip satisfiability, so the solver is only
        // consulted where the new conjunct is a real formula or the path is
        // complete.
        if ((!is_true(gamma) || t.is_leaf(c)) && !frontier_feasible(t, c, cx)) {
            ++cx.pruned;
            prune_subtree(t, c);
            continue;
        }
        exec_node(t, p, c, th2, cx);
    }
}

void execute_backbone_tree(BackboneTree& t, const ProgramGraph& p,
                           const SymbolicState& theta0, AnalysisContext& cx) {
    if (t.empty()) return;
    t.psi[0] = mk_bool(true);
    exec_node(t, p, 0, theta0, cx);
}

// ---------------------------------------------------------------------------
// rendering
// ---------------------------------------------------------------------------

static std::string path_text(const BackboneTree& t, int n) {
    std::ostringstream os;
    bool first = true;
    for (int v : t.path(n)) {
        if (!first) os << " ";
        first = false;
        os << v;
    }
    return os.str();
}

std::string psi_to_text(const BackboneTree& t, const ProgramGraph&) {
    std::ostringstream os;
    for (int n : t.dfs_order()) {
        os << "Psi " << path_text(t, n) << " = "
           << to_text(t.psi.count(n) ? t.psi.at(n) : mk_bool(true)) << "\n";
    }
    for (int n : t.leaves()) {
        auto it = t.theta.find(n);
        if (it == t.theta.end()) continue;
        os << "Theta " << path_text(t, n) << " : " << state_to_text(it->second)
           << "\n";
    }
    return os.str();
}

}  // namespace apc
