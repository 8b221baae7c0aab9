// SPDX-License-Identifier: MIT
//
// Symbolic execution over backbone trees: per-instruction symbolic semantics,
// path-condition assembly (pc / pc-hat), and the worklist executor that fills
// in Psi/Theta, instantiates memoized loop summaries at loop-entry vertices,
// and prunes infeasible subtrees with throttled solver checks.
#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "apc/backbone.hpp"
#include "apc/expr.hpp"
#include "apc/program.hpp"
#include "apc/smt.hpp"
#include "apc/state.hpp"

namespace apc {

// A loop summary ready for reuse: the looping condition and iterated state
// are closed over the program's basic symbols, so instantiation only has to
// freshen the counters/taus and compose with the incoming state.
struct LoopSummary {
    Expr phi;                         // looping condition phi^kappa
    SymbolicState theta;              // iterated state theta^kappa (program vars only)
    std::vector<long long> counters;  // one per surviving induced backbone path
    std::vector<long long> taus;      // bound parameters matching `counters`
    std::vector<Expr> bodies;         // per-path matrix of phi (counters -> taus)
    bool trivial = false;             // empty induced tree: (true, theta_G)
};

// Shared context for one analysis run: solver configuration, per-loop summary
// memoization (keyed on the induced program's serialized form), and a reserved
// identifier set used to mint fresh symbol names that cannot collide with
// program symbols.
struct AnalysisContext {
    SolverConfig solver = default_solver();
    std::map<std::string, LoopSummary> memo;
    std::set<std::string> reserved;
    int solver_checks = 0;  // throttled feasibility checks issued
    int pruned = 0;         // subtrees removed as infeasible
    // Equivalence-preserving cleanups on iterated array values. When
    // `simplify_guarded` is set the boundary-collapse rewrite keeps its
    // kappa >= 1 side condition; tests drop it to compare against the bare
    // collapsed form, which is only equivalent under a positive counter.
    bool simplify = false;
    bool simplify_guarded = true;
    // Cap for auxiliary queries (feasibility pruning, assert validity,
    // iteration-count coefficient search). These are throttled best-effort
    // checks whose Unknown answers are harmless, so they must not inherit a
    // long final-decision timeout.
    double aux_timeout_sec = 5.0;

    // Solver configuration for auxiliary queries.
    SolverConfig quick_solver() const {
        SolverConfig c = solver;
        c.timeout_sec = std::min(c.timeout_sec, aux_timeout_sec);
        return c;
    }

    explicit AnalysisContext(const ProgramGraph& p) {
        for (const auto& d : p.decls) reserved.insert(d.name);
    }
    AnalysisContext() = default;

    // A name with the given prefix that is not a program symbol and was not
    // handed out before.
    std::string fresh_name(const std::string& prefix);

private:
    std::map<std::string, int> fresh_count_;
};

// Symbolic semantics of one instruction: given the instruction, the state
// before it, and the path condition phi of the path so far, yields the edge
// formula gamma and the successor state. Solver use: assert needs a validity
// check (unknown answers degrade to `false`, the pessimistic side); assume
// only rejects syntactically false guards here — feasibility is the
// executor's throttled pruning job.
std::pair<Expr, SymbolicState> exec_instruction(const Instruction& ins,
                                                const SymbolicState& theta,
                                                const Expr& phi,
                                                AnalysisContext& cx);

// Path condition of tree vertex `node` with phi as the innermost conjunct:
// walks the path from `node` to the root, wrapping with Psi conjuncts and,
// at loop-entry vertices, with the existential closure over that vertex's
// counters (bounded below by zero).
Expr pc_of(const BackboneTree& t, int node, const Expr& phi);

// Single-step variant: the formula contributed at `node` around an inner
// formula `phi` (identity at the root, conjunction elsewhere, existential
// counter closure at loop entries).
Expr pc_hat_at(const BackboneTree& t, int node, const Expr& phi);

// Executes the tree of `p` (Psi/Theta filled in, infeasible subtrees pruned).
// theta0 is the start state (generic for whole-program analysis; loop
// summarization passes restricted states). Loop-entry vertices get their
// summary via overapproximate_loop (memoized in cx) and their metadata is
// recorded in t.loop_entries.
void execute_backbone_tree(BackboneTree& t, const ProgramGraph& p,
                           const SymbolicState& theta0, AnalysisContext& cx);

// "Psi <path> = <formula>" per live vertex in DFS order, then
// "Theta <path> : <state>" per live leaf.
std::string psi_to_text(const BackboneTree& t, const ProgramGraph& p);

// Instantiates `s` at a loop-entry vertex: freshens counters and taus,
// composes with the incoming state. Returns the Psi formula, the state to
// continue with, and the freshened metadata.
struct InstantiatedSummary {
    Expr psi;
    SymbolicState theta;
    BackboneTree::LoopEntryInfo info;
};
InstantiatedSummary instantiate_summary(const LoopSummary& s,
                                        const SymbolicState& theta_in);

}  // namespace apc
