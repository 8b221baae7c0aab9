// SPDX-License-Identifier: MIT
//
// Loop summarization: turns a loop's induced program into an overapproximate
// looping condition phi^kappa and iterated state theta^kappa, one iteration
// counter per induced backbone path. The pipeline is: run the induced program
// symbolically, rewrite nested-loop counter quantifications into artificial
// iteration-count variables, solve a Kleene fixpoint for the per-variable
// iterated values, and assemble the looping condition.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "apc/backbone.hpp"
#include "apc/expr.hpp"
#include "apc/program.hpp"
#include "apc/state.hpp"
#include "apc/symexec.hpp"

namespace apc {

// Everything downstream passes need about the executed induced tree, after
// artificial-variable introduction: the per-vertex formulas (psi_bar), the
// per-leaf states (theta_bar), the leaf order, per-path counters, and the
// artificial iteration-count variables with their loop-entry tree vertices.
struct InducedAnalysis {
    BackboneTree tree;
    ProgramGraph prog;
    std::vector<int> leaf_nodes;            // DFS order; one counter each
    std::vector<long long> counters;        // kappa_i per leaf
    std::vector<long long> taus;            // canonical tau per counter
    std::vector<std::string> artificials;   // iteration-count variable names
    std::map<std::string, int> art_vertex;  // artificial -> loop-entry node
    // Pieces of the weakened guard at each artificial's vertex: Psi there is
    // forall s (0 <= s < <art> -> body); kept destructured for the weakened
    // looping-condition rewrite.
    std::map<std::string, long long> art_param;  // bound parameter s
    std::map<std::string, Expr> art_body;        // the guarded disjunction
};

// Summarizes loop `c` of `p` (memoized in cx.memo keyed on the induced
// program's serialized text). The summary is closed over basic symbols.
const LoopSummary& overapproximate_loop(const ProgramGraph& p, const Loop& c,
                                        AnalysisContext& cx);

// Rewrites every nested-loop counter quantification in the executed tree into
// a guard over a fresh artificial iteration-count variable, and applies the
// matching counter-sum substitution to all formulas and states below that
// vertex. Mutates `ia` in place.
void introduce_artificials(InducedAnalysis& ia, AnalysisContext& cx);

// Kleene fixpoint for the iterated state: every program variable and every
// artificial starts at star and is raised at most once to a closed-form
// iterated value; variables whose joint effect is not recognized stay star.
SymbolicState compute_iterated_state(const InducedAnalysis& ia,
                                     const SymbolicState& theta_g,
                                     AnalysisContext& cx);

// Iterated value of one variable: folds the per-path final values of `var`
// over all induced backbone paths, recognizing constant progressions and
// guarded writer families for scalars, and guarded write chains for arrays.
// `theta` must map `var` itself back to its basic symbol. Path conditions
// consulted by guard materialization are evaluated under `pc_state` when
// given (the raw fixpoint state, where `var` may still be unknown) and
// taint the result to star if they mention an unknown variable; defaults
// to `theta`.
Value iterate_variable(const std::string& var, const InducedAnalysis& ia,
                       const SymbolicState& theta, AnalysisContext& cx,
                       const SymbolicState* pc_state = nullptr);

// Iterated value of one artificial iteration-count variable: synthesizes a
// max{0, linear-in-counters-and-symbols} form by solving for the coefficient
// matrix, with a bounded-coefficient retry ladder; star when no linear form
// exists or the solver stays unknown.
Value iterations_of_loop(const std::string& art, const InducedAnalysis& ia,
                         const SymbolicState& theta, AnalysisContext& cx);

// The looping condition over the original (pre-artificial) tree formulas:
// one bounded universal per induced backbone path whose matrix is the path's
// pc, state-applied and with all counters replaced by taus (the other paths'
// taus existentially closed up to their counters).
Expr looping_condition(const BackboneTree& orig_tree,
                       const std::vector<int>& leaf_nodes,
                       const std::vector<long long>& counters,
                       const std::vector<long long>& taus,
                       const SymbolicState& theta_kappa,
                       std::vector<Expr>* bodies_out);

// Human-readable dump of a summary: the looping condition, then one line per
// variable of the iterated state.
std::string summary_to_text(const LoopSummary& s);

}  // namespace apc
