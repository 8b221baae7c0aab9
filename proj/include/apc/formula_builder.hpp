// SPDX-License-Identifier: MIT
//
// Target-reachability formula assembly and the decision procedure: builds the
// abstracted path condition from an executed backbone tree, derives its
// quantifier-free K-bounded unfolding, and races the two forms against the
// solver with sound verdict transfer.
#pragma once

#include <optional>
#include <string>

#include "apc/backbone.hpp"
#include "apc/expr.hpp"
#include "apc/program.hpp"
#include "apc/smt.hpp"
#include "apc/symexec.hpp"

namespace apc {

// Raised when a universal quantifier in the formula does not have the
// bounded-implication shape the unfolder expects (an internal invariant).
struct UnfoldError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The abstracted path condition: disjunction over the tree's backbone paths,
// with the per-vertex formulas and existential counter closures applied
// outward-in. The empty tree gives `false`.
Expr build_phi_hat(const BackboneTree& t);

// K-bounded unfolding: every universal over iteration parameters becomes a
// guarded conjunction over 0..K-1, every existential binder becomes a fresh
// free constant (counters additionally constrained to <= K). The result
// implies nothing about the original on unsat answers; sat answers carry
// over.
Expr unfold(const Expr& phi, int k);

struct DecideResult {
    SmtStatus status = SmtStatus::Unknown;
    std::string winner;          // "direct", "unfolded", or "" for unknown
    bool bounded_unsat = false;  // the unfolding alone was unsatisfiable
    std::optional<Model> model;
    double build_ms = 0, unfold_ms = 0;
    double solve_direct_ms = 0, solve_unfolded_ms = 0;
};

// Decides phi-hat: races the direct and unfolded forms (or runs the unfolded
// form first when race is off). Verdict transfer: any sat answer and a direct
// unsat answer are final; an unfolded unsat only marks bounded_unsat. A lane
// that crashes is retried once.
DecideResult decide(const Expr& phi_hat, const SolverConfig& cfg, int k,
                    bool race);

// Satisfiability of frontier /\ phi-hat, where `frontier_smt` is an SMT-LIB
// formula over the program's declared symbols, spliced verbatim. Sat (either
// form) keeps the frontier; only a direct unsat may drop it.
DecideResult prune_check(const Expr& phi_hat, const std::string& frontier_smt,
                         const std::vector<VarDecl>& decls,
                         const SolverConfig& cfg, int k, bool race);

// Verdict as a JSON object (status, winner, bounded_unsat, model, timings).
std::string verdict_json(const DecideResult& r);

}  // namespace apc
