// SPDX-License-Identifier: MIT
//
// SMT backend: SMT-LIB 2.6 emission for the expression kernel, solver
// subprocess sessions spoken over stdin/stdout pipes, and sat/unsat/model
// response parsing. The solver command is configurable via the APC_SOLVER
// environment variable; long-lived worker processes are pooled and reset
// between queries to amortize solver startup cost.
#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "apc/expr.hpp"

namespace apc {

// ---- model ------------------------------------------------------------------
// A parsed solver model. Uninterpreted functions keep an evaluator closure
// (solver function graphs can be arbitrary ite/let/arith bodies) plus the
// finite point list harvested from ite chains for display.
struct FnModel {
    std::vector<std::pair<std::vector<long long>, long long>> points;
    long long def = 0;
    std::function<long long(const std::vector<long long>&)> eval;
};

struct Model {
    std::map<std::string, long long> ints;
    std::map<std::string, bool> bools;
    std::map<std::string, FnModel> funcs;

    long long int_or(const std::string& name, long long dflt) const {
        auto it = ints.find(name);
        return it == ints.end() ? dflt : it->second;
    }
};

// ---- outcomes ---------------------------------------------------------------
enum class SmtStatus { Sat, Unsat, Unknown, Error };

struct SmtOutcome {
    SmtStatus status = SmtStatus::Unknown;
    std::string error_text;
    std::optional<Model> model;
};

enum class Validity { Valid, NotValid, Unknown };

struct SolverConfig {
    std::string command;       // shell command line of the solver
    double timeout_sec = 30.0; // per-query deadline
};

// Default command: $APC_SOLVER if set, else the bundled node shim.
SolverConfig default_solver();

// ---- emission ---------------------------------------------------------------
// S-expression form of one formula (no declarations).
std::string emit_formula(const Expr& e);
// Complete script: set-logic, declarations for every free symbol (star terms
// become fresh unconstrained Int constants), assertion, check-sat.
// `extra_smt` is spliced verbatim between declarations and the assertion.
std::string emit_script(const Expr& e, bool want_model,
                        const std::string& extra_smt = "");

// ---- checks -----------------------------------------------------------------
SmtOutcome check_sat(const Expr& e, const SolverConfig& cfg, bool want_model,
                     const std::string& extra_smt = "");
// Validity of e == unsat of (not e).
Validity check_valid(const Expr& e, const SolverConfig& cfg);
// Terms: validity of a = b; formulas: validity of a <-> b.
// SolverUnknown maps to false (treated as not-equal by callers).
bool expr_equal(const Expr& a, const Expr& b, const SolverConfig& cfg);

// Runs a raw SMT-LIB script (must contain its own check-sat). When
// want_model, a (get-model) round is issued after a sat answer.
SmtOutcome run_script(const std::string& script, const SolverConfig& cfg,
                      bool want_model);

// Asynchronous script run for the racing decision procedure: returns a join
// handle; cancel kills the worker.
struct AsyncCheck {
    struct Impl;
    std::shared_ptr<Impl> impl;
    // Blocks until the query finishes or the deadline passes.
    SmtOutcome join();
    bool done() const;
    void cancel();
};
AsyncCheck start_script(const std::string& script, const SolverConfig& cfg,
                        bool want_model);

// Stops all pooled workers (used by tests/CLI teardown).
void shutdown_solver_pool();

// Query counter for diagnostics.
long long solver_query_count();

}  // namespace apc
