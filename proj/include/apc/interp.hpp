// SPDX-License-Identifier: MIT
//
// Concrete interpreter: runs a control-flow graph on a concrete initial state
// (typically a solver model) and reports whether the target vertex is
// reached. Used to validate satisfying models as genuine witnesses.
#pragma once

#include "apc/program.hpp"
#include "apc/smt.hpp"

namespace apc {

struct ConcreteRun {
    bool reached = false;       // execution arrived at the target vertex
    bool out_of_fuel = false;   // step budget exhausted before any verdict
    long long steps = 0;        // edges taken
    std::string halt_reason;    // "", "assume", "assert", "stuck", "divzero"
};

// Executes p.start -> ... with scalars initialized from input.ints (absent
// names default to 0) and arrays from input.funcs (absent arrays are the
// all-zero function), applying destructive array writes as an overlay.
// Execution stops at the target, at a failing assume/assert, at a vertex with
// no viable out-edge, or after max_steps edges.
ConcreteRun run_concrete(const ProgramGraph& p, const Model& input,
                         long long max_steps = 1000000);

}  // namespace apc
