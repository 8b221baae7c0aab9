// SPDX-License-Identifier: MIT
//
// Program model: the C-like mini-language parser, the control-flow graph
// (branching vertices with paired Assume edges, out-degree <= 2), loop-entry
// normalization, prefix-relative loop detection, induced programs, and
// reduction of arbitrary start-to-target paths to backbone paths.
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "apc/expr.hpp"
#include "apc/state.hpp"

namespace apc {

// ---- program-side expressions ----------------------------------------------
struct PExpr {
    enum class K { Int, Var, ArrRead, Add, Sub, Mul, Mod, Neg };
    K k = K::Int;
    long long val = 0;
    std::string name;                          // Var/ArrRead
    std::vector<std::shared_ptr<PExpr>> kids;  // operands or array indices
};
using PExprPtr = std::shared_ptr<PExpr>;

struct PPred {
    CmpOp op = CmpOp::Eq;
    PExprPtr lhs, rhs;
};

// ---- instructions -----------------------------------------------------------
struct Instruction {
    enum class K { Skip, Assume, Assert, Assign, ArrayAssign };
    K k = K::Skip;
    PPred pred;                  // Assume/Assert
    std::string var;             // assignments
    std::vector<PExprPtr> idxs;  // ArrayAssign indices
    PExprPtr rhs;                // assignment right-hand side

    std::string to_text() const;
};

Instruction make_skip();

// ---- control-flow graph -----------------------------------------------------
struct ProgramGraph {
    struct Edge {
        int dst;
        Instruction instr;
    };
    // succ[v] is ordered: at branching vertices the Assume(p) edge precedes
    // the Assume(!p) edge, fixing the DFS order everywhere downstream.
    std::vector<std::vector<Edge>> succ;
    int start = 0;
    int target = 0;
    std::vector<VarDecl> decls;

    int add_vertex();
    void add_edge(int src, int dst, Instruction instr);
    std::size_t vertex_count() const { return succ.size(); }
    bool scalar_declared(const std::string& name) const;
    int array_arity(const std::string& name) const;  // 0 if not an array
};

// ---- errors -----------------------------------------------------------------
struct SyntaxError : std::runtime_error {
    std::size_t offset;
    SyntaxError(std::size_t off, const std::string& msg)
        : std::runtime_error(msg + " at offset " + std::to_string(off)), offset(off) {}
};
struct TypeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StructureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- operations -------------------------------------------------------------
ProgramGraph parse_program(const std::string& source);

// Gives every in-edge of every loop-entry vertex a Skip label by splitting
// the edge through a fresh copy vertex. Idempotent.
ProgramGraph normalize(const ProgramGraph& p);

struct Loop {
    int entry = 0;
    std::set<int> body;   // includes entry
    std::set<int> exits;  // vertices outside body with an in-edge from body
};

// Loop at the last vertex of `prefix` (acyclic path from start), relative to
// the prefix interior: smallest vertex set closed under cycles through v that
// avoid prefix vertices other than v. Empty optional when no such cycle.
std::optional<Loop> find_loops(const ProgramGraph& p, const std::vector<int>& prefix);

// Copy of the loop body; the entry copy becomes the start, a fresh vertex
// becomes the target, and every edge into the entry is redirected to it.
ProgramGraph induced_program(const ProgramGraph& p, const Loop& loop);

// Repeatedly removes the segment between the first repeated vertex's first
// and last occurrence until the path is acyclic.
std::vector<int> reduce_to_backbone(std::vector<int> pi);

// Loop nesting headers of the whole graph (used by normalize).
std::set<int> loop_headers(const ProgramGraph& p);

// ---- symbolic evaluation of program expressions -----------------------------
Expr eval_pexpr(const SymbolicState& theta, const PExpr& e);
Expr eval_pred(const SymbolicState& theta, const PPred& p);
Expr eval_pred_negated(const SymbolicState& theta, const PPred& p);

// ---- JSON CFG dump ----------------------------------------------------------
std::string cfg_to_json(const ProgramGraph& p);

}  // namespace apc
