// SPDX-License-Identifier: MIT
//
// Symbolic states: finite maps from program variables to symbolic values.
// Scalars map to expressions; arrays map to lambda values over placeholder
// parameters. Provides the generic initial state, the all-unknown state,
// state application e*theta, and state composition (theta theta')(a).
#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "apc/expr.hpp"

namespace apc {

struct ArrayVal {
    std::vector<long long> params;  // placeholder ids x<N>, one per dimension
    Expr body;
};

using Value = std::variant<Expr, ArrayVal>;

struct VarDecl {
    std::string name;
    int arity = 0;  // 0 = scalar, >0 = array dimensions
};

struct SymbolicState {
    std::map<std::string, Value> vars;

    bool has(const std::string& name) const { return vars.count(name) != 0; }
    const Expr& scalar(const std::string& name) const;
    const ArrayVal& array(const std::string& name) const;
    // Writes collapse star-tainted values (the observable collapsing rule).
    void set_scalar(const std::string& name, const Expr& v);
    void set_array(const std::string& name, ArrayVal v);
};

// Generic state theta_G: each scalar to its basic symbol, each array to
// lambda x. A(x).
SymbolicState generic_state(const std::vector<VarDecl>& decls);
// theta_star: every variable unknown.
SymbolicState star_state(const std::vector<VarDecl>& decls);

// Applies an array value to index expressions (beta reduction).
Expr apply_array(const ArrayVal& a, const std::vector<Expr>& args);

// e*theta: substitutes state values for basic symbols / array applications
// appearing free in e. Symbols absent from theta are left untouched.
Expr apply_state(const Expr& e, const SymbolicState& theta);
// Applies theta to an array value's body (parameters are untouched).
ArrayVal apply_state(const ArrayVal& a, const SymbolicState& theta);

// State composition (theta theta')(a) = (theta(a)) theta'.
SymbolicState compose(const SymbolicState& theta, const SymbolicState& theta2);

std::string value_to_text(const Value& v);
std::string state_to_text(const SymbolicState& theta);

}  // namespace apc
