// SPDX-License-Identifier: MIT
#include "apc/state.hpp"

#include <functional>
#include <sstream>
#include <stdexcept>

namespace apc {

const Expr& SymbolicState::scalar(const std::string& name) const {
    auto it = vars.find(name);
    if (it == vars.end() || !std::holds_alternative<Expr>(it->second))
        throw std::out_of_range("no scalar binding for " + name);
    return std::get<Expr>(it->second);
}

const ArrayVal& SymbolicState::array(const std::string& name) const {
    auto it = vars.find(name);
    if (it == vars.end() || !std::holds_alternative<ArrayVal>(it->second))
        throw std::out_of_range("no array binding for " + name);
    return std::get<ArrayVal>(it->second);
}

void SymbolicState::set_scalar(const std::string& name, const Expr& v) {
    vars[name] = starify(v);
}

void SymbolicState::set_array(const std::string& name, ArrayVal v) {
    if (v.body->has_star) v.body = mk_star();
    vars[name] = std::move(v);
}

SymbolicState generic_state(const std::vector<VarDecl>& decls) {
    SymbolicState th;
    for (const auto& d : decls) {
        if (d.arity == 0) {
            th.vars[d.name] = mk_sym(d.name);
        } else {
            ArrayVal a;
            std::vector<Expr> args;
            for (int i = 0; i < d.arity; ++i) {
                a.params.push_back(ctx().fresh_placeholder());
                args.push_back(mk_placeholder(a.params.back()));
            }
            a.body = mk_app(d.name, args);
            th.vars[d.name] = std::move(a);
        }
    }
    return th;
}

SymbolicState star_state(const std::vector<VarDecl>& decls) {
    SymbolicState th;
    for (const auto& d : decls) {
        if (d.arity == 0) {
            th.vars[d.name] = mk_star();
        } else {
            ArrayVal a;
            for (int i = 0; i < d.arity; ++i)
                a.params.push_back(ctx().fresh_placeholder());
            a.body = mk_star();
            th.vars[d.name] = std::move(a);
        }
    }
    return th;
}

Expr apply_array(const ArrayVal& a, const std::vector<Expr>& args) {
    if (args.size() != a.params.size())
        throw std::invalid_argument("array arity mismatch");
    std::vector<std::pair<Expr, Expr>> subst;
    for (std::size_t i = 0; i < args.size(); ++i)
        subst.emplace_back(mk_placeholder(a.params[i]), args[i]);
    return substitute(a.body, subst);
}

Expr apply_state(const Expr& e, const SymbolicState& theta) {
    std::function<Expr(const Expr&)> go = [&](const Expr& n) -> Expr {
        switch (n->kind) {
            case Kind::Sym: {
                auto it = theta.vars.find(n->name);
                if (it != theta.vars.end() &&
                    std::holds_alternative<Expr>(it->second))
                    return std::get<Expr>(it->second);
                return n;
            }
            case Kind::App: {
                std::vector<Expr> args;
                for (const auto& k : n->kids) args.push_back(go(k));
                auto it = theta.vars.find(n->name);
                if (it != theta.vars.end() &&
                    std::holds_alternative<ArrayVal>(it->second))
                    return apply_array(std::get<ArrayVal>(it->second), args);
                return mk_app(n->name, args);
            }
            case Kind::IntConst:
            case Kind::BoolConst:
            case Kind::BoolSym:
            case Kind::Star:
            case Kind::Counter:
            case Kind::Param:
            case Kind::Placeholder:
                return n;
            case Kind::Linear: {
                Expr acc = mk_int(n->lin_const);
                for (const auto& [t, c] : n->terms) acc = add(acc, mul_const(c, go(t)));
                return acc;
            }
            case Kind::Mul: return mul(go(n->kids[0]), go(n->kids[1]));
            case Kind::Mod: return mk_mod(go(n->kids[0]), go(n->kids[1]));
            case Kind::Max: return mk_max(go(n->kids[0]), go(n->kids[1]));
            case Kind::Rel: {
                // Re-run relation construction so star interning applies.
                Expr d = go(n->kids[0]);
                switch (n->rel) {
                    case RelOp::Eq: return rel(CmpOp::Eq, d, mk_int(0));
                    case RelOp::Ne: return rel(CmpOp::Ne, d, mk_int(0));
                    case RelOp::Lt: return rel(CmpOp::Lt, d, mk_int(0));
                    case RelOp::Le: return rel(CmpOp::Le, d, mk_int(0));
                }
                return n;
            }
            case Kind::Not: return mk_not(go(n->kids[0]));
            case Kind::And: {
                std::vector<Expr> xs;
                for (const auto& k : n->kids) xs.push_back(go(k));
                return mk_and(std::move(xs));
            }
            case Kind::Or: {
                std::vector<Expr> xs;
                for (const auto& k : n->kids) xs.push_back(go(k));
                return mk_or(std::move(xs));
            }
            case Kind::Implies: return implies(go(n->kids[0]), go(n->kids[1]));
            case Kind::Ite:
                return ite(go(n->kids[0]), go(n->kids[1]), go(n->kids[2]));
            case Kind::Forall: return forall(n->binders, go(n->kids[0]));
            case Kind::Exists: return exists(n->binders, go(n->kids[0]));
        }
        throw std::logic_error("apply_state: bad kind");
    };
    return go(e);
}

ArrayVal apply_state(const ArrayVal& a, const SymbolicState& theta) {
    ArrayVal r;
    r.params = a.params;
    r.body = apply_state(a.body, theta);
    return r;
}

SymbolicState compose(const SymbolicState& theta, const SymbolicState& theta2) {
    SymbolicState out;
    for (const auto& [name, v] : theta.vars) {
        if (std::holds_alternative<Expr>(v))
            out.set_scalar(name, apply_state(std::get<Expr>(v), theta2));
        else
            out.set_array(name, apply_state(std::get<ArrayVal>(v), theta2));
    }
    return out;
}

std::string value_to_text(const Value& v) {
    if (std::holds_alternative<Expr>(v)) return to_text(std::get<Expr>(v));
    const auto& a = std::get<ArrayVal>(v);
    std::ostringstream os;
    os << "lambda (";
    for (std::size_t i = 0; i < a.params.size(); ++i)
        os << (i ? " " : "") << "x" << a.params[i];
    os << ") " << to_text(a.body);
    return os.str();
}

std::string state_to_text(const SymbolicState& theta) {
    std::ostringstream os;
    bool first = true;
    for (const auto& [name, v] : theta.vars) {
        if (!first) os << ", ";
        first = false;
        os << name << " -> " << value_to_text(v);
    }
    return os.str();
}

}  // namespace apc
