// SPDX-License-Identifier: MIT
//
// Concrete interpreter over the control-flow graph.
#include "apc/interp.hpp"

#include <map>
#include <vector>

namespace apc {

namespace {

struct DivByZero {};

// SMT-LIB semantics: 0 <= (mod a b) < |b|.
long long emod(long long a, long long b) {
    if (b == 0) throw DivByZero{};
    long long m = a % b;
    if (m < 0) m += (b < 0 ? -b : b);
    return m;
}

struct Machine {
    std::map<std::string, long long> scalars;
    // Base function from the input model (may be absent -> zero), plus the
    // writes performed so far.
    struct Arr {
        const FnModel* base = nullptr;
        std::map<std::vector<long long>, long long> writes;
        long long read(const std::vector<long long>& idx) const {
            auto it = writes.find(idx);
            if (it != writes.end()) return it->second;
            return base && base->eval ? base->eval(idx) : 0;
        }
    };
    std::map<std::string, Arr> arrays;

    long long eval(const PExpr& e) const {
        switch (e.k) {
            case PExpr::K::Int: return e.val;
            case PExpr::K::Var: {
                auto it = scalars.find(e.name);
                return it == scalars.end() ? 0 : it->second;
            }
            case PExpr::K::ArrRead: {
                std::vector<long long> idx;
                for (const auto& kid : e.kids) idx.push_back(eval(*kid));
                auto it = arrays.find(e.name);
                if (it == arrays.end()) return 0;
                return it->second.read(idx);
            }
            case PExpr::K::Add: return eval(*e.kids[0]) + eval(*e.kids[1]);
            case PExpr::K::Sub: return eval(*e.kids[0]) - eval(*e.kids[1]);
            case PExpr::K::Mul: return eval(*e.kids[0]) * eval(*e.kids[1]);
            case PExpr::K::Mod: return emod(eval(*e.kids[0]), eval(*e.kids[1]));
            case PExpr::K::Neg: return -eval(*e.kids[0]);
        }
        return 0;
    }

    bool holds(const PPred& p) const {
        long long a = eval(*p.lhs), b = eval(*p.rhs);
        switch (p.op) {
            case CmpOp::Eq: return a == b;
            case CmpOp::Ne: return a != b;
            case CmpOp::Lt: return a < b;
            case CmpOp::Le: return a <= b;
            case CmpOp::Gt: return a > b;
            case CmpOp::Ge: return a >= b;
        }
        return false;
    }
};

}  // namespace

ConcreteRun run_concrete(const ProgramGraph& p, const Model& input,
                         long long max_steps) {
    Machine m;
    for (const auto& d : p.decls) {
        if (d.arity == 0) {
            m.scalars[d.name] = input.int_or(d.name, 0);
        } else {
            Machine::Arr a;
            auto it = input.funcs.find(d.name);
            if (it != input.funcs.end()) a.base = &it->second;
            m.arrays[d.name] = a;
        }
    }

    ConcreteRun r;
    int v = p.start;
    try {
        for (;;) {
            if (v == p.target) {
                r.reached = true;
                return r;
            }
            if (r.steps >= max_steps) {
                r.out_of_fuel = true;
                return r;
            }
            const auto& out = p.succ[v];
            if (out.empty()) {
                r.halt_reason = "stuck";
                return r;
            }
            // Branching vertices carry paired assume edges; pick the edge
            // whose predicate holds. Everything else is a single edge.
            const ProgramGraph::Edge* taken = nullptr;
            if (out[0].instr.k == Instruction::K::Assume) {
                for (const auto& e : out)
                    if (m.holds(e.instr.pred)) {
                        taken = &e;
                        break;
                    }
                if (!taken) {
                    r.halt_reason = "assume";
                    return r;
                }
            } else {
                taken = &out[0];
                const Instruction& ins = taken->instr;
                switch (ins.k) {
                    case Instruction::K::Skip: break;
                    case Instruction::K::Assert:
                        if (!m.holds(ins.pred)) {
                            r.halt_reason = "assert";
                            return r;
                        }
                        break;
                    case Instruction::K::Assign:
                        m.scalars[ins.var] = m.eval(*ins.rhs);
                        break;
                    case Instruction::K::ArrayAssign: {
                        std::vector<long long> idx;
                        for (const auto& kid : ins.idxs)
                            idx.push_back(m.eval(*kid));
                        m.arrays[ins.var].writes[idx] = m.eval(*ins.rhs);
                        break;
                    }
                    case Instruction::K::Assume: break;  // unreachable
                }
            }
            v = taken->dst;
            ++r.steps;
        }
    } catch (const DivByZero&) {
        r.halt_reason = "divzero";
        return r;
    }
}

}  // namespace apc
