// SPDX-License-Identifier: MIT
#include "apc/program.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

#include <json.hpp>

namespace apc {

// ---------------------------------------------------------------------------
// program expression helpers
// ---------------------------------------------------------------------------

static std::string ptext(const PExpr& e) {
    switch (e.k) {
        case PExpr::K::Int: return std::to_string(e.val);
        case PExpr::K::Var: return e.name;
        case PExpr::K::ArrRead: {
            std::string s = e.name;
            for (const auto& k : e.kids) s += "[" + ptext(*k) + "]";
            return s;
        }
        case PExpr::K::Add:
            return "(" + ptext(*e.kids[0]) + " + " + ptext(*e.kids[1]) + ")";
        case PExpr::K::Sub:
            return "(" + ptext(*e.kids[0]) + " - " + ptext(*e.kids[1]) + ")";
        case PExpr::K::Mul:
            return "(" + ptext(*e.kids[0]) + " * " + ptext(*e.kids[1]) + ")";
        case PExpr::K::Mod:
            return "(" + ptext(*e.kids[0]) + " % " + ptext(*e.kids[1]) + ")";
        case PExpr::K::Neg: return "-" + ptext(*e.kids[0]);
    }
    return "?";
}

static const char* cmp_text(CmpOp op) {
    switch (op) {
        case CmpOp::Eq: return "==";
        case CmpOp::Ne: return "!=";
        case CmpOp::Lt: return "<";
        case CmpOp::Le: return "<=";
        case CmpOp::Gt: return ">";
        case CmpOp::Ge: return ">=";
    }
    return "?";
}

static std::string pred_text(const PPred& p) {
    return ptext(*p.lhs) + " " + cmp_text(p.op) + " " + ptext(*p.rhs);
}

std::string Instruction::to_text() const {
    switch (k) {
        case K::Skip: return "skip";
        case K::Assume: return "assume(" + pred_text(pred) + ")";
        case K::Assert: return "assert(" + pred_text(pred) + ")";
        case K::Assign: return var + " = " + ptext(*rhs);
        case K::ArrayAssign: {
            std::string s = var;
            for (const auto& i : idxs) s += "[" + ptext(*i) + "]";
            return s + " = " + ptext(*rhs);
        }
    }
    return "?";
}

Instruction make_skip() { return Instruction{}; }

// ---------------------------------------------------------------------------
// graph basics
// ---------------------------------------------------------------------------

int ProgramGraph::add_vertex() {
    succ.emplace_back();
    return static_cast<int>(succ.size()) - 1;
}

void ProgramGraph::add_edge(int src, int dst, Instruction instr) {
    succ[src].push_back(Edge{dst, std::move(instr)});
}

bool ProgramGraph::scalar_declared(const std::string& name) const {
    for (const auto& d : decls)
        if (d.name == name) return d.arity == 0;
    return false;
}

int ProgramGraph::array_arity(const std::string& name) const {
    for (const auto& d : decls)
        if (d.name == name) return d.arity;
    return 0;
}

// ---------------------------------------------------------------------------
// lexer
// ---------------------------------------------------------------------------

namespace {

enum class Tok {
    End, Ident, Int, Punct,
};

struct Lexer {
    const std::string& src;
    std::size_t pos = 0;
    Tok tok = Tok::End;
    std::string text;    // Ident/Punct spelling
    long long ival = 0;  // Int value
    std::size_t tok_pos = 0;

    explicit Lexer(const std::string& s) : src(s) { advance(); }

    void advance() {
        while (pos < src.size() && std::isspace((unsigned char)src[pos])) ++pos;
        // line comments
        while (pos + 1 < src.size() && src[pos] == '/' && src[pos + 1] == '/') {
            while (pos < src.size() && src[pos] != '\n') ++pos;
            while (pos < src.size() && std::isspace((unsigned char)src[pos])) ++pos;
        }
        tok_pos = pos;
        if (pos >= src.size()) {
            tok = Tok::End;
            text.clear();
            return;
        }
        char c = src[pos];
        if (std::isalpha((unsigned char)c) || c == '_') {
            std::size_t b = pos;
            while (pos < src.size() &&
                   (std::isalnum((unsigned char)src[pos]) || src[pos] == '_'))
                ++pos;
            tok = Tok::Ident;
            text = src.substr(b, pos - b);
            return;
        }
        if (std::isdigit((unsigned char)c)) {
            std::size_t b = pos;
            while (pos < src.size() && std::isdigit((unsigned char)src[pos])) ++pos;
            tok = Tok::Int;
            ival = std::stoll(src.substr(b, pos - b));
            return;
        }
        // two-char operators first
        static const char* two[] = {"==", "!=", "<=", ">="};
        for (const char* t : two) {
            if (src.compare(pos, 2, t) == 0) {
                tok = Tok::Punct;
                text = t;
                pos += 2;
                return;
            }
        }
        tok = Tok::Punct;
        text = std::string(1, c);
        ++pos;
    }

    bool is_punct(const char* s) const { return tok == Tok::Punct && text == s; }
    bool is_kw(const char* s) const { return tok == Tok::Ident && text == s; }
    void expect_punct(const char* s) {
        if (!is_punct(s)) throw SyntaxError(tok_pos, std::string("expected '") + s + "'");
        advance();
    }
};

const std::set<std::string> kKeywords = {"var",  "int",    "assume", "assert", "skip",
                                         "target", "if",   "else",   "while",  "for",
                                         "break"};

struct Parser {
    Lexer lx;
    ProgramGraph g;
    int cur = 0;
    int target_vertex = -1;
    std::vector<int> break_targets;

    explicit Parser(const std::string& s) : lx(s) {}

    [[noreturn]] void fail(const std::string& msg) { throw SyntaxError(lx.tok_pos, msg); }

    std::string expect_ident() {
        if (lx.tok != Tok::Ident || kKeywords.count(lx.text))
            fail("expected identifier");
        std::string s = lx.text;
        lx.advance();
        return s;
    }

    void check_scalar(const std::string& name) {
        if (g.array_arity(name) > 0)
            throw TypeError("array variable used as scalar: " + name);
        if (!g.scalar_declared(name))
            throw TypeError("undeclared variable: " + name);
    }

    PExprPtr parse_factor() {
        auto e = std::make_shared<PExpr>();
        if (lx.tok == Tok::Int) {
            e->k = PExpr::K::Int;
            e->val = lx.ival;
            lx.advance();
            return e;
        }
        if (lx.is_punct("-")) {
            lx.advance();
            e->k = PExpr::K::Neg;
            e->kids.push_back(parse_factor());
            return e;
        }
        if (lx.is_punct("(")) {
            lx.advance();
            auto inner = parse_expr();
            lx.expect_punct(")");
            return inner;
        }
        if (lx.tok == Tok::Ident && !kKeywords.count(lx.text)) {
            std::string name = expect_ident();
            if (lx.is_punct("[")) {
                e->k = PExpr::K::ArrRead;
                e->name = name;
                while (lx.is_punct("[")) {
                    lx.advance();
                    e->kids.push_back(parse_expr());
                    lx.expect_punct("]");
                }
                int ar = g.array_arity(name);
                if (ar == 0) throw TypeError("not an array: " + name);
                if ((int)e->kids.size() != ar)
                    throw TypeError("dimension mismatch on " + name);
                return e;
            }
            check_scalar(name);
            e->k = PExpr::K::Var;
            e->name = name;
            return e;
        }
        fail("expected expression");
    }

    PExprPtr parse_term() {
        auto lhs = parse_factor();
        while (lx.is_punct("*") || lx.is_punct("%")) {
            auto op = lx.text == "*" ? PExpr::K::Mul : PExpr::K::Mod;
            lx.advance();
            auto e = std::make_shared<PExpr>();
            e->k = op;
            e->kids = {lhs, parse_factor()};
            lhs = e;
        }
        return lhs;
    }

    PExprPtr parse_expr() {
        auto lhs = parse_term();
        while (lx.is_punct("+") || lx.is_punct("-")) {
            auto op = lx.text == "+" ? PExpr::K::Add : PExpr::K::Sub;
            lx.advance();
            auto e = std::make_shared<PExpr>();
            e->k = op;
            e->kids = {lhs, parse_term()};
            lhs = e;
        }
        return lhs;
    }

    PPred parse_pred() {
        PPred p;
        p.lhs = parse_expr();
        if (lx.is_punct("==")) p.op = CmpOp::Eq;
        else if (lx.is_punct("!=")) p.op = CmpOp::Ne;
        else if (lx.is_punct("<=")) p.op = CmpOp::Le;
        else if (lx.is_punct("<")) p.op = CmpOp::Lt;
        else if (lx.is_punct(">=")) p.op = CmpOp::Ge;
        else if (lx.is_punct(">")) p.op = CmpOp::Gt;
        else fail("expected relational operator");
        lx.advance();
        p.rhs = parse_expr();
        return p;
    }

    void parse_decl() {
        lx.advance();  // 'var'
        VarDecl d;
        d.name = expect_ident();
        for (const auto& e : g.decls)
            if (e.name == d.name) throw TypeError("redeclared variable: " + d.name);
        lx.expect_punct(":");
        if (!lx.is_kw("int")) fail("expected 'int'");
        lx.advance();
        while (lx.is_punct("[")) {
            lx.advance();
            if (lx.tok != Tok::Int) fail("expected array extent");
            lx.advance();  // extents are metadata only
            lx.expect_punct("]");
            ++d.arity;
        }
        lx.expect_punct(";");
        g.decls.push_back(d);
    }

    // Appends one statement's edges starting at `cur`.
    void parse_stmt() {
        if (lx.is_kw("skip")) {
            lx.advance();
            lx.expect_punct(";");
            step(make_skip());
            return;
        }
        if (lx.is_kw("target")) {
            lx.advance();
            lx.expect_punct(";");
            if (target_vertex < 0) target_vertex = g.add_vertex();
            else throw StructureError("multiple target statements");
            g.add_edge(cur, target_vertex, make_skip());
            cur = g.add_vertex();  // dead continuation
            return;
        }
        if (lx.is_kw("break")) {
            lx.advance();
            lx.expect_punct(";");
            if (break_targets.empty())
                throw StructureError("break outside of a loop");
            g.add_edge(cur, break_targets.back(), make_skip());
            cur = g.add_vertex();  // dead continuation
            return;
        }
        if (lx.is_kw("assume") || lx.is_kw("assert")) {
            bool is_assert = lx.text == "assert";
            lx.advance();
            lx.expect_punct("(");
            Instruction in;
            in.k = is_assert ? Instruction::K::Assert : Instruction::K::Assume;
            in.pred = parse_pred();
            lx.expect_punct(")");
            lx.expect_punct(";");
            step(std::move(in));
            return;
        }
        if (lx.is_kw("if")) {
            lx.advance();
            lx.expect_punct("(");
            PPred p = parse_pred();
            lx.expect_punct(")");
            int branch = cur;
            int then_entry = g.add_vertex();
            Instruction t;
            t.k = Instruction::K::Assume;
            t.pred = p;
            g.add_edge(branch, then_entry, t);
            cur = then_entry;
            parse_block();
            int then_end = cur;
            if (lx.is_kw("else")) {
                lx.advance();
                int else_entry = g.add_vertex();
                g.add_edge(branch, else_entry, negated(p));
                cur = else_entry;
                parse_block();
                int else_end = cur;
                int join = g.add_vertex();
                g.add_edge(then_end, join, make_skip());
                g.add_edge(else_end, join, make_skip());
                cur = join;
            } else {
                int join = g.add_vertex();
                g.add_edge(branch, join, negated(p));
                g.add_edge(then_end, join, make_skip());
                cur = join;
            }
            return;
        }
        if (lx.is_kw("while")) {
            lx.advance();
            lx.expect_punct("(");
            PPred p = parse_pred();
            lx.expect_punct(")");
            loop_body(p, nullptr);
            return;
        }
        if (lx.is_kw("for")) {
            lx.advance();
            lx.expect_punct("(");
            parse_simple_stmt();  // init, consumes its ';'
            PPred p = parse_pred();
            lx.expect_punct(";");
            // step statement; the closing ';' may be elided before ')'
            Instruction stepi = parse_simple_instr();
            if (lx.is_punct(";")) lx.advance();
            lx.expect_punct(")");
            loop_body(p, &stepi);
            return;
        }
        // assignment
        parse_simple_stmt();
    }

    Instruction negated(const PPred& p) {
        static const std::map<CmpOp, CmpOp> neg = {
            {CmpOp::Eq, CmpOp::Ne}, {CmpOp::Ne, CmpOp::Eq}, {CmpOp::Lt, CmpOp::Ge},
            {CmpOp::Le, CmpOp::Gt}, {CmpOp::Gt, CmpOp::Le}, {CmpOp::Ge, CmpOp::Lt}};
        Instruction in;
        in.k = Instruction::K::Assume;
        in.pred = p;
        in.pred.op = neg.at(p.op);
        return in;
    }

    void loop_body(const PPred& p, const Instruction* step_instr) {
        int guard = cur;
        int body_entry = g.add_vertex();
        Instruction t;
        t.k = Instruction::K::Assume;
        t.pred = p;
        g.add_edge(guard, body_entry, t);
        int exit = g.add_vertex();
        g.add_edge(guard, exit, negated(p));
        break_targets.push_back(exit);
        cur = body_entry;
        parse_block();
        break_targets.pop_back();
        if (step_instr) {
            int s = g.add_vertex();
            g.add_edge(cur, s, *step_instr);
            cur = s;
        }
        g.add_edge(cur, guard, make_skip());  // back edge
        cur = exit;
    }

    // assignment or skip, used in for-headers; consumes the trailing ';' if
    // present (for-step callers handle the elided form).
    Instruction parse_simple_instr() {
        if (lx.is_kw("skip")) {
            lx.advance();
            return make_skip();
        }
        std::string name = expect_ident();
        Instruction in;
        if (lx.is_punct("[")) {
            in.k = Instruction::K::ArrayAssign;
            in.var = name;
            while (lx.is_punct("[")) {
                lx.advance();
                in.idxs.push_back(parse_expr());
                lx.expect_punct("]");
            }
            int ar = g.array_arity(name);
            if (ar == 0) throw TypeError("not an array: " + name);
            if ((int)in.idxs.size() != ar)
                throw TypeError("dimension mismatch on " + name);
        } else {
            check_scalar(name);
            in.k = Instruction::K::Assign;
            in.var = name;
        }
        lx.expect_punct("=");
        in.rhs = parse_expr();
        return in;
    }

    void parse_simple_stmt() {
        Instruction in = parse_simple_instr();
        lx.expect_punct(";");
        step(std::move(in));
    }

    void step(Instruction in) {
        int next = g.add_vertex();
        g.add_edge(cur, next, std::move(in));
        cur = next;
    }

    void parse_block() {
        if (lx.is_punct("{")) {
            lx.advance();
            while (!lx.is_punct("}")) {
                if (lx.tok == Tok::End) fail("unterminated block");
                parse_stmt();
            }
            lx.advance();
        } else {
            parse_stmt();
        }
    }

    ProgramGraph run() {
        g.start = g.add_vertex();
        int first = g.add_vertex();
        // implicit assume(true) entry edge: encoded as Skip (no predicate in
        // the instruction set carries `true`; Skip has identical semantics)
        g.add_edge(g.start, first, make_skip());
        cur = first;
        while (lx.is_kw("var")) parse_decl();
        while (lx.tok != Tok::End) parse_stmt();
        if (target_vertex < 0) throw StructureError("no target statement");
        g.target = target_vertex;
        return g;
    }
};

}  // namespace

ProgramGraph parse_program(const std::string& source) {
    Parser p(source);
    return p.run();
}

// ---------------------------------------------------------------------------
// loops
// ---------------------------------------------------------------------------

namespace {

// Tarjan SCC restricted to an allowed vertex set.
struct Scc {
    const ProgramGraph& g;
    const std::set<int>& allowed;
    std::map<int, int> index, low;
    std::vector<int> stack;
    std::set<int> on_stack;
    int next_index = 0;
    std::vector<std::set<int>> sccs;

    Scc(const ProgramGraph& gg, const std::set<int>& a) : g(gg), allowed(a) {}

    void strongconnect(int v) {
        index[v] = low[v] = next_index++;
        stack.push_back(v);
        on_stack.insert(v);
        for (const auto& e : g.succ[v]) {
            if (!allowed.count(e.dst)) continue;
            if (!index.count(e.dst)) {
                strongconnect(e.dst);
                low[v] = std::min(low[v], low[e.dst]);
            } else if (on_stack.count(e.dst)) {
                low[v] = std::min(low[v], index[e.dst]);
            }
        }
        if (low[v] == index[v]) {
            std::set<int> s;
            while (true) {
                int w = stack.back();
                stack.pop_back();
                on_stack.erase(w);
                s.insert(w);
                if (w == v) break;
            }
            sccs.push_back(std::move(s));
        }
    }

    void run() {
        for (int v : allowed)
            if (!index.count(v)) strongconnect(v);
    }
};

bool has_self_edge(const ProgramGraph& g, int v) {
    for (const auto& e : g.succ[v])
        if (e.dst == v) return true;
    return false;
}

void headers_rec(const ProgramGraph& g, const std::set<int>& vs, std::set<int>& out) {
    Scc scc(g, vs);
    scc.run();
    for (const auto& s : scc.sccs) {
        if (s.size() == 1 && !has_self_edge(g, *s.begin())) continue;
        std::set<int> hs;
        for (int v : s) {
            bool outside_in = false;
            for (std::size_t u = 0; u < g.vertex_count(); ++u) {
                if (s.count((int)u)) continue;
                for (const auto& e : g.succ[u])
                    if (e.dst == v) outside_in = true;
            }
            if (outside_in || v == g.start) hs.insert(v);
        }
        if (hs.empty()) hs.insert(*s.begin());
        out.insert(hs.begin(), hs.end());
        std::set<int> rest = s;
        for (int h : hs) rest.erase(h);
        if (!rest.empty()) headers_rec(g, rest, out);
    }
}

}  // namespace

std::set<int> loop_headers(const ProgramGraph& p) {
    std::set<int> all;
    for (std::size_t v = 0; v < p.vertex_count(); ++v) all.insert((int)v);
    std::set<int> out;
    headers_rec(p, all, out);
    return out;
}

ProgramGraph normalize(const ProgramGraph& p) {
    ProgramGraph g = p;
    std::set<int> headers = loop_headers(g);
    std::size_t original = g.vertex_count();
    for (std::size_t u = 0; u < original; ++u) {
        for (auto& e : g.succ[u]) {
            if (headers.count(e.dst) && e.instr.k != Instruction::K::Skip) {
                int w = g.add_vertex();
                int v = e.dst;
                e.dst = w;
                g.add_edge(w, v, make_skip());
            }
        }
    }
    return g;
}

std::optional<Loop> find_loops(const ProgramGraph& p, const std::vector<int>& prefix) {
    int v = prefix.back();
    std::set<int> allowed;
    for (std::size_t u = 0; u < p.vertex_count(); ++u) allowed.insert((int)u);
    for (std::size_t i = 0; i + 1 < prefix.size(); ++i) allowed.erase(prefix[i]);
    allowed.insert(v);
    std::vector<std::vector<int>> fwd_adj(p.vertex_count()), bwd_adj(p.vertex_count());
    for (std::size_t u = 0; u < p.vertex_count(); ++u)
        for (const auto& e : p.succ[u]) {
            fwd_adj[u].push_back(e.dst);
            bwd_adj[e.dst].push_back((int)u);
        }
    auto reach = [&](const std::vector<std::vector<int>>& adj) {
        std::set<int> seen{v};
        std::vector<int> work{v};
        while (!work.empty()) {
            int u = work.back();
            work.pop_back();
            for (int nxt : adj[u])
                if (allowed.count(nxt) && seen.insert(nxt).second)
                    work.push_back(nxt);
        }
        return seen;
    };
    std::set<int> fwd = reach(fwd_adj), bwd = reach(bwd_adj);
    std::set<int> body;
    std::set_intersection(fwd.begin(), fwd.end(), bwd.begin(), bwd.end(),
                          std::inserter(body, body.begin()));
    if (body.size() == 1 && !has_self_edge(p, v)) return std::nullopt;
    Loop loop;
    loop.entry = v;
    loop.body = body;
    for (int u : body)
        for (const auto& e : p.succ[u])
            if (!body.count(e.dst)) loop.exits.insert(e.dst);
    return loop;
}

ProgramGraph induced_program(const ProgramGraph& p, const Loop& loop) {
    ProgramGraph g;
    g.decls = p.decls;
    std::map<int, int> id;
    // entry first so it becomes a stable vertex 0 = start
    id[loop.entry] = g.add_vertex();
    for (int v : loop.body)
        if (v != loop.entry) id[v] = g.add_vertex();
    int lt = g.add_vertex();
    g.start = id[loop.entry];
    g.target = lt;
    for (int v : loop.body) {
        for (const auto& e : p.succ[v]) {
            if (e.dst == loop.entry)
                g.add_edge(id[v], lt, e.instr);  // redirected with original label
            else if (loop.body.count(e.dst))
                g.add_edge(id[v], id[e.dst], e.instr);
            // edges to exits are not part of the induced program
        }
    }
    return normalize(g);
}

std::vector<int> reduce_to_backbone(std::vector<int> pi) {
    while (true) {
        bool changed = false;
        for (std::size_t i = 0; i < pi.size() && !changed; ++i) {
            std::size_t last = i;
            for (std::size_t j = i + 1; j < pi.size(); ++j)
                if (pi[j] == pi[i]) last = j;
            if (last != i) {
                pi.erase(pi.begin() + (long)i + 1, pi.begin() + (long)last + 1);
                changed = true;
            }
        }
        if (!changed) return pi;
    }
}

// ---------------------------------------------------------------------------
// symbolic evaluation of program expressions
// ---------------------------------------------------------------------------

Expr eval_pexpr(const SymbolicState& theta, const PExpr& e) {
    switch (e.k) {
        case PExpr::K::Int: return mk_int(e.val);
        case PExpr::K::Var: return theta.scalar(e.name);
        case PExpr::K::ArrRead: {
            std::vector<Expr> args;
            for (const auto& k : e.kids) args.push_back(eval_pexpr(theta, *k));
            return apply_array(theta.array(e.name), args);
        }
        case PExpr::K::Add: return add(eval_pexpr(theta, *e.kids[0]), eval_pexpr(theta, *e.kids[1]));
        case PExpr::K::Sub: return sub(eval_pexpr(theta, *e.kids[0]), eval_pexpr(theta, *e.kids[1]));
        case PExpr::K::Mul: return mul(eval_pexpr(theta, *e.kids[0]), eval_pexpr(theta, *e.kids[1]));
        case PExpr::K::Mod: return mk_mod(eval_pexpr(theta, *e.kids[0]), eval_pexpr(theta, *e.kids[1]));
        case PExpr::K::Neg: return neg(eval_pexpr(theta, *e.kids[0]));
    }
    throw std::logic_error("eval_pexpr: bad kind");
}

Expr eval_pred(const SymbolicState& theta, const PPred& p) {
    return rel(p.op, eval_pexpr(theta, *p.lhs), eval_pexpr(theta, *p.rhs));
}

Expr eval_pred_negated(const SymbolicState& theta, const PPred& p) {
    return mk_not(eval_pred(theta, p));
}

// ---------------------------------------------------------------------------
// JSON dump
// ---------------------------------------------------------------------------

std::string cfg_to_json(const ProgramGraph& p) {
    nlohmann::json j;
    j["start"] = p.start;
    j["target"] = p.target;
    j["vertices"] = nlohmann::json::array();
    for (std::size_t v = 0; v < p.vertex_count(); ++v) j["vertices"].push_back(v);
    j["edges"] = nlohmann::json::array();
    for (std::size_t v = 0; v < p.vertex_count(); ++v)
        for (const auto& e : p.succ[v])
            j["edges"].push_back({{"src", v}, {"dst", e.dst}, {"instr", e.instr.to_text()}});
    j["vars"] = nlohmann::json::object();
    for (const auto& d : p.decls) {
        std::string t = "int";
        for (int i = 0; i < d.arity; ++i) t += "[]";
        j["vars"][d.name] = t;
    }
    return j.dump(2);
}

}  // namespace apc
