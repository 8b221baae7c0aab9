// SPDX-License-Identifier: MIT
#include "apc/smt.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace apc {

// ===========================================================================
// emission
// ===========================================================================

namespace {

struct Emitter {
    std::ostringstream out;
    int next_star_term = 0;
    std::vector<std::string> star_decls;

    static std::string atom_name(const Expr& e) {
        switch (e->kind) {
            case Kind::Sym:
            case Kind::BoolSym: return e->name;
            case Kind::Counter: return "k" + std::to_string(e->ival);
            case Kind::Param: return "t" + std::to_string(e->ival);
            case Kind::Placeholder: return "x" + std::to_string(e->ival);
            default: throw std::logic_error("not an atom");
        }
    }

    void emit_int(long long v) {
        if (v < 0)
            out << "(- " << -v << ")";
        else
            out << v;
    }

    void emit(const Expr& e) {
        switch (e->kind) {
            case Kind::IntConst: emit_int(e->ival); return;
            case Kind::BoolConst: out << (e->bval ? "true" : "false"); return;
            case Kind::Sym:
            case Kind::BoolSym:
            case Kind::Counter:
            case Kind::Param:
            case Kind::Placeholder: out << atom_name(e); return;
            case Kind::Star: {
                // surviving term-star: fresh unconstrained Int constant
                std::string n = "star_t" + std::to_string(next_star_term++);
                star_decls.push_back(n);
                out << n;
                return;
            }
            case Kind::Linear: {
                out << "(+ ";
                emit_int(e->lin_const);
                for (const auto& [t, c] : e->terms) {
                    out << " ";
                    if (c == 1) {
                        emit(t);
                    } else {
                        out << "(* ";
                        emit_int(c);
                        out << " ";
                        emit(t);
                        out << ")";
                    }
                }
                out << ")";
                return;
            }
            case Kind::Mul:
                out << "(* ";
                emit(e->kids[0]);
                out << " ";
                emit(e->kids[1]);
                out << ")";
                return;
            case Kind::Mod:
                out << "(mod ";
                emit(e->kids[0]);
                out << " ";
                emit(e->kids[1]);
                out << ")";
                return;
            case Kind::Max:
                // max lowered to ite at emission
                out << "(ite (< ";
                emit(e->kids[0]);
                out << " ";
                emit(e->kids[1]);
                out << ") ";
                emit(e->kids[1]);
                out << " ";
                emit(e->kids[0]);
                out << ")";
                return;
            case Kind::App: {
                out << "(" << e->name;
                for (const auto& a : e->kids) {
                    out << " ";
                    emit(a);
                }
                out << ")";
                return;
            }
            case Kind::Rel: {
                const char* op = nullptr;
                bool negate = false;
                switch (e->rel) {
                    case RelOp::Eq: op = "="; break;
                    case RelOp::Ne: op = "="; negate = true; break;
                    case RelOp::Lt: op = "<"; break;
                    case RelOp::Le: op = "<="; break;
                }
                if (negate) out << "(not ";
                out << "(" << op << " ";
                emit(e->kids[0]);
                out << " 0)";
                if (negate) out << ")";
                return;
            }
            case Kind::Not:
                out << "(not ";
                emit(e->kids[0]);
                out << ")";
                return;
            case Kind::And:
            case Kind::Or: {
                out << (e->kind == Kind::And ? "(and" : "(or");
                for (const auto& k : e->kids) {
                    out << " ";
                    emit(k);
                }
                out << ")";
                return;
            }
            case Kind::Implies:
                out << "(=> ";
                emit(e->kids[0]);
                out << " ";
                emit(e->kids[1]);
                out << ")";
                return;
            case Kind::Ite:
                out << "(ite ";
                emit(e->kids[0]);
                out << " ";
                emit(e->kids[1]);
                out << " ";
                emit(e->kids[2]);
                out << ")";
                return;
            case Kind::Forall:
            case Kind::Exists: {
                out << (e->kind == Kind::Forall ? "(forall (" : "(exists (");
                for (std::size_t i = 0; i < e->binders.size(); ++i)
                    out << (i ? " (" : "(") << atom_name(e->binders[i]) << " Int)";
                out << ") ";
                emit(e->kids[0]);
                out << ")";
                return;
            }
        }
        throw std::logic_error("emit: bad kind");
    }
};

// Free-symbol declarations for a formula.
struct Decls {
    std::map<std::string, int> arrays;  // name -> arity
    std::set<std::string> ints;
    std::set<std::string> bools;

    void scan(const Expr& e) {
        std::function<void(const Expr&, std::vector<Expr>&)> go =
            [&](const Expr& n, std::vector<Expr>& bound) {
                auto is_bnd = [&](const Expr& a) {
                    for (const auto& b : bound)
                        if (equal(a, b)) return true;
                    return false;
                };
                switch (n->kind) {
                    case Kind::Sym: ints.insert(n->name); break;
                    case Kind::BoolSym: bools.insert(n->name); break;
                    case Kind::Counter:
                    case Kind::Param:
                    case Kind::Placeholder:
                        if (!is_bnd(n)) ints.insert(Emitter::atom_name(n));
                        break;
                    case Kind::App: arrays[n->name] = (int)n->kids.size(); break;
                    default: break;
                }
                if (n->kind == Kind::Forall || n->kind == Kind::Exists) {
                    std::size_t base = bound.size();
                    for (const auto& b : n->binders) bound.push_back(b);
                    go(n->kids[0], bound);
                    bound.resize(base);
                    return;
                }
                for (const auto& [t, c] : n->terms) go(t, bound);
                for (const auto& k : n->kids) go(k, bound);
            };
        std::vector<Expr> bound;
        go(e, bound);
    }

    std::string render() const {
        std::ostringstream os;
        for (const auto& n : ints) os << "(declare-const " << n << " Int)\n";
        for (const auto& n : bools) os << "(declare-const " << n << " Bool)\n";
        for (const auto& [n, ar] : arrays) {
            os << "(declare-fun " << n << " (";
            for (int i = 0; i < ar; ++i) os << (i ? " Int" : "Int");
            os << ") Int)\n";
        }
        return os.str();
    }
};

}  // namespace

std::string emit_formula(const Expr& e) {
    Emitter em;
    em.emit(e);
    return em.out.str();
}

std::string emit_script(const Expr& e, bool want_model, const std::string& extra_smt) {
    Emitter em;
    em.emit(e);
    Decls d;
    d.scan(e);
    std::ostringstream os;
    os << "(set-logic ALL)\n" << d.render();
    for (const auto& n : em.star_decls) os << "(declare-const " << n << " Int)\n";
    if (!extra_smt.empty()) os << extra_smt << "\n";
    os << "(assert " << em.out.str() << ")\n(check-sat)\n";
    (void)want_model;  // model retrieval is a second protocol round
    return os.str();
}

// ===========================================================================
// s-expressions and model parsing
// ===========================================================================

namespace {

struct S {
    bool atom = true;
    std::string a;
    std::vector<S> kids;
};

struct SParser {
    const std::string& s;
    std::size_t pos = 0;
    explicit SParser(const std::string& str) : s(str) {}

    void skip_ws() {
        while (pos < s.size()) {
            if (std::isspace((unsigned char)s[pos])) {
                ++pos;
            } else if (s[pos] == ';') {
                while (pos < s.size() && s[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    }

    bool at_end() {
        skip_ws();
        return pos >= s.size();
    }

    S parse() {
        skip_ws();
        if (pos >= s.size()) throw std::runtime_error("sexpr: eof");
        if (s[pos] == '(') {
            ++pos;
            S n;
            n.atom = false;
            while (true) {
                skip_ws();
                if (pos >= s.size()) throw std::runtime_error("sexpr: unclosed");
                if (s[pos] == ')') {
                    ++pos;
                    return n;
                }
                n.kids.push_back(parse());
            }
        }
        if (s[pos] == '|') {  // quoted symbol
            std::size_t e = s.find('|', pos + 1);
            if (e == std::string::npos) throw std::runtime_error("sexpr: bad quote");
            S n;
            n.a = s.substr(pos + 1, e - pos - 1);
            pos = e + 1;
            return n;
        }
        std::size_t b = pos;
        while (pos < s.size() && !std::isspace((unsigned char)s[pos]) &&
               s[pos] != '(' && s[pos] != ')')
            ++pos;
        S n;
        n.a = s.substr(b, pos - b);
        return n;
    }
};

struct FnDef {
    std::vector<std::string> params;
    S body;
};

struct ModelEnv {
    std::map<std::string, FnDef> fns;
};

long long eval_s(const S& e, const std::map<std::string, long long>& env,
                 const std::shared_ptr<ModelEnv>& m);

bool eval_s_bool(const S& e, const std::map<std::string, long long>& env,
                 const std::shared_ptr<ModelEnv>& m) {
    if (e.atom) {
        if (e.a == "true") return true;
        if (e.a == "false") return false;
        auto it = env.find(e.a);
        if (it != env.end()) return it->second != 0;
        auto f = m->fns.find(e.a);
        if (f != m->fns.end() && f->second.params.empty())
            return eval_s_bool(f->second.body, {}, m);
        throw std::runtime_error("model eval: bool atom " + e.a);
    }
    const std::string& op = e.kids[0].a;
    auto arg = [&](std::size_t i) { return eval_s(e.kids[i], env, m); };
    auto barg = [&](std::size_t i) { return eval_s_bool(e.kids[i], env, m); };
    if (op == "=") return arg(1) == arg(2);
    if (op == "distinct") return arg(1) != arg(2);
    if (op == "<") return arg(1) < arg(2);
    if (op == "<=") return arg(1) <= arg(2);
    if (op == ">") return arg(1) > arg(2);
    if (op == ">=") return arg(1) >= arg(2);
    if (op == "not") return !barg(1);
    if (op == "and") {
        for (std::size_t i = 1; i < e.kids.size(); ++i)
            if (!barg(i)) return false;
        return true;
    }
    if (op == "or") {
        for (std::size_t i = 1; i < e.kids.size(); ++i)
            if (barg(i)) return true;
        return false;
    }
    if (op == "=>") return !barg(1) || barg(2);
    if (op == "ite") return barg(1) ? barg(2) : barg(3);
    if (op == "let") {
        auto env2 = env;
        for (const auto& b : e.kids[1].kids)
            env2[b.kids[0].a] = eval_s(b.kids[1], env, m);
        return eval_s_bool(e.kids[2], env2, m);
    }
    throw std::runtime_error("model eval: bool op " + op);
}

long long eval_s(const S& e, const std::map<std::string, long long>& env,
                 const std::shared_ptr<ModelEnv>& m) {
    if (e.atom) {
        if (!e.a.empty() && (std::isdigit((unsigned char)e.a[0])))
            return std::stoll(e.a);
        auto it = env.find(e.a);
        if (it != env.end()) return it->second;
        auto f = m->fns.find(e.a);
        if (f != m->fns.end() && f->second.params.empty())
            return eval_s(f->second.body, {}, m);
        throw std::runtime_error("model eval: atom " + e.a);
    }
    const std::string& op = e.kids[0].a;
    auto arg = [&](std::size_t i) { return eval_s(e.kids[i], env, m); };
    if (op == "-") {
        if (e.kids.size() == 2) return -arg(1);
        return arg(1) - arg(2);
    }
    if (op == "+") {
        long long v = 0;
        for (std::size_t i = 1; i < e.kids.size(); ++i) v += arg(i);
        return v;
    }
    if (op == "*") {
        long long v = 1;
        for (std::size_t i = 1; i < e.kids.size(); ++i) v *= arg(i);
        return v;
    }
    if (op == "div") {  // SMT-LIB Euclidean division
        long long a = arg(1), b = arg(2);
        return (a - euclid_mod(a, b)) / b;
    }
    if (op == "mod") return euclid_mod(arg(1), arg(2));
    if (op == "ite") return eval_s_bool(e.kids[1], env, m) ? arg(2) : arg(3);
    if (op == "let") {
        auto env2 = env;
        for (const auto& b : e.kids[1].kids)
            env2[b.kids[0].a] = eval_s(b.kids[1], env, m);
        return eval_s(e.kids[2], env2, m);
    }
    // call of another model function
    auto f = m->fns.find(op);
    if (f != m->fns.end()) {
        std::map<std::string, long long> env2;
        for (std::size_t i = 0; i < f->second.params.size(); ++i)
            env2[f->second.params[i]] = arg(i + 1);
        return eval_s(f->second.body, env2, m);
    }
    throw std::runtime_error("model eval: op " + op);
}

// Harvest finite points from an ite chain body.
void harvest_points(const S& body, const std::vector<std::string>& params,
                    const std::shared_ptr<ModelEnv>& m, FnModel& out) {
    const S* cur = &body;
    while (!cur->atom && !cur->kids.empty() && cur->kids[0].a == "ite") {
        const S& cond = cur->kids[1];
        std::vector<long long> point(params.size(), 0);
        bool ok = true;
        auto take_eq = [&](const S& eq) {
            if (eq.atom || eq.kids.size() != 3 || eq.kids[0].a != "=") return false;
            for (std::size_t i = 0; i < params.size(); ++i) {
                if (eq.kids[1].atom && eq.kids[1].a == params[i]) {
                    try {
                        point[i] = eval_s(eq.kids[2], {}, m);
                    } catch (...) {
                        return false;
                    }
                    return true;
                }
            }
            return false;
        };
        if (!cond.atom && !cond.kids.empty() && cond.kids[0].a == "and") {
            for (std::size_t i = 1; i < cond.kids.size(); ++i)
                ok = ok && take_eq(cond.kids[i]);
        } else {
            ok = take_eq(cond);
        }
        if (ok) {
            try {
                out.points.emplace_back(point, eval_s(cur->kids[2], {}, m));
            } catch (...) {
            }
        }
        cur = &cur->kids[3];
    }
    if (cur->atom) {
        try {
            out.def = eval_s(*cur, {}, m);
        } catch (...) {
        }
    }
}

Model parse_model_text(const std::string& text) {
    Model model;
    SParser p(text);
    S top = p.parse();
    // top is ( (define-fun ...) ... ) or (model (define-fun ...) ...)
    auto env = std::make_shared<ModelEnv>();
    std::vector<const S*> defs;
    for (const auto& k : top.kids) {
        if (k.atom) continue;  // e.g. leading `model` keyword
        if (k.kids.size() >= 5 && k.kids[0].a == "define-fun") defs.push_back(&k);
    }
    for (const S* d : defs) {
        FnDef fd;
        for (const auto& prm : d->kids[2].kids) fd.params.push_back(prm.kids[0].a);
        fd.body = d->kids[4];
        env->fns[d->kids[1].a] = fd;
    }
    for (const S* d : defs) {
        const std::string& name = d->kids[1].a;
        const std::string& sort = d->kids[3].atom ? d->kids[3].a : "";
        const FnDef& fd = env->fns[name];
        if (fd.params.empty()) {
            try {
                if (sort == "Bool")
                    model.bools[name] = eval_s_bool(fd.body, {}, env);
                else
                    model.ints[name] = eval_s(fd.body, {}, env);
            } catch (...) {
            }
        } else {
            FnModel fm;
            harvest_points(fd.body, fd.params, env, fm);
            std::vector<std::string> params = fd.params;
            S body = fd.body;
            fm.eval = [params, body, env](const std::vector<long long>& args) {
                std::map<std::string, long long> e;
                for (std::size_t i = 0; i < params.size() && i < args.size(); ++i)
                    e[params[i]] = args[i];
                return eval_s(body, e, env);
            };
            model.funcs[name] = std::move(fm);
        }
    }
    return model;
}

// ===========================================================================
// worker pool
// ===========================================================================

std::atomic<long long> g_query_count{0};

struct Worker {
    pid_t pid = -1;
    int to_child = -1;
    int from_child = -1;
    std::string readbuf;
    bool broken = false;
    bool died_early = false;  // broke before the deadline (stale process)
    bool fresh = true;
    std::string command;

    ~Worker() { terminate(); }

    void terminate() {
        if (pid > 0) {
            kill(-pid, SIGKILL);
            int st;
            waitpid(pid, &st, 0);
            pid = -1;
        }
        if (to_child >= 0) close(to_child);
        if (from_child >= 0) close(from_child);
        to_child = from_child = -1;
    }
};

std::unique_ptr<Worker> spawn_worker(const std::string& command) {
    int in_pipe[2], out_pipe[2];
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
        throw std::runtime_error("pipe failed");
    pid_t pid = fork();
    if (pid < 0) throw std::runtime_error("fork failed");
    if (pid == 0) {
        setpgid(0, 0);
        dup2(in_pipe[0], 0);
        dup2(out_pipe[1], 1);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), (char*)nullptr);
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    auto w = std::make_unique<Worker>();
    w->pid = pid;
    w->to_child = in_pipe[1];
    w->from_child = out_pipe[0];
    w->command = command;
    return w;
}

struct Pool {
    std::mutex mu;
    std::map<std::string, std::vector<std::unique_ptr<Worker>>> idle;

    std::unique_ptr<Worker> acquire(const std::string& command) {
        {
            std::lock_guard<std::mutex> lk(mu);
            auto& v = idle[command];
            if (!v.empty()) {
                auto w = std::move(v.back());
                v.pop_back();
                return w;
            }
        }
        return spawn_worker(command);
    }

    void release(std::unique_ptr<Worker> w) {
        if (!w || w->broken) return;
        std::lock_guard<std::mutex> lk(mu);
        idle[w->command].push_back(std::move(w));
    }

    void shutdown() {
        std::lock_guard<std::mutex> lk(mu);
        idle.clear();
    }
};

Pool& pool() {
    // Deliberately leaked: callers (including atexit-time guards) may shut
    // the pool down at any point of static destruction, so the pool must
    // never be destroyed first. Orphaned workers exit on stdin close.
    static Pool* p = new Pool;
    return *p;
}

using Clock = std::chrono::steady_clock;

bool write_all(Worker& w, const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
        ssize_t n = write(w.to_child, data.data() + off, data.size() - off);
        if (n <= 0) return false;
        off += (std::size_t)n;
    }
    return true;
}

// Reads lines until the APC_DONE marker or the deadline; returns collected
// output (marker excluded) or nullopt on timeout/crash.
std::optional<std::string> read_until_done(Worker& w, Clock::time_point deadline) {
    std::string out;
    bool saw_error = false;
    auto last_data = Clock::now();
    while (true) {
        // check buffered lines first
        std::size_t nl;
        while ((nl = w.readbuf.find('\n')) != std::string::npos) {
            std::string line = w.readbuf.substr(0, nl);
            w.readbuf.erase(0, nl + 1);
            if (line == "APC_DONE") return out;
            if (line.rfind("(error", 0) == 0) saw_error = true;
            out += line;
            out += "\n";
            last_data = Clock::now();
        }
        auto now = Clock::now();
        if (now >= deadline) return std::nullopt;
        // An error line followed by silence means the marker is not coming
        // (the evaluator bailed out of the script). Hand back what we have;
        // the caller sees the error status and must not reuse this process.
        if (saw_error &&
            now - last_data > std::chrono::milliseconds(300)) {
            w.broken = true;
            return out;
        }
        struct pollfd pf {
            w.from_child, POLLIN, 0
        };
        int ms = (int)std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now)
                     .count();
        int r = poll(&pf, 1, std::max(1, std::min(ms, 200)));
        if (r < 0) return std::nullopt;
        if (r == 0) continue;
        char buf[65536];
        ssize_t n = read(w.from_child, buf, sizeof buf);
        if (n <= 0) return std::nullopt;  // EOF = crash
        w.readbuf.append(buf, (std::size_t)n);
    }
}

struct ExchangeResult {
    bool ok = false;
    std::string text;
};

ExchangeResult exchange(Worker& w, const std::string& script, Clock::time_point deadline) {
    std::string payload = script;
    if (!payload.empty() && payload.back() != '\n') payload += "\n";
    payload += "(echo \"APC_DONE\")\n;APC_EOQ\n";
    if (!write_all(w, payload)) {
        w.broken = true;
        w.died_early = true;
        return {};
    }
    auto r = read_until_done(w, deadline);
    if (!r) {
        w.broken = true;
        w.died_early = Clock::now() < deadline;
        w.terminate();
        return {};
    }
    return {true, *r};
}

SmtStatus parse_status(const std::string& text, std::string& err) {
    std::istringstream is(text);
    std::string line;
    SmtStatus st = SmtStatus::Error;
    bool found = false;
    while (std::getline(is, line)) {
        if (line == "sat") {
            st = SmtStatus::Sat;
            found = true;
        } else if (line == "unsat") {
            st = SmtStatus::Unsat;
            found = true;
        } else if (line == "unknown") {
            st = SmtStatus::Unknown;
            found = true;
        } else if (line.rfind("(error", 0) == 0) {
            err += line + "\n";
        }
    }
    if (!found && !err.empty()) return SmtStatus::Error;
    if (!found) return SmtStatus::Unknown;
    return st;
}

SmtOutcome run_on_worker(Worker& w, const std::string& script, double timeout_sec,
                         bool want_model) {
    g_query_count++;
    double grace = w.fresh ? 20.0 : 0.0;  // WASM startup on first use
    w.fresh = false;
    auto deadline =
        Clock::now() + std::chrono::milliseconds((long long)((timeout_sec + grace) * 1000));
    ExchangeResult r = exchange(w, "(reset)\n" + script, deadline);
    SmtOutcome out;
    if (!r.ok) {
        out.status = SmtStatus::Unknown;
        out.error_text = "timeout or solver crash";
        return out;
    }
    out.status = parse_status(r.text, out.error_text);
    if (out.status == SmtStatus::Sat && want_model) {
        ExchangeResult mr = exchange(w, "(get-model)", deadline);
        if (mr.ok) {
            try {
                out.model = parse_model_text(mr.text);
            } catch (...) {
            }
        }
    }
    return out;
}

}  // namespace

long long solver_query_count() { return g_query_count.load(); }

SolverConfig default_solver() {
    SolverConfig cfg;
    const char* env = std::getenv("APC_SOLVER");
    if (env && *env) {
        cfg.command = env;
    } else {
#ifdef APC_SHIM_PATH
        cfg.command = std::string("node ") + APC_SHIM_PATH;
#else
        cfg.command = "z3 -in";
#endif
    }
    return cfg;
}

SmtOutcome run_script(const std::string& script, const SolverConfig& cfg,
                      bool want_model) {
    auto w = pool().acquire(cfg.command);
    bool reused = !w->fresh;
    SmtOutcome out = run_on_worker(*w, script, cfg.timeout_sec, want_model);
    if (reused && w->died_early) {
        // A pooled worker found dead (e.g. killed between queries) is not a
        // verdict on the formula: run once more on a fresh process.
        w = spawn_worker(cfg.command);
        out = run_on_worker(*w, script, cfg.timeout_sec, want_model);
    }
    pool().release(std::move(w));
    return out;
}

SmtOutcome check_sat(const Expr& e, const SolverConfig& cfg, bool want_model,
                     const std::string& extra_smt) {
    if (is_false(e)) return SmtOutcome{SmtStatus::Unsat, "", std::nullopt};
    std::string script = emit_script(e, want_model, extra_smt);
    SmtOutcome out = run_script(script, cfg, want_model);
    if (out.status == SmtStatus::Error) {
        // one retry on a crash/error per the session contract
        out = run_script(script, cfg, want_model);
        if (out.status == SmtStatus::Error) out.status = SmtStatus::Unknown;
    }
    return out;
}

Validity check_valid(const Expr& e, const SolverConfig& cfg) {
    if (is_true(e)) return Validity::Valid;
    SmtOutcome out = check_sat(mk_not(e), cfg, false);
    switch (out.status) {
        case SmtStatus::Unsat: return Validity::Valid;
        case SmtStatus::Sat: return Validity::NotValid;
        default: return Validity::Unknown;
    }
}

bool expr_equal(const Expr& a, const Expr& b, const SolverConfig& cfg) {
    if (equal(a, b)) return true;
    Expr goal;
    if (is_bool_expr(a) && is_bool_expr(b))
        goal = mk_and2(implies(a, b), implies(b, a));
    else
        goal = rel(CmpOp::Eq, a, b);
    return check_valid(goal, cfg) == Validity::Valid;
}

void shutdown_solver_pool() { pool().shutdown(); }

// ===========================================================================
// async checks (racing)
// ===========================================================================

// Shared between the handle and the worker thread; the thread owns only
// this, never the Impl, so handle destruction can always join.
struct AsyncState {
    std::mutex mu;
    SmtOutcome outcome;
    bool finished = false;
    std::atomic<pid_t> victim{-1};
    std::atomic<bool> cancelled{false};

    void cancel() {
        std::lock_guard<std::mutex> lk(mu);
        cancelled = true;
        pid_t v = victim.load();
        if (v > 0) kill(-v, SIGKILL);
    }
};

struct AsyncCheck::Impl {
    std::thread th;
    std::shared_ptr<AsyncState> st = std::make_shared<AsyncState>();

    ~Impl() {
        if (!th.joinable()) return;
        // Dropping a running check aborts it: kill the worker so the join
        // is quick, and never leave a thread running past shutdown.
        st->cancel();
        th.join();
    }
};

AsyncCheck start_script(const std::string& script, const SolverConfig& cfg,
                        bool want_model) {
    AsyncCheck ac;
    ac.impl = std::make_shared<AsyncCheck::Impl>();
    auto st = ac.impl->st;
    ac.impl->th = std::thread([st, script, cfg, want_model]() {
        auto w = pool().acquire(cfg.command);
        st->victim = w->pid;
        bool reused = !w->fresh;
        SmtOutcome out = run_on_worker(*w, script, cfg.timeout_sec, want_model);
        if (reused && w->died_early && !st->cancelled.load()) {
            w = spawn_worker(cfg.command);
            st->victim = w->pid;
            out = run_on_worker(*w, script, cfg.timeout_sec, want_model);
        }
        {
            // Under the same lock as cancel(): once victim is cleared no
            // further SIGKILL can be sent, so a worker released as healthy
            // here really is healthy.
            std::lock_guard<std::mutex> lk(st->mu);
            st->victim = -1;
            if (st->cancelled.load()) {
                w->broken = true;
                w->terminate();
            }
        }
        pool().release(std::move(w));
        std::lock_guard<std::mutex> lk(st->mu);
        st->outcome = std::move(out);
        st->finished = true;
    });
    return ac;
}

SmtOutcome AsyncCheck::join() {
    if (impl->th.joinable()) impl->th.join();
    std::lock_guard<std::mutex> lk(impl->st->mu);
    return impl->st->outcome;
}

bool AsyncCheck::done() const {
    std::lock_guard<std::mutex> lk(impl->st->mu);
    return impl->st->finished;
}

void AsyncCheck::cancel() { impl->st->cancel(); }

}  // namespace apc
