// SPDX-License-Identifier: MIT
//
// Command-line driver: analyze (decide target reachability of one program),
// prune (decide frontier /\ phi-hat for external path-merging tools), and
// bench (run a corpus directory and print a verdict/timing table).
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "apc/backbone.hpp"
#include "apc/formula_builder.hpp"
#include "apc/interp.hpp"
#include "apc/loop_summary.hpp"
#include "apc/program.hpp"
#include "apc/smt.hpp"
#include "apc/symexec.hpp"

namespace fs = std::filesystem;
using namespace apc;

namespace {

struct Options {
    int unfold_k = 25;
    double timeout = 30.0;
    bool no_race = false;
    bool simplify = false;
    bool json = false;
    bool emit_cfg = false;
    bool emit_backbones = false;
    bool emit_psi = false;
    bool emit_summaries = false;
    std::string emit_smt;  // path prefix; empty = off
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct Pipeline {
    ProgramGraph prog;
    BackboneTree tree;
    AnalysisContext cx;
    Expr phi_hat = mk_bool(false);
    double build_ms = 0;
};

// Parse -> normalize -> backbone tree -> symbolic execution -> phi-hat.
Pipeline run_pipeline(const std::string& source, const Options& opt) {
    auto t0 = std::chrono::steady_clock::now();
    Pipeline pl;
    pl.prog = normalize(parse_program(source));
    pl.cx = AnalysisContext(pl.prog);
    pl.cx.solver.timeout_sec = opt.timeout;
    pl.cx.simplify = opt.simplify;
    pl.tree = build_backbone_tree(pl.prog);
    execute_backbone_tree(pl.tree, pl.prog, generic_state(pl.prog.decls), pl.cx);
    pl.phi_hat = build_phi_hat(pl.tree);
    pl.build_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    return pl;
}

void emit_artifacts(Pipeline& pl, const Options& opt) {
    if (opt.emit_cfg) std::cout << cfg_to_json(pl.prog) << "\n";
    if (opt.emit_backbones) std::cout << backbones_to_text(pl.tree, pl.prog);
    if (opt.emit_psi) std::cout << psi_to_text(pl.tree, pl.prog);
    if (opt.emit_summaries) {
        for (const auto& [key, s] : pl.cx.memo) std::cout << summary_to_text(s);
    }
    if (!opt.emit_smt.empty()) {
        std::ofstream(opt.emit_smt + ".direct.smt2")
            << emit_script(pl.phi_hat, false);
        try {
            std::ofstream(opt.emit_smt + ".unfolded.smt2")
                << emit_script(unfold(pl.phi_hat, opt.unfold_k), false);
        } catch (const UnfoldError& e) {
            std::cerr << "emit-smt: unfolding unavailable: " << e.what() << "\n";
        }
    }
}

void print_model(const Model& m) {
    for (const auto& [n, v] : m.ints) std::cout << "  " << n << " = " << v << "\n";
    for (const auto& [n, v] : m.bools)
        std::cout << "  " << n << " = " << (v ? "true" : "false") << "\n";
    for (const auto& [n, f] : m.funcs) {
        std::cout << "  " << n << ": default " << f.def;
        for (const auto& [args, val] : f.points) {
            std::cout << ", (";
            for (std::size_t i = 0; i < args.size(); ++i)
                std::cout << (i ? " " : "") << args[i];
            std::cout << ") -> " << val;
        }
        std::cout << "\n";
    }
}

int exit_code_of(SmtStatus s) {
    switch (s) {
        case SmtStatus::Sat: return 0;
        case SmtStatus::Unsat: return 1;
        default: return 2;
    }
}

int cmd_analyze(const std::string& file, const Options& opt) {
    CtxScope scope;
    Pipeline pl = run_pipeline(read_file(file), opt);
    emit_artifacts(pl, opt);
    DecideResult r = decide(pl.phi_hat, pl.cx.solver, opt.unfold_k, !opt.no_race);
    r.build_ms = pl.build_ms;
    if (opt.json) {
        std::cout << verdict_json(r) << "\n";
    } else {
        switch (r.status) {
            case SmtStatus::Sat:
                std::cout << "satisfiable: target possibly reachable ("
                          << r.winner << ")\n";
                if (r.model) print_model(*r.model);
                break;
            case SmtStatus::Unsat:
                std::cout << "unsatisfiable: target unreachable\n";
                break;
            default:
                std::cout << "unknown"
                          << (r.bounded_unsat ? " (bounded form unsatisfiable)"
                                              : "")
                          << "\n";
                break;
        }
    }
    return exit_code_of(r.status);
}

int cmd_prune(const std::string& file, const std::string& frontier_file,
              const Options& opt) {
    CtxScope scope;
    std::string frontier = read_file(frontier_file);
    // Strip whitespace; the file holds one SMT-LIB formula.
    while (!frontier.empty() && isspace((unsigned char)frontier.back()))
        frontier.pop_back();
    if (frontier.empty()) throw SyntaxError(0, "empty frontier file");
    Pipeline pl = run_pipeline(read_file(file), opt);
    emit_artifacts(pl, opt);
    DecideResult r = prune_check(pl.phi_hat, frontier, pl.prog.decls,
                                 pl.cx.solver, opt.unfold_k, !opt.no_race);
    r.build_ms = pl.build_ms;
    if (opt.json) {
        std::cout << verdict_json(r) << "\n";
    } else {
        switch (r.status) {
            case SmtStatus::Sat:
                std::cout << "Keep (" << r.winner << ")\n";
                if (r.model) print_model(*r.model);
                break;
            case SmtStatus::Unsat:
                std::cout << "Drop\n";
                break;
            default:
                std::cout << "Unknown\n";
                break;
        }
    }
    return exit_code_of(r.status);
}

int cmd_bench(const std::string& dir, const Options& opt) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".apc") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::cout << std::left << std::setw(14) << "benchmark" << std::right
              << std::setw(10) << "build" << std::setw(10) << "unfold"
              << std::setw(10) << "direct" << std::setw(10) << "unfolded"
              << std::setw(9) << "verdict" << "\n";
    for (const auto& f : files) {
        std::cout << std::left << std::setw(14) << f.stem().string()
                  << std::right << std::flush;
        try {
            CtxScope scope;
            Pipeline pl = run_pipeline(read_file(f.string()), opt);
            DecideResult r =
                decide(pl.phi_hat, pl.cx.solver, opt.unfold_k, !opt.no_race);
            char verdict = r.status == SmtStatus::Sat     ? 'S'
                           : r.status == SmtStatus::Unsat ? 'U'
                                                          : 'X';
            auto col = [](double ms) {
                std::ostringstream os;
                os << std::fixed << std::setprecision(2) << ms / 1000.0;
                return os.str();
            };
            std::cout << std::setw(10) << col(pl.build_ms) << std::setw(10)
                      << col(r.unfold_ms) << std::setw(10)
                      << col(r.solve_direct_ms) << std::setw(10)
                      << col(r.solve_unfolded_ms) << std::setw(8) << verdict
                      << (r.winner.empty() ? "" : " (" + r.winner + ")")
                      << "\n";
        } catch (const std::exception& e) {
            std::cout << "  error: " << e.what() << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Abstracted-path-condition reachability analyzer"};
    app.require_subcommand(1);
    Options opt;
    app.add_option("--unfold-K", opt.unfold_k, "unfolding bound (default 25)");
    app.add_option("--timeout", opt.timeout, "per-query solver timeout, seconds");
    app.add_flag("--no-race", opt.no_race, "sequential solving (unfolded first)");
    app.add_flag("--simplify", opt.simplify, "simplify iterated array values");
    app.add_flag("--json", opt.json, "JSON verdict on stdout");
    app.add_flag("--emit-cfg", opt.emit_cfg, "dump the CFG as JSON");
    app.add_flag("--emit-backbones", opt.emit_backbones, "dump backbone paths");
    app.add_flag("--emit-psi", opt.emit_psi, "dump per-vertex formulas");
    app.add_flag("--emit-summaries", opt.emit_summaries, "dump loop summaries");
    app.add_option("--emit-smt", opt.emit_smt,
                   "write <prefix>.direct.smt2 and <prefix>.unfolded.smt2");

    std::string file, frontier, dir;
    // Lets `apc analyze prog --json` hand the shared flags back to the app.
    app.fallthrough();
    auto* analyze = app.add_subcommand("analyze", "decide target reachability");
    analyze->fallthrough();
    analyze->add_option("file", file, "program source")->required();
    auto* prune = app.add_subcommand("prune", "decide frontier /\\ phi-hat");
    prune->fallthrough();
    prune->add_option("file", file, "program source")->required();
    prune->add_option("frontier", frontier, "SMT-LIB frontier formula file")
        ->required();
    auto* bench = app.add_subcommand("bench", "run a corpus directory");
    bench->fallthrough();
    bench->add_option("dir", dir, "directory of .apc programs")->required();

    CLI11_PARSE(app, argc, argv);

    int rc = 2;
    try {
        if (analyze->parsed()) rc = cmd_analyze(file, opt);
        else if (prune->parsed()) rc = cmd_prune(file, frontier, opt);
        else rc = cmd_bench(dir, opt);
    } catch (const SyntaxError& e) {
        std::cerr << "error: " << e.what() << "\n";
        rc = 3;
    } catch (const TypeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        rc = 3;
    } catch (const StructureError& e) {
        std::cerr << "error: " << e.what() << "\n";
        rc = 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        rc = 2;
    }
    shutdown_solver_pool();
    return rc;
}
