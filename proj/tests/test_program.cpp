// Program-model tests: parsing, CFG shape, normalization, prefix-relative
// loop detection, induced programs, and backbone reduction.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "apc/program.hpp"

using namespace apc;

namespace {

// Edges out of v labelled Assume?
bool branches(const ProgramGraph& p, int v) {
    return p.succ[v].size() == 2 &&
           p.succ[v][0].instr.k == Instruction::K::Assume &&
           p.succ[v][1].instr.k == Instruction::K::Assume;
}

}  // namespace

TEST_CASE("parses declarations, statements, and the target") {
    CtxScope scope;
    ProgramGraph p = parse_program(
        "var x : int;\n"
        "var A : int[4][4];\n"
        "x = 1 + 2 * x;\n"
        "A[x][0] = x;\n"
        "if (x < 3) { target; }\n"
        "skip;\n");
    CHECK(p.decls.size() == 2);
    CHECK(p.scalar_declared("x"));
    CHECK(p.array_arity("A") == 2);
    CHECK(p.target != p.start);
}

TEST_CASE("branch vertices carry paired assume edges, positive first") {
    CtxScope scope;
    ProgramGraph p = parse_program(
        "var x : int;\n"
        "if (x == 0) { x = 1; } else { x = 2; }\n"
        "target;\n");
    bool found = false;
    for (std::size_t v = 0; v < p.vertex_count(); ++v) {
        if (p.succ[v].size() == 2) {
            found = true;
            CHECK(branches(p, v));
            // The two predicates are each other's negation on the same
            // operands: Eq and Ne here.
            CHECK(p.succ[v][0].instr.pred.op == CmpOp::Eq);
            CHECK(p.succ[v][1].instr.pred.op == CmpOp::Ne);
        }
        CHECK(p.succ[v].size() <= 2);
    }
    CHECK(found);
}

TEST_CASE("syntax and type errors are reported") {
    CtxScope scope;
    CHECK_THROWS_AS(parse_program("var x : int"), SyntaxError);
    CHECK_THROWS_AS(parse_program("x = 1;\ntarget;\n"), TypeError);
    CHECK_THROWS_AS(parse_program("var A : int[2];\nA = 1;\ntarget;\n"),
                    TypeError);
    CHECK_THROWS_AS(
        parse_program("var A : int[2];\nvar x : int;\nx = A[0][1];\ntarget;\n"),
        TypeError);
}

TEST_CASE("normalize gives loop entries skip-labelled in-edges only") {
    CtxScope scope;
    ProgramGraph p = parse_program(
        "var i : int;\n"
        "var n : int;\n"
        "i = 0;\n"
        "while (i < n) { i = i + 1; }\n"
        "target;\n");
    ProgramGraph q = normalize(p);
    for (int h : loop_headers(q)) {
        for (std::size_t v = 0; v < q.vertex_count(); ++v)
            for (const auto& e : q.succ[v])
                if (e.dst == h) CHECK(e.instr.k == Instruction::K::Skip);
    }
    // Idempotent.
    ProgramGraph q2 = normalize(q);
    CHECK(q2.vertex_count() == q.vertex_count());
}

TEST_CASE("find_loops is prefix-relative") {
    CtxScope scope;
    ProgramGraph p = normalize(parse_program(
        "var i : int;\n"
        "var n : int;\n"
        "i = 0;\n"
        "while (i < n) { i = i + 1; }\n"
        "target;\n"));
    std::set<int> headers = loop_headers(p);
    REQUIRE(headers.size() == 1);
    int h = *headers.begin();
    // Acyclic prefix from start to the header.
    std::vector<int> prefix;
    int v = p.start;
    prefix.push_back(v);
    while (v != h) {
        v = p.succ[v][0].dst;
        prefix.push_back(v);
    }
    auto loop = find_loops(p, prefix);
    REQUIRE(loop.has_value());
    CHECK(loop->entry == h);
    CHECK(loop->body.count(h) == 1);
    CHECK(loop->body.size() >= 2);
    for (int x : loop->exits) CHECK(loop->body.count(x) == 0);
    // A prefix ending at a non-header vertex has no loop.
    CHECK(!find_loops(p, {p.start}).has_value());
}

TEST_CASE("induced program redirects entry edges and adds a fresh target") {
    CtxScope scope;
    ProgramGraph p = normalize(parse_program(
        "var i : int;\n"
        "var n : int;\n"
        "i = 0;\n"
        "while (i < n) { i = i + 1; }\n"
        "target;\n"));
    int h = *loop_headers(p).begin();
    std::vector<int> prefix;
    int v = p.start;
    prefix.push_back(v);
    while (v != h) {
        v = p.succ[v][0].dst;
        prefix.push_back(v);
    }
    auto loop = find_loops(p, prefix);
    REQUIRE(loop.has_value());
    ProgramGraph ind = induced_program(p, *loop);
    CHECK(ind.start != ind.target);
    // Target has no out-edges; every edge into the original entry became an
    // edge into the fresh target, so the body is acyclic through start.
    CHECK(ind.succ[ind.target].empty());
    // Same declarations.
    CHECK(ind.decls.size() == p.decls.size());
}

TEST_CASE("reduce_to_backbone removes first repeated segment to fixpoint") {
    CtxScope scope;
    CHECK(reduce_to_backbone({1, 2, 3}) == std::vector<int>{1, 2, 3});
    CHECK(reduce_to_backbone({1, 2, 3, 2, 4}) == std::vector<int>{1, 2, 4});
    CHECK(reduce_to_backbone({1, 2, 1, 2, 3}) == std::vector<int>{1, 2, 3});
    CHECK(reduce_to_backbone({1, 2, 3, 2, 3, 4, 1, 5}) ==
          std::vector<int>{1, 5});
}

TEST_CASE("cfg_to_json is deterministic and carries the contract fields") {
    CtxScope scope;
    ProgramGraph p = parse_program(
        "var x : int;\n"
        "x = 0;\n"
        "target;\n");
    std::string a = cfg_to_json(p);
    std::string b = cfg_to_json(p);
    CHECK(a == b);
    CHECK(a.find("\"edges\"") != std::string::npos);
    CHECK(a.find("\"start\"") != std::string::npos);
    CHECK(a.find("\"target\"") != std::string::npos);
    CHECK(a.find("\"vars\"") != std::string::npos);
}

TEST_CASE("for loops desugar to while form") {
    CtxScope scope;
    ProgramGraph p = normalize(parse_program(
        "var i : int;\n"
        "var n : int;\n"
        "for (i = 0; i < n; i = i + 1) { skip; }\n"
        "target;\n"));
    CHECK(loop_headers(p).size() == 1);
}
