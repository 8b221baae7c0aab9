// Backbone-tree tests: prefix-tree construction over acyclic start-to-target
// paths, dead-branch cleanup, pruning, eta counts, and the text dump.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>

#include "apc/backbone.hpp"
#include "apc/program.hpp"

using namespace apc;

namespace {

ProgramGraph prog(const std::string& src) {
    return normalize(parse_program(src));
}

// True when `path` is an acyclic path of p from start to target.
bool is_backbone_path(const ProgramGraph& p, const std::vector<int>& path) {
    if (path.empty() || path.front() != p.start || path.back() != p.target)
        return false;
    std::set<int> seen;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (!seen.insert(path[i]).second) return false;
        if (i + 1 < path.size()) {
            bool edge = false;
            for (const auto& e : p.succ[path[i]])
                if (e.dst == path[i + 1]) edge = true;
            if (!edge) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("loop-free program: one leaf per feasible-by-shape path") {
    CtxScope scope;
    ProgramGraph p = prog(
        "var x : int;\n"
        "if (x == 0) { x = 1; } else { x = 2; }\n"
        "if (x < 5) { target; }\n"
        "skip;\n");
    BackboneTree t = build_backbone_tree(p);
    REQUIRE(!t.empty());
    auto lv = t.leaves();
    CHECK(lv.size() == 2);
    for (int leaf : lv) CHECK(is_backbone_path(p, t.path(leaf)));
}

TEST_CASE("unreachable target yields the empty tree, not an error") {
    CtxScope scope;
    // The target block is never entered: no acyclic path reaches it only if
    // the CFG disconnects it; easiest shape is code after an infinite loop
    // with no exit edge is impossible in this language, so use a graph built
    // by hand: target disconnected.
    ProgramGraph p;
    int a = p.add_vertex();
    int b = p.add_vertex();
    int c = p.add_vertex();  // target, no in-edges
    p.add_edge(a, b, make_skip());
    p.start = a;
    p.target = c;
    BackboneTree t = build_backbone_tree(p);
    CHECK(t.empty());
}

TEST_CASE("every vertex is a prefix of some leaf; DFS order is stable") {
    CtxScope scope;
    ProgramGraph p = prog(
        "var x : int;\n"
        "if (x == 0) { skip; } else { skip; }\n"
        "if (x == 1) { skip; } else { skip; }\n"
        "target;\n");
    BackboneTree t = build_backbone_tree(p);
    auto order = t.dfs_order();
    CHECK(order == t.dfs_order());
    std::set<int> on_leaf_path;
    for (int leaf : t.leaves())
        for (int n = leaf; n != -1; n = t.nodes[n].parent)
            on_leaf_path.insert(n);
    for (int n : order) CHECK(on_leaf_path.count(n) == 1);
}

TEST_CASE("prune_subtree removes exactly the paths through the node") {
    CtxScope scope;
    ProgramGraph p = prog(
        "var x : int;\n"
        "if (x == 0) { skip; } else { skip; }\n"
        "if (x == 1) { skip; } else { skip; }\n"
        "target;\n");
    BackboneTree t = build_backbone_tree(p);
    auto lv = t.leaves();
    REQUIRE(lv.size() == 4);
    // Prune the first grandchild subtree (two leaves below one branch).
    int victim = t.nodes[lv[0]].parent;
    while (t.live_children(t.nodes[victim].parent).size() < 2)
        victim = t.nodes[victim].parent;
    prune_subtree(t, victim);
    auto lv2 = t.leaves();
    CHECK(lv2.size() < lv.size());
    for (int leaf : lv2) {
        for (int n = leaf; n != -1; n = t.nodes[n].parent) CHECK(n != victim);
    }
}

TEST_CASE("eta counts induced backbone paths at loop entries") {
    CtxScope scope;
    ProgramGraph p = prog(
        "var i : int;\n"
        "var n : int;\n"
        "i = 0;\n"
        "while (i < n) {\n"
        "  if (i == 3) { i = i + 2; } else { i = i + 1; }\n"
        "}\n"
        "target;\n");
    BackboneTree t = build_backbone_tree(p);
    REQUIRE(!t.empty());
    int entries = 0;
    for (int n : t.dfs_order()) {
        int eta = eta_of(t, p, n);
        if (eta > 0) {
            ++entries;
            // Two ways through the loop body.
            CHECK(eta == 2);
            CHECK(loop_at(t, p, n).has_value());
        }
    }
    CHECK(entries >= 1);
    // Non-entries report 0 and no loop.
    CHECK(eta_of(t, p, 0) == 0);
    CHECK(!loop_at(t, p, 0).has_value());
}

TEST_CASE("backbones_to_text lists paths then eta lines deterministically") {
    CtxScope scope;
    ProgramGraph p = prog(
        "var i : int;\n"
        "var n : int;\n"
        "i = 0;\n"
        "while (i < n) { i = i + 1; }\n"
        "target;\n");
    BackboneTree t = build_backbone_tree(p);
    std::string a = backbones_to_text(t, p);
    std::string b = backbones_to_text(t, p);
    CHECK(a == b);
    CHECK(a.find("eta ") != std::string::npos);
}
