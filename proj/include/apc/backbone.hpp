// SPDX-License-Identifier: MIT
//
// Backbone trees: the prefix tree of all acyclic start-to-target paths of a
// normalized program. Carries per-vertex path-condition parts (psi), final
// symbolic states at leaves (theta), and the induced-program backbone-path
// count (eta) at loop-entry vertices.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "apc/expr.hpp"
#include "apc/program.hpp"
#include "apc/state.hpp"

namespace apc {

// Tree vertices are stored with a parent link and their last CFG vertex;
// the full path (CFG-vertex sequence) is reconstructed on demand. Node 0 is
// the root l_s. Pruned nodes stay allocated with alive=false.
struct BackboneTree {
    struct Node {
        int parent = -1;
        int cfg = 0;
        std::vector<int> kids;  // ordered: the Assume(p) child precedes Assume(!p)
    };
    std::vector<Node> nodes;
    std::vector<char> alive;
    std::map<int, Expr> psi;             // tree node -> Psi formula
    std::map<int, SymbolicState> theta;  // leaf node -> final state
    std::map<int, int> eta_cache;        // loop-entry node -> leaf count
    int target_cfg = 0;

    // Loop-summary metadata recorded when execution instantiates a summary at
    // a loop-entry vertex. `counters` has one iteration counter per surviving
    // backbone path of the loop's induced program, in DFS order; `taus` are
    // the matching bound parameters of the looping condition, and `bodies[i]`
    // is its i-th matrix (pc of the i-th induced path, state-applied, with
    // counters replaced by taus). The recorded Psi at such a vertex is
    // exactly AND_i forall taus[i] (0 <= taus[i] < counters[i] -> bodies[i]).
    struct LoopEntryInfo {
        std::vector<long long> counters;
        std::vector<long long> taus;
        std::vector<Expr> bodies;
    };
    std::map<int, LoopEntryInfo> loop_entries;

    bool empty() const { return nodes.empty() || !alive[0]; }
    bool is_leaf(int n) const { return nodes[n].cfg == target_cfg; }
    // CFG-vertex sequence l_s ... for node n.
    std::vector<int> path(int n) const;
    // Alive leaves in DFS order (the backbone paths).
    std::vector<int> leaves() const;
    std::vector<int> live_children(int n) const;
    // All alive nodes in DFS (preorder).
    std::vector<int> dfs_order() const;
};

// Prefix tree of all acyclic l_s -> l_t paths; prefixes whose every acyclic
// extension misses l_t are removed. An unreachable target yields the empty
// tree (not an error).
BackboneTree build_backbone_tree(const ProgramGraph& p);

// Removes exactly the backbone paths having `at` as a prefix, then every
// vertex that is no longer a prefix of a leaf; psi is restricted to the
// survivors, theta is untouched on surviving leaves.
void prune_subtree(BackboneTree& t, int at);

// 0 for nodes that are not loop entries relative to their prefix; otherwise
// the number of backbone paths of the loop's induced program (tree built but
// not executed). Cached per node.
int eta_of(BackboneTree& t, const ProgramGraph& p, int node);

// The prefix-relative loop at `node`, if any (drives eta and summarization).
std::optional<Loop> loop_at(const BackboneTree& t, const ProgramGraph& p, int node);

// One backbone path per line as space-separated CFG vertices, then one
// "eta <path> = n" line per loop-entry vertex, in DFS order.
std::string backbones_to_text(BackboneTree& t, const ProgramGraph& p);

}  // namespace apc
