// SPDX-License-Identifier: MIT
#include "apc/backbone.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace apc {

std::vector<int> BackboneTree::path(int n) const {
    std::vector<int> out;
    for (int cur = n; cur >= 0; cur = nodes[cur].parent) out.push_back(nodes[cur].cfg);
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<int> BackboneTree::live_children(int n) const {
    std::vector<int> out;
    for (int k : nodes[n].kids)
        if (alive[k]) out.push_back(k);
    return out;
}

std::vector<int> BackboneTree::dfs_order() const {
    std::vector<int> out;
    if (empty()) return out;
    std::function<void(int)> go = [&](int n) {
        out.push_back(n);
        for (int k : nodes[n].kids)
            if (alive[k]) go(k);
    };
    go(0);
    return out;
}

std::vector<int> BackboneTree::leaves() const {
    std::vector<int> out;
    for (int n : dfs_order())
        if (is_leaf(n)) out.push_back(n);
    return out;
}

BackboneTree build_backbone_tree(const ProgramGraph& p) {
    BackboneTree t;
    t.target_cfg = p.target;
    std::vector<char> onpath(p.vertex_count(), 0);

    // Returns the node id, or -1 when no acyclic extension of the current
    // path through `v` reaches the target (the dead-branch cleanup).
    std::function<int(int, int)> go = [&](int v, int parent) -> int {
        int id = (int)t.nodes.size();
        t.nodes.push_back({parent, v, {}});
        t.alive.push_back(1);
        if (v == p.target) return id;
        onpath[v] = 1;
        for (const auto& e : p.succ[v]) {
            if (onpath[e.dst]) continue;
            int k = go(e.dst, id);
            if (k >= 0) t.nodes[id].kids.push_back(k);
        }
        onpath[v] = 0;
        if (t.nodes[id].kids.empty()) {
            // dead prefix: drop this node (and any dead descendants)
            t.alive[id] = 0;
            return -1;
        }
        return id;
    };
    if (go(p.start, -1) < 0) {
        t.nodes.clear();
        t.alive.clear();
    }
    // compact away nodes dropped during construction
    if (!t.nodes.empty()) {
        std::vector<int> remap(t.nodes.size(), -1);
        BackboneTree c;
        c.target_cfg = t.target_cfg;
        for (std::size_t i = 0; i < t.nodes.size(); ++i) {
            if (!t.alive[i]) continue;
            remap[i] = (int)c.nodes.size();
            BackboneTree::Node n = t.nodes[i];
            if (n.parent >= 0) n.parent = remap[n.parent];
            n.kids.clear();
            c.nodes.push_back(n);
            c.alive.push_back(1);
            if (n.parent >= 0) c.nodes[n.parent].kids.push_back(remap[i]);
        }
        t = std::move(c);
    }
    return t;
}

void prune_subtree(BackboneTree& t, int at) {
    if (t.empty()) return;
    std::function<void(int)> kill = [&](int n) {
        t.alive[n] = 0;
        t.psi.erase(n);
        t.theta.erase(n);
        for (int k : t.nodes[n].kids)
            if (t.alive[k]) kill(k);
    };
    kill(at);
    // ancestors that lost every child are no longer prefixes of any leaf
    for (int cur = t.nodes[at].parent; cur >= 0; cur = t.nodes[cur].parent) {
        if (!t.live_children(cur).empty()) break;
        t.alive[cur] = 0;
        t.psi.erase(cur);
        t.theta.erase(cur);
    }
}

std::optional<Loop> loop_at(const BackboneTree& t, const ProgramGraph& p, int node) {
    return find_loops(p, t.path(node));
}

int eta_of(BackboneTree& t, const ProgramGraph& p, int node) {
    auto it = t.eta_cache.find(node);
    if (it != t.eta_cache.end()) return it->second;
    int n = 0;
    if (auto loop = loop_at(t, p, node)) {
        ProgramGraph ind = induced_program(p, *loop);
        BackboneTree bt = build_backbone_tree(ind);
        n = bt.empty() ? 0 : (int)bt.leaves().size();
    }
    t.eta_cache[node] = n;
    return n;
}

std::string backbones_to_text(BackboneTree& t, const ProgramGraph& p) {
    std::ostringstream os;
    for (int leaf : t.leaves()) {
        auto seq = t.path(leaf);
        for (std::size_t i = 0; i < seq.size(); ++i) os << (i ? " " : "") << seq[i];
        os << "\n";
    }
    for (int n : t.dfs_order()) {
        int e = eta_of(t, p, n);
        if (e == 0) continue;
        os << "eta";
        for (int v : t.path(n)) os << " " << v;
        os << " = " << e << "\n";
    }
    return os.str();
}

}  // namespace apc
