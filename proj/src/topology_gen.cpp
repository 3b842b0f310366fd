#include "mgsim/topology_gen.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "mgsim/errors.hpp"

namespace mgsim {

void UndirectedGraph::add_edge(NodeId a, NodeId b) {
    if (a >= n_ || b >= n_) {
        throw ParameterError("edge endpoint out of range");
    }
    if (a == b) {
        throw ParameterError("self-loop at node " + std::to_string(a));
    }
    if (!edges_.insert(normalized(a, b)).second) {
        throw ParameterError("duplicate edge " + std::to_string(a) + "-" + std::to_string(b));
    }
}

void UndirectedGraph::remove_edge(NodeId a, NodeId b) {
    if (edges_.erase(normalized(a, b)) == 0) {
        throw ParameterError("no edge " + std::to_string(a) + "-" + std::to_string(b));
    }
}

std::vector<std::vector<NodeId>> UndirectedGraph::adjacency() const {
    std::vector<std::vector<NodeId>> adj(n_);
    for (const auto& [a, b] : edges_) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (auto& list : adj) {
        std::sort(list.begin(), list.end());
    }
    return adj;
}

bool UndirectedGraph::is_connected() const {
    if (n_ == 0) {
        return true;
    }
    const auto adj = adjacency();
    std::vector<bool> seen(n_, false);
    std::vector<NodeId> stack{0};
    seen[0] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
        const NodeId v = stack.back();
        stack.pop_back();
        for (NodeId w : adj[v]) {
            if (!seen[w]) {
                seen[w] = true;
                ++count;
                stack.push_back(w);
            }
        }
    }
    return count == n_;
}

void GenParams::validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (n_nodes < 2) {
        throw ParameterError("n_nodes must be at least 2");
    }
    if (!prob(rewiring_p)) {
        throw ParameterError("rewiring probability must be in [0, 1]");
    }
    if (!prob(dg_fraction)) {
        throw ParameterError("dg_fraction must be in [0, 1]");
    }
    if (!(mean_line_length_m > 0.0) || !std::isfinite(mean_line_length_m)) {
        throw ParameterError("mean line length must be positive");
    }
    if (!(impedance_per_m.real() > 0.0) || !std::isfinite(impedance_per_m.imag())) {
        throw ParameterError("impedance per meter needs a positive real part");
    }
    if (!(load_s_min_va >= 0.0) || !(load_s_min_va <= load_s_max_va)) {
        throw ParameterError("load range must satisfy 0 <= min <= max");
    }
    if (!(load_pf_min > 0.0) || !(load_pf_min <= load_pf_max) || !(load_pf_max <= 1.0)) {
        throw ParameterError("power factor range must satisfy 0 < min <= max <= 1");
    }
    if (max_attempts == 0) {
        throw ParameterError("max_attempts must be positive");
    }
}

UndirectedGraph generate_ring_lattice(std::size_t n) {
    if (n < 3) {
        throw ParameterError("a ring lattice needs at least 3 nodes");
    }
    UndirectedGraph g(n);
    for (std::size_t i = 0; i < n; ++i) {
        g.add_edge(static_cast<NodeId>(i), static_cast<NodeId>((i + 1) % n));
    }
    return g;
}

void rewire_edge(UndirectedGraph& g, UndirectedGraph::Edge edge, NodeId keep, NodeId new_end) {
    if (keep != edge.first && keep != edge.second) {
        throw ParameterError("kept endpoint does not belong to the edge");
    }
    const NodeId other = keep == edge.first ? edge.second : edge.first;
    if (new_end == keep || g.has_edge(keep, new_end)) {
        throw ParameterError("rewiring would create a self-loop or duplicate edge");
    }
    g.remove_edge(keep, other);
    g.add_edge(keep, new_end);
}

UndirectedGraph rewire(const UndirectedGraph& g, double p, Rng& rng) {
    UndirectedGraph out = g;
    const std::vector<UndirectedGraph::Edge> original(g.edges().begin(), g.edges().end());
    const auto n = static_cast<NodeId>(g.node_count());
    std::vector<NodeId> candidates;
    for (const auto& edge : original) {
        if (!rng.bernoulli(p)) {
            continue;
        }
        const NodeId keep = rng.bernoulli(0.5) ? edge.first : edge.second;
        candidates.clear();
        for (NodeId x = 0; x < n; ++x) {
            if (x != keep && !out.has_edge(keep, x)) {
                candidates.push_back(x);
            }
        }
        if (candidates.empty()) {
            continue;
        }
        rewire_edge(out, edge, keep, candidates[rng.below(candidates.size())]);
    }
    return out;
}

TreeSkeleton extract_tree(const UndirectedGraph& g, NodeId root) {
    const std::size_t n = g.node_count();
    if (root >= n) {
        throw ParameterError("root out of range");
    }
    const auto adj = g.adjacency();
    TreeSkeleton t;
    t.root = root;
    t.parent.assign(n, kNoNode);
    std::vector<bool> seen(n, false);
    std::deque<NodeId> queue{root};
    seen[root] = true;
    std::size_t reached = 1;
    while (!queue.empty()) {
        const NodeId v = queue.front();
        queue.pop_front();
        for (NodeId w : adj[v]) {
            if (!seen[w]) {
                seen[w] = true;
                t.parent[w] = v;
                ++reached;
                queue.push_back(w);
            }
        }
    }
    if (reached != n) {
        throw GenerationError("graph is disconnected; no spanning tree");
    }
    return t;
}

GridTree assign_electrical(const TreeSkeleton& skeleton, const GenParams& params, Rng& rng) {
    const std::size_t n = skeleton.parent.size();
    std::vector<GridNode> nodes(n);
    std::vector<Branch> branches;
    for (NodeId v = 0; v < n; ++v) {
        nodes[v].id = v;
        nodes[v].kind = v == skeleton.root ? NodeKind::Pcc : NodeKind::LoadOnly;
    }
    const double mean = params.mean_line_length_m;
    for (NodeId v = 0; v < n; ++v) {
        if (v == skeleton.root) {
            continue;
        }
        const double length = rng.uniform(0.5 * mean, 1.5 * mean);
        branches.push_back(Branch{skeleton.parent[v], v, length, params.impedance_per_m});
    }
    for (NodeId v = 0; v < n; ++v) {
        if (v == skeleton.root) {
            continue;
        }
        const double s = rng.uniform(params.load_s_min_va, params.load_s_max_va);
        const double pf = rng.uniform(params.load_pf_min, params.load_pf_max);
        const double q = std::sqrt(std::max(0.0, 1.0 - pf * pf));
        nodes[v].load_demand = Phasor{s * pf, s * q};
    }
    return GridTree(std::move(nodes), std::move(branches), params.pcc_voltage);
}

GridTree place_dgs(const GridTree& grid, double fraction, Rng& rng) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) {
        throw ParameterError("DG fraction must be in [0, 1]");
    }
    std::vector<NodeId> pool;
    for (const auto& nd : grid.nodes()) {
        if (nd.id != grid.root() && nd.kind != NodeKind::Junction) {
            pool.push_back(nd.id);
        }
    }
    const std::size_t eligible = grid.size() - 1;
    // Guard against 0.3 * 10 evaluating to 3.0000000000000004.
    auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(eligible) - 1e-9));
    count = std::min(count, pool.size());
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + rng.below(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return grid.with_dgs(pool);
}

GridTree generate_grid(const GenParams& params) {
    params.validate();
    Rng rng(params.seed);
    TreeSkeleton skeleton;
    if (params.n_nodes == 2) {
        skeleton.parent = {kNoNode, 0};
    } else {
        bool connected = false;
        const auto ring = generate_ring_lattice(params.n_nodes);
        for (std::size_t attempt = 0; attempt < params.max_attempts && !connected; ++attempt) {
            const auto graph = rewire(ring, params.rewiring_p, rng);
            if (graph.is_connected()) {
                skeleton = extract_tree(graph, 0);
                connected = true;
            }
        }
        if (!connected) {
            throw GenerationError("no connected small-world graph after " +
                                  std::to_string(params.max_attempts) + " attempts");
        }
    }
    const GridTree loads = assign_electrical(skeleton, params, rng);
    return place_dgs(loads, params.dg_fraction, rng);
}

}  // namespace mgsim
