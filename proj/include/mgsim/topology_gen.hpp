#pragma once

// Random test grids: ring lattice -> small-world rewiring -> BFS spanning
// tree rooted at the PCC -> sampled line lengths and loads -> DG placement.

#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "mgsim/phasor_grid.hpp"
#include "mgsim/random.hpp"

namespace mgsim {

/// Simple undirected graph; edges are stored as (min, max) pairs.
class UndirectedGraph {
public:
    using Edge = std::pair<NodeId, NodeId>;

    explicit UndirectedGraph(std::size_t n) : n_(n) {}

    std::size_t node_count() const { return n_; }
    const std::set<Edge>& edges() const { return edges_; }
    std::size_t edge_count() const { return edges_.size(); }

    static Edge normalized(NodeId a, NodeId b) { return a < b ? Edge{a, b} : Edge{b, a}; }
    bool has_edge(NodeId a, NodeId b) const { return edges_.contains(normalized(a, b)); }
    /// Throws ParameterError for self-loops, duplicates or out-of-range ids.
    void add_edge(NodeId a, NodeId b);
    void remove_edge(NodeId a, NodeId b);
    std::vector<std::vector<NodeId>> adjacency() const;
    bool is_connected() const;

private:
    std::size_t n_;
    std::set<Edge> edges_;
};

struct GenParams {
    std::size_t n_nodes = 30;
    double rewiring_p = 0.5;
    double mean_line_length_m = 30.0;
    Phasor impedance_per_m{0.08e-3, 0.08e-3};
    double dg_fraction = 0.3;
    double load_s_min_va = 2000.0;
    double load_s_max_va = 8000.0;
    double load_pf_min = 0.80;
    double load_pf_max = 0.95;
    Phasor pcc_voltage{230.0, 0.0};
    std::uint64_t seed = 1;
    std::size_t max_attempts = 10000;

    /// Throws ParameterError when a field is outside its domain.
    void validate() const;
};

/// Cycle 0-1-...-(n-1)-0. Requires n >= 3.
UndirectedGraph generate_ring_lattice(std::size_t n);

/// Replace one endpoint of `edge`: the endpoint `keep` stays, the other one
/// becomes `new_end`. Throws ParameterError if the result is not simple.
void rewire_edge(UndirectedGraph& g, UndirectedGraph::Edge edge, NodeId keep, NodeId new_end);

/// Visits the original edges in ascending order; each one is rewired with
/// probability p by keeping one endpoint (fair coin) and moving the other to
/// a uniformly chosen node that creates neither a self-loop nor a duplicate.
/// An edge with no valid destination is left unchanged.
UndirectedGraph rewire(const UndirectedGraph& g, double p, Rng& rng);

/// Parent array of a rooted spanning tree.
struct TreeSkeleton {
    NodeId root = 0;
    std::vector<NodeId> parent;  ///< kNoNode at the root.
};

/// Breadth-first spanning tree; neighbors are explored in ascending id order.
/// Throws GenerationError if `g` is disconnected.
TreeSkeleton extract_tree(const UndirectedGraph& g, NodeId root);

/// Turns a skeleton into a load-only grid: branch lengths uniform in
/// [0.5, 1.5] x mean, |S| uniform in the load range and an inductive power
/// factor uniform in the pf range at every non-PCC node.
GridTree assign_electrical(const TreeSkeleton& skeleton, const GenParams& params, Rng& rng);

/// Converts ceil(fraction * (N-1)) distinct non-PCC nodes, drawn uniformly,
/// into DGs.
GridTree place_dgs(const GridTree& grid, double fraction, Rng& rng);

/// Full pipeline. Rewiring is repeated with the same generator until the
/// graph is connected, at most `max_attempts` times.
GridTree generate_grid(const GenParams& params);

}  // namespace mgsim
