#pragma once

#include <string>
#include <vector>

#include "mgsim/grid_io.hpp"
#include "mgsim/phasor_grid.hpp"
#include "mgsim/random.hpp"
#include "mgsim/topology_gen.hpp"

namespace fixtures {

using mgsim::Branch;
using mgsim::GridNode;
using mgsim::GridTree;
using mgsim::NodeId;
using mgsim::NodeKind;
using mgsim::Phasor;

inline GridTree reference_grid() {
    return mgsim::load_grid(std::string(MGSIM_DATA_DIR) + "/reference_microgrid.grid");
}

/// PCC - n1 - n2 - ... with one branch of `ohm` (pure resistance plus the
/// same reactance) per hop. `kinds[i]` describes node i + 1.
inline GridTree line(const std::vector<NodeKind>& kinds, const std::vector<Phasor>& loads,
                     const std::vector<double>& lengths, Phasor z_per_m = {1.0, 0.0}) {
    std::vector<GridNode> nodes{GridNode{0, NodeKind::Pcc, {}, true}};
    std::vector<Branch> branches;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        const auto id = static_cast<NodeId>(i + 1);
        nodes.push_back(GridNode{id, kinds[i], loads[i], true});
        branches.push_back(Branch{id - 1, id, lengths[i], z_per_m});
    }
    return GridTree(nodes, branches, {230.0, 0.0});
}

inline GridTree random_grid(std::uint64_t seed, std::size_t n, double dg_fraction) {
    mgsim::GenParams p;
    p.n_nodes = n;
    p.dg_fraction = dg_fraction;
    p.seed = seed;
    return mgsim::generate_grid(p);
}

}  // namespace fixtures
