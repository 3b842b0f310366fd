#pragma once

// A cluster is the load-only stretch of grid between a DG and a neighboring
// generator (another DG or the PCC). Each DG learns its clusters by sending a
// BuildCluster packet along the path; every load on the way appends its
// current and its impedance from the sender.

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "mgsim/commsim.hpp"
#include "mgsim/phasor_grid.hpp"

namespace mgsim {

struct MemberLoad {
    NodeId id = 0;
    Phasor current{};
    double resistance_to_b = 0.0;  ///< Special clusters: resistance from the owner.
};

struct Cluster {
    NodeId endpoint_a = 0;
    std::optional<NodeId> endpoint_b;  ///< Absent for special clusters.
    std::vector<MemberLoad> member_loads;
    Phasor path_impedance{};  ///< Special clusters: owner to subtree root.
    double path_resistance = 0.0;
    /// Special clusters only: the subtree rooted at `subtree_root` hangs off
    /// `attach` through a single branch.
    NodeId attach = kNoNode;
    NodeId subtree_root = kNoNode;
};

struct ClusterTable {
    NodeId owner = 0;
    std::set<NodeId> neighbors;
    std::map<NodeId, Cluster> clusters;  ///< Reachable neighbors only.
    std::vector<Cluster> special_clusters;
};

/// Generators (DGs and the PCC) reachable from `dg` without crossing
/// another generator. Throws ParameterError unless `dg` is a DG or the PCC.
std::set<NodeId> discover_neighbors(const GridTree& grid, NodeId dg);

/// One BuildCluster round trip per neighbor; clusters behind a broken link
/// are left out. Throws ParameterError if `dg` is not a DG.
ClusterTable build_cluster_table(const GridTree& grid, NodeId dg, const LinkState& links,
                                 MessageLog& log);

/// Maximal DG-free subtrees whose parent side still contains a DG (or is the
/// PCC), keyed by the owning DG: the attaching DG itself, otherwise the DG
/// with least path resistance from the attachment point (lower id on ties).
std::map<NodeId, std::vector<Cluster>> find_special_clusters(const GridTree& grid);

/// Copies special clusters into their owners' tables, keeping only members
/// the owner can still reach.
void attach_special_clusters(const GridTree& grid, const LinkState& links,
                             const std::map<NodeId, std::vector<Cluster>>& specials,
                             std::map<NodeId, ClusterTable>& tables);

/// Line-oriented debug dump, stable for golden-file comparison.
void dump_cluster_table(std::ostream& out, const ClusterTable& table);

}  // namespace mgsim
