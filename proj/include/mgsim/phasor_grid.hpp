#pragma once

// =============================================================================
// Electrical model of a radial micro-grid
// =============================================================================
// The grid is a rooted tree. The root (PCC) is an ideal voltage source, every
// load is a constant-current sink whose current is fixed at the nominal PCC
// voltage, and every distributed generator (DG) is an ideal current source.
// With that model the circuit is linear and a two-pass tree sweep is exact.
// =============================================================================

#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <vector>

namespace mgsim {

/// Complex phasor. Units depend on context: V, A, Ohm or VA.
using Phasor = std::complex<double>;

using NodeId = std::uint32_t;
using BranchId = std::uint32_t;

inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

enum class NodeKind {
    Pcc,
    LoadOnly,
    DgWithLoad,
    Junction,
};

std::string_view to_string(NodeKind kind);

struct GridNode {
    NodeId id = 0;
    NodeKind kind = NodeKind::LoadOnly;
    Phasor load_demand{};  ///< Apparent power in VA; zero for PCC and junctions.
    bool is_smart = true;
};

struct Branch {
    NodeId parent = 0;
    NodeId child = 0;
    double length_m = 0.0;
    Phasor impedance_per_m{};

    Phasor impedance() const { return length_m * impedance_per_m; }
};

/// Validated, immutable radial grid.
///
/// Node ids are dense (0..N-1). Branches are stored sorted by child id, so a
/// branch id is stable for a given set of nodes. Children are kept in
/// ascending id order and `preorder()` is the depth-first preorder that
/// visits them in that order.
class GridTree {
public:
    /// Throws StructuralError for anything that is not a single rooted tree
    /// and NumericError for non-finite values.
    GridTree(std::vector<GridNode> nodes, std::vector<Branch> branches, Phasor pcc_voltage);

    std::size_t size() const { return nodes_.size(); }
    NodeId root() const { return root_; }
    Phasor pcc_voltage() const { return pcc_voltage_; }

    const GridNode& node(NodeId id) const;
    std::span<const GridNode> nodes() const { return nodes_; }
    const Branch& branch(BranchId id) const;
    std::span<const Branch> branches() const { return branches_; }

    /// kNoNode for the root.
    NodeId parent(NodeId id) const;
    /// Branch connecting `id` to its parent. Throws LookupError for the root.
    BranchId parent_branch(NodeId id) const;
    std::span<const NodeId> children(NodeId id) const;
    std::size_t depth(NodeId id) const;
    std::span<const NodeId> preorder() const { return preorder_; }

    bool is_dg(NodeId id) const { return node(id).kind == NodeKind::DgWithLoad; }
    /// DGs and the PCC: the endpoints of clusters.
    bool is_terminal(NodeId id) const { return id == root_ || is_dg(id); }
    std::vector<NodeId> dg_nodes() const;
    std::vector<NodeId> smart_nodes() const;

    /// Constant-current sink drawn by the node's load: conj(S / U_pcc).
    Phasor load_current(NodeId id) const;

    /// Unique tree path, endpoints included, ordered from `a` to `b`.
    std::vector<NodeId> path_nodes(NodeId a, NodeId b) const;
    /// Branches of the unique tree path, ordered from `a` to `b`.
    std::vector<BranchId> path_branches(NodeId a, NodeId b) const;

    GridTree with_smart_nodes(std::span<const NodeId> smart) const;
    GridTree with_all_smart() const;
    GridTree with_impedance_per_m(Phasor z) const;
    GridTree with_dgs(std::span<const NodeId> dgs) const;

private:
    void check_id(NodeId id) const;

    std::vector<GridNode> nodes_;
    std::vector<Branch> branches_;
    Phasor pcc_voltage_;
    NodeId root_ = 0;
    std::vector<NodeId> parent_;
    std::vector<BranchId> parent_branch_;
    std::vector<std::vector<NodeId>> children_;
    std::vector<std::size_t> depth_;
    std::vector<NodeId> preorder_;
};

/// Current injected by each DG (A). Absent keys inject nothing.
class InjectionState {
public:
    void set(NodeId dg, Phasor current) { current_[dg] = current; }
    Phasor get(NodeId dg) const;
    const std::map<NodeId, Phasor>& entries() const { return current_; }

private:
    std::map<NodeId, Phasor> current_;
};

struct PowerFlowSolution {
    std::vector<Phasor> node_voltage;    ///< Indexed by NodeId.
    std::vector<Phasor> branch_current;  ///< Indexed by BranchId, positive parent -> child.
    double total_loss = 0.0;             ///< W
    Phasor pcc_power{};                  ///< VA delivered by the PCC.
};

/// Exact steady-state solution by leaf-to-root current accumulation followed
/// by root-to-leaf voltage propagation. O(N).
///
/// Throws ParameterError if an injection key is not a DG and NumericError for
/// non-finite injections.
PowerFlowSolution solve_power_flow(const GridTree& grid, const InjectionState& injections);

inline double total_loss(const PowerFlowSolution& sol) { return sol.total_loss; }
/// Real power delivered by the PCC (W).
inline double pcc_workload(const PowerFlowSolution& sol) { return sol.pcc_power.real(); }

/// Sum of branch impedances on the tree path a <-> b. Requires a != b.
Phasor path_impedance(const GridTree& grid, NodeId a, NodeId b);

/// Impedance seen from `node` with the PCC source shorted and current sinks
/// open, i.e. the series path to the root. Zero at the root.
Phasor thevenin_impedance(const GridTree& grid, NodeId node);

/// Largest Kirchhoff current-law mismatch over all nodes (A).
double kcl_residual(const GridTree& grid, const InjectionState& injections,
                    const PowerFlowSolution& sol);

/// |S_pcc + sum S_dg - sum S_load - sum Z|I|^2| relative to the total
/// apparent power exchanged.
double power_balance_residual(const GridTree& grid, const InjectionState& injections,
                              const PowerFlowSolution& sol);

}  // namespace mgsim
