#include "mgsim/phasor_grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mgsim/errors.hpp"

namespace mgsim {

namespace {

bool finite(Phasor z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

std::string node_str(NodeId id) { return std::to_string(id); }

}  // namespace

std::string_view to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::Pcc: return "pcc";
        case NodeKind::LoadOnly: return "load";
        case NodeKind::DgWithLoad: return "dg";
        case NodeKind::Junction: return "junction";
    }
    return "unknown";
}

GridTree::GridTree(std::vector<GridNode> nodes, std::vector<Branch> branches, Phasor pcc_voltage)
    : nodes_(std::move(nodes)), branches_(std::move(branches)), pcc_voltage_(pcc_voltage) {
    const std::size_t n = nodes_.size();
    if (n == 0) {
        throw StructuralError("grid has no nodes");
    }
    if (!finite(pcc_voltage_) || pcc_voltage_ == Phasor{}) {
        throw NumericError("PCC voltage must be finite and non-zero");
    }

    std::sort(nodes_.begin(), nodes_.end(),
              [](const GridNode& a, const GridNode& b) { return a.id < b.id; });
    std::size_t pcc_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const GridNode& nd = nodes_[i];
        if (nd.id != i) {
            throw StructuralError("node ids must be dense 0..N-1 (missing or duplicate id near " +
                                  node_str(static_cast<NodeId>(i)) + ")");
        }
        if (!finite(nd.load_demand)) {
            throw NumericError("non-finite load at node " + node_str(nd.id));
        }
        if (nd.kind == NodeKind::Pcc) {
            ++pcc_count;
            root_ = nd.id;
        }
        if ((nd.kind == NodeKind::Pcc || nd.kind == NodeKind::Junction) &&
            nd.load_demand != Phasor{}) {
            throw StructuralError("node " + node_str(nd.id) + " of kind " +
                                  std::string(to_string(nd.kind)) + " cannot carry a load");
        }
    }
    if (pcc_count != 1) {
        throw StructuralError("grid must have exactly one PCC, found " + std::to_string(pcc_count));
    }
    if (branches_.size() + 1 != n) {
        throw StructuralError("a tree with " + std::to_string(n) + " nodes needs " +
                              std::to_string(n - 1) + " branches, got " +
                              std::to_string(branches_.size()));
    }

    parent_.assign(n, kNoNode);
    for (const Branch& b : branches_) {
        if (b.parent >= n || b.child >= n) {
            throw StructuralError("branch references unknown node");
        }
        if (b.parent == b.child) {
            throw StructuralError("self-loop at node " + node_str(b.child));
        }
        if (b.child == root_) {
            throw StructuralError("the PCC cannot have a parent branch");
        }
        if (parent_[b.child] != kNoNode) {
            throw StructuralError("node " + node_str(b.child) + " has more than one parent");
        }
        if (!std::isfinite(b.length_m) || !finite(b.impedance_per_m)) {
            throw NumericError("non-finite branch parameters at node " + node_str(b.child));
        }
        if (!(b.impedance().real() > 0.0)) {
            throw StructuralError("branch to node " + node_str(b.child) +
                                  " must have positive resistance");
        }
        parent_[b.child] = b.parent;
    }

    std::sort(branches_.begin(), branches_.end(),
              [](const Branch& a, const Branch& b) { return a.child < b.child; });
    parent_branch_.assign(n, static_cast<BranchId>(-1));
    children_.assign(n, {});
    for (BranchId id = 0; id < branches_.size(); ++id) {
        parent_branch_[branches_[id].child] = id;
        children_[branches_[id].parent].push_back(branches_[id].child);
    }
    for (auto& c : children_) {
        std::sort(c.begin(), c.end());
    }

    depth_.assign(n, 0);
    preorder_.reserve(n);
    std::vector<NodeId> stack{root_};
    while (!stack.empty()) {
        const NodeId v = stack.back();
        stack.pop_back();
        preorder_.push_back(v);
        const auto& ch = children_[v];
        for (auto it = ch.rbegin(); it != ch.rend(); ++it) {
            depth_[*it] = depth_[v] + 1;
            stack.push_back(*it);
        }
        if (preorder_.size() > n) {
            break;
        }
    }
    if (preorder_.size() != n) {
        throw StructuralError("grid is not connected to the PCC (cycle or detached part)");
    }
}

void GridTree::check_id(NodeId id) const {
    if (id >= nodes_.size()) {
        throw LookupError("unknown node " + node_str(id));
    }
}

const GridNode& GridTree::node(NodeId id) const {
    check_id(id);
    return nodes_[id];
}

const Branch& GridTree::branch(BranchId id) const {
    if (id >= branches_.size()) {
        throw LookupError("unknown branch " + std::to_string(id));
    }
    return branches_[id];
}

NodeId GridTree::parent(NodeId id) const {
    check_id(id);
    return parent_[id];
}

BranchId GridTree::parent_branch(NodeId id) const {
    check_id(id);
    if (id == root_) {
        throw LookupError("the PCC has no parent branch");
    }
    return parent_branch_[id];
}

std::span<const NodeId> GridTree::children(NodeId id) const {
    check_id(id);
    return children_[id];
}

std::size_t GridTree::depth(NodeId id) const {
    check_id(id);
    return depth_[id];
}

std::vector<NodeId> GridTree::dg_nodes() const {
    std::vector<NodeId> out;
    for (const auto& nd : nodes_) {
        if (nd.kind == NodeKind::DgWithLoad) {
            out.push_back(nd.id);
        }
    }
    return out;
}

std::vector<NodeId> GridTree::smart_nodes() const {
    std::vector<NodeId> out;
    for (const auto& nd : nodes_) {
        if (nd.is_smart) {
            out.push_back(nd.id);
        }
    }
    return out;
}

Phasor GridTree::load_current(NodeId id) const {
    return std::conj(node(id).load_demand / pcc_voltage_);
}

std::vector<NodeId> GridTree::path_nodes(NodeId a, NodeId b) const {
    check_id(a);
    check_id(b);
    std::vector<NodeId> up;
    std::vector<NodeId> down;
    NodeId x = a;
    NodeId y = b;
    while (depth_[x] > depth_[y]) {
        up.push_back(x);
        x = parent_[x];
    }
    while (depth_[y] > depth_[x]) {
        down.push_back(y);
        y = parent_[y];
    }
    while (x != y) {
        up.push_back(x);
        down.push_back(y);
        x = parent_[x];
        y = parent_[y];
    }
    up.push_back(x);
    up.insert(up.end(), down.rbegin(), down.rend());
    return up;
}

std::vector<BranchId> GridTree::path_branches(NodeId a, NodeId b) const {
    const auto nodes = path_nodes(a, b);
    std::vector<BranchId> out;
    out.reserve(nodes.size());
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        const NodeId u = nodes[i];
        const NodeId v = nodes[i + 1];
        out.push_back(parent_[u] == v ? parent_branch_[u] : parent_branch_[v]);
    }
    return out;
}

GridTree GridTree::with_smart_nodes(std::span<const NodeId> smart) const {
    auto nodes = nodes_;
    for (auto& nd : nodes) {
        nd.is_smart = false;
    }
    for (NodeId id : smart) {
        check_id(id);
        nodes[id].is_smart = true;
    }
    return GridTree(std::move(nodes), branches_, pcc_voltage_);
}

GridTree GridTree::with_all_smart() const {
    auto nodes = nodes_;
    for (auto& nd : nodes) {
        nd.is_smart = true;
    }
    return GridTree(std::move(nodes), branches_, pcc_voltage_);
}

GridTree GridTree::with_impedance_per_m(Phasor z) const {
    auto branches = branches_;
    for (auto& b : branches) {
        b.impedance_per_m = z;
    }
    return GridTree(nodes_, std::move(branches), pcc_voltage_);
}

GridTree GridTree::with_dgs(std::span<const NodeId> dgs) const {
    auto nodes = nodes_;
    for (auto& nd : nodes) {
        if (nd.kind == NodeKind::DgWithLoad) {
            nd.kind = NodeKind::LoadOnly;
        }
    }
    for (NodeId id : dgs) {
        check_id(id);
        if (nodes[id].kind != NodeKind::LoadOnly) {
            throw ParameterError("node " + node_str(id) + " cannot host a DG");
        }
        nodes[id].kind = NodeKind::DgWithLoad;
    }
    return GridTree(std::move(nodes), branches_, pcc_voltage_);
}

Phasor InjectionState::get(NodeId dg) const {
    const auto it = current_.find(dg);
    return it == current_.end() ? Phasor{} : it->second;
}

PowerFlowSolution solve_power_flow(const GridTree& grid, const InjectionState& injections) {
    const std::size_t n = grid.size();
    std::vector<Phasor> subtree(n);
    for (NodeId v = 0; v < n; ++v) {
        subtree[v] = grid.load_current(v);
    }
    for (const auto& [id, current] : injections.entries()) {
        if (id >= n || !grid.is_dg(id)) {
            throw ParameterError("injection at node " + node_str(id) + " which is not a DG");
        }
        if (!finite(current)) {
            throw NumericError("non-finite injection at node " + node_str(id));
        }
        subtree[id] -= current;
    }

    PowerFlowSolution sol;
    sol.branch_current.assign(grid.branches().size(), Phasor{});
    sol.node_voltage.assign(n, Phasor{});

    const auto order = grid.preorder();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const NodeId v = *it;
        if (v == grid.root()) {
            continue;
        }
        sol.branch_current[grid.parent_branch(v)] = subtree[v];
        subtree[grid.parent(v)] += subtree[v];
    }

    sol.node_voltage[grid.root()] = grid.pcc_voltage();
    for (const NodeId v : order) {
        if (v == grid.root()) {
            continue;
        }
        const BranchId b = grid.parent_branch(v);
        sol.node_voltage[v] =
            sol.node_voltage[grid.parent(v)] - grid.branch(b).impedance() * sol.branch_current[b];
    }

    Phasor leaving{};
    for (BranchId b = 0; b < sol.branch_current.size(); ++b) {
        sol.total_loss += grid.branch(b).impedance().real() * std::norm(sol.branch_current[b]);
        if (grid.branch(b).parent == grid.root()) {
            leaving += sol.branch_current[b];
        }
    }
    sol.pcc_power = grid.pcc_voltage() * std::conj(leaving);
    return sol;
}

Phasor path_impedance(const GridTree& grid, NodeId a, NodeId b) {
    if (a == b) {
        throw ParameterError("path_impedance needs two distinct nodes");
    }
    Phasor z{};
    for (BranchId id : grid.path_branches(a, b)) {
        z += grid.branch(id).impedance();
    }
    return z;
}

Phasor thevenin_impedance(const GridTree& grid, NodeId node) {
    if (node == grid.root()) {
        grid.node(node);
        return {};
    }
    return path_impedance(grid, grid.root(), node);
}

double kcl_residual(const GridTree& grid, const InjectionState& injections,
                    const PowerFlowSolution& sol) {
    double worst = 0.0;
    for (NodeId v = 0; v < grid.size(); ++v) {
        // The source supplies whatever its children draw.
        if (v == grid.root()) {
            continue;
        }
        Phasor balance = grid.load_current(v) - injections.get(v);
        for (NodeId c : grid.children(v)) {
            balance += sol.branch_current[grid.parent_branch(c)];
        }
        balance -= sol.branch_current[grid.parent_branch(v)];
        worst = std::max(worst, std::abs(balance));
    }
    return worst;
}

double power_balance_residual(const GridTree& grid, const InjectionState& injections,
                              const PowerFlowSolution& sol) {
    Phasor balance = sol.pcc_power;
    double scale = std::abs(sol.pcc_power);
    for (NodeId v = 0; v < grid.size(); ++v) {
        const Phasor s_load = sol.node_voltage[v] * std::conj(grid.load_current(v));
        const Phasor s_dg = sol.node_voltage[v] * std::conj(injections.get(v));
        balance += s_dg - s_load;
        scale += std::abs(s_load) + std::abs(s_dg);
    }
    for (BranchId b = 0; b < sol.branch_current.size(); ++b) {
        const Phasor s_loss = grid.branch(b).impedance() * std::norm(sol.branch_current[b]);
        balance -= s_loss;
        scale += std::abs(s_loss);
    }
    return scale > 0.0 ? std::abs(balance) / scale : std::abs(balance);
}

}  // namespace mgsim
