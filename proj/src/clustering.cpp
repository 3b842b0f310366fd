#include "mgsim/clustering.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include "mgsim/errors.hpp"
#include "mgsim/text_format.hpp"

namespace mgsim {

std::set<NodeId> discover_neighbors(const GridTree& grid, NodeId dg) {
    if (!grid.is_terminal(dg)) {
        throw ParameterError("node " + std::to_string(dg) + " is neither a DG nor the PCC");
    }
    std::set<NodeId> found;
    std::vector<bool> seen(grid.size(), false);
    std::vector<NodeId> stack{dg};
    seen[dg] = true;
    while (!stack.empty()) {
        const NodeId v = stack.back();
        stack.pop_back();
        auto visit = [&](NodeId w) {
            if (seen[w]) {
                return;
            }
            seen[w] = true;
            if (grid.is_terminal(w)) {
                found.insert(w);
            } else {
                stack.push_back(w);
            }
        };
        for (NodeId w : grid.children(v)) {
            visit(w);
        }
        if (grid.parent(v) != kNoNode) {
            visit(grid.parent(v));
        }
    }
    return found;
}

ClusterTable build_cluster_table(const GridTree& grid, NodeId dg, const LinkState& links,
                                 MessageLog& log) {
    if (!grid.is_dg(dg)) {
        throw ParameterError("node " + std::to_string(dg) + " is not a DG");
    }
    ClusterTable table;
    table.owner = dg;
    table.neighbors = discover_neighbors(grid, dg);
    for (NodeId h : table.neighbors) {
        const auto reply = gather(grid, links, dg, h, GatherKind::BuildCluster, log);
        if (!reply) {
            continue;
        }
        Cluster c;
        c.endpoint_a = dg;
        c.endpoint_b = h;
        c.path_impedance = reply->total_impedance;
        c.path_resistance = c.path_impedance.real();
        for (std::size_t k = 0; k + 1 < reply->hops.size(); ++k) {
            const HopRecord& hop = reply->hops[k];
            if (grid.node(hop.node).kind == NodeKind::Junction) {
                continue;
            }
            const double r = (reply->total_impedance - hop.impedance_from_source).real();
            c.member_loads.push_back(MemberLoad{hop.node, hop.load_current, r});
        }
        table.clusters.emplace(h, std::move(c));
    }
    return table;
}

std::map<NodeId, std::vector<Cluster>> find_special_clusters(const GridTree& grid) {
    std::map<NodeId, std::vector<Cluster>> out;
    const auto dgs = grid.dg_nodes();
    if (dgs.empty()) {
        return out;
    }
    std::vector<bool> has_dg(grid.size(), false);
    const auto order = grid.preorder();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const NodeId v = *it;
        if (grid.is_dg(v)) {
            has_dg[v] = true;
        }
        if (v != grid.root() && has_dg[v]) {
            has_dg[grid.parent(v)] = true;
        }
    }

    for (NodeId c : order) {
        if (c == grid.root() || has_dg[c]) {
            continue;
        }
        const NodeId p = grid.parent(c);
        if (p != grid.root() && !has_dg[p]) {
            continue;  // inside a larger DG-free subtree
        }
        NodeId owner = p;
        if (!grid.is_dg(p)) {
            double best = 0.0;
            owner = kNoNode;
            for (NodeId d : dgs) {
                const double r = path_impedance(grid, p, d).real();
                if (owner == kNoNode || r < best) {
                    owner = d;
                    best = r;
                }
            }
        }
        Cluster sc;
        sc.endpoint_a = owner;
        sc.attach = p;
        sc.subtree_root = c;
        sc.path_impedance = path_impedance(grid, owner, c);
        sc.path_resistance = sc.path_impedance.real();
        std::vector<NodeId> stack{c};
        while (!stack.empty()) {
            const NodeId v = stack.back();
            stack.pop_back();
            if (grid.node(v).kind != NodeKind::Junction) {
                sc.member_loads.push_back(MemberLoad{v, grid.load_current(v),
                                                     path_impedance(grid, owner, v).real()});
            }
            const auto kids = grid.children(v);
            for (auto k = kids.rbegin(); k != kids.rend(); ++k) {
                stack.push_back(*k);
            }
        }
        out[owner].push_back(std::move(sc));
    }
    return out;
}

void attach_special_clusters(const GridTree& grid, const LinkState& links,
                             const std::map<NodeId, std::vector<Cluster>>& specials,
                             std::map<NodeId, ClusterTable>& tables) {
    for (const auto& [owner, list] : specials) {
        auto it = tables.find(owner);
        if (it == tables.end()) {
            continue;
        }
        for (Cluster sc : list) {
            std::erase_if(sc.member_loads, [&](const MemberLoad& m) {
                return !route(grid, links, owner, m.id).has_value();
            });
            if (!sc.member_loads.empty()) {
                it->second.special_clusters.push_back(std::move(sc));
            }
        }
    }
}

void dump_cluster_table(std::ostream& out, const ClusterTable& table) {
    auto z = [](Phasor v) { return format_double(v.real()) + " " + format_double(v.imag()); };
    out << "owner " << table.owner << "\nneighbors";
    for (NodeId h : table.neighbors) {
        out << ' ' << h;
    }
    out << '\n';
    auto loads = [&](const Cluster& c) {
        for (const MemberLoad& m : c.member_loads) {
            out << "  load " << m.id << ' ' << z(m.current) << ' '
                << format_double(m.resistance_to_b) << '\n';
        }
    };
    for (const auto& [h, c] : table.clusters) {
        out << "cluster " << c.endpoint_a << ' ' << h << " z " << z(c.path_impedance) << " r "
            << format_double(c.path_resistance) << '\n';
        loads(c);
    }
    for (const Cluster& c : table.special_clusters) {
        out << "special " << c.endpoint_a << " attach " << c.attach << " root "
            << c.subtree_root << " z " << z(c.path_impedance) << '\n';
        loads(c);
    }
}

}  // namespace mgsim
