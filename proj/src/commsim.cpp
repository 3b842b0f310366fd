#include "mgsim/commsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "mgsim/errors.hpp"
#include "mgsim/text_format.hpp"

namespace mgsim {

LinkState LinkState::random(std::size_t branch_count, double q, Rng& rng) {
    if (!(q >= 0.0 && q <= 1.0)) {
        throw ParameterError("broken link fraction must be in [0, 1]");
    }
    LinkState s(branch_count);
    const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(branch_count)));
    std::vector<BranchId> ids(branch_count);
    for (std::size_t i = 0; i < branch_count; ++i) {
        ids[i] = static_cast<BranchId>(i);
    }
    for (std::size_t i = 0; i < k; ++i) {
        std::swap(ids[i], ids[i + rng.below(branch_count - i)]);
        s.broken_[ids[i]] = true;
    }
    return s;
}

LinkState LinkState::from_ids(std::size_t branch_count, const std::vector<BranchId>& ids) {
    LinkState s(branch_count);
    for (BranchId b : ids) {
        s.set_broken(b);
    }
    return s;
}

bool LinkState::is_broken(BranchId b) const {
    if (b >= broken_.size()) {
        throw ParameterError("branch id " + std::to_string(b) + " out of range");
    }
    return broken_[b];
}

void LinkState::set_broken(BranchId b, bool broken) {
    if (b >= broken_.size()) {
        throw ParameterError("branch id " + std::to_string(b) + " out of range");
    }
    broken_[b] = broken;
}

std::size_t LinkState::broken_count() const {
    return static_cast<std::size_t>(std::count(broken_.begin(), broken_.end(), true));
}

std::vector<BranchId> LinkState::broken_ids() const {
    std::vector<BranchId> out;
    for (std::size_t i = 0; i < broken_.size(); ++i) {
        if (broken_[i]) {
            out.push_back(static_cast<BranchId>(i));
        }
    }
    return out;
}

std::vector<BranchId> parse_failure_list(std::istream& in) {
    std::vector<BranchId> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream tokens(line);
        std::string tok;
        while (tokens >> tok) {
            ids.push_back(static_cast<BranchId>(parse_unsigned(tok)));
        }
    }
    return ids;
}

std::vector<BranchId> load_failure_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open failure file: " + path);
    }
    return parse_failure_list(in);
}

std::vector<NodeId> assign_dfs_ids(const GridTree& grid, const std::vector<NodeId>& sn_set) {
    if (sn_set.empty()) {
        throw ParameterError("token ring needs at least one smart node");
    }
    std::vector<bool> member(grid.size(), false);
    for (NodeId v : sn_set) {
        if (v >= grid.size()) {
            throw ParameterError("unknown smart node " + std::to_string(v));
        }
        member[v] = true;
    }
    std::vector<NodeId> ids;
    for (NodeId v : grid.preorder()) {
        if (member[v]) {
            ids.push_back(v);
        }
    }
    return ids;
}

std::optional<std::vector<NodeId>> route(const GridTree& grid, const LinkState& links,
                                         NodeId src, NodeId dst) {
    for (BranchId b : grid.path_branches(src, dst)) {
        if (links.is_broken(b)) {
            return std::nullopt;
        }
    }
    return grid.path_nodes(src, dst);
}

namespace {

/// Farthest node from `start` and its distance in hops.
std::pair<NodeId, std::size_t> farthest(const GridTree& grid, NodeId start) {
    std::vector<std::size_t> dist(grid.size(), std::numeric_limits<std::size_t>::max());
    std::vector<NodeId> stack{start};
    dist[start] = 0;
    std::pair<NodeId, std::size_t> best{start, 0};
    while (!stack.empty()) {
        const NodeId v = stack.back();
        stack.pop_back();
        if (dist[v] > best.second) {
            best = {v, dist[v]};
        }
        auto visit = [&](NodeId w) {
            if (dist[w] == std::numeric_limits<std::size_t>::max()) {
                dist[w] = dist[v] + 1;
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
    return best;
}

}  // namespace

std::size_t tree_diameter(const GridTree& grid) {
    return farthest(grid, farthest(grid, grid.root()).first).second;
}

TokenState make_token_state(const GridTree& grid, std::vector<NodeId> ring) {
    if (ring.empty()) {
        throw ParameterError("token ring needs at least one member");
    }
    TokenState s;
    s.sn_count = ring.size();
    s.id_of = std::move(ring);
    s.timeout = 2 * tree_diameter(grid) + 2;
    s.coordinator = s.id_of.front();
    return s;
}

TokenState pass_token(const TokenState& state, const GridTree& grid, const LinkState& links,
                      MessageLog& log) {
    TokenState next = state;
    next.attempts = 0;
    if (state.sn_count <= 1) {
        return next;
    }
    const NodeId from = state.owner_node();
    std::size_t j = next_owner(state.owner, state.sn_count);
    while (j != state.owner) {
        if (auto path = route(grid, links, from, state.id_of[j])) {
            const std::size_t hops = path->size() - 1;
            next.owner = j;
            next.attempts += 1;
            log.tokens_passed += 1;
            log.token_hops += hops;
            log.ticks += 2 * hops;
            return next;
        }
        next.attempts += state.max_attempts;
        log.retries += state.max_attempts;
        log.ticks += state.max_attempts * state.timeout;
        log.skips += 1;
        j = next_owner(j, state.sn_count);
    }
    return next;
}

std::optional<GatherResult> gather(const GridTree& grid, const LinkState& links, NodeId src,
                                   NodeId dst, GatherKind kind, MessageLog& log,
                                   const PowerFlowSolution* solution) {
    if (!grid.node(src).is_smart) {
        throw ProtocolError("gather source " + std::to_string(src) + " is not a smart node");
    }
    const auto path = grid.path_nodes(src, dst);
    if (kind != GatherKind::Voltage) {
        for (NodeId v : path) {
            if (!grid.node(v).is_smart) {
                throw ProtocolError("node " + std::to_string(v) + " on the path " +
                                    std::to_string(src) + "->" + std::to_string(dst) +
                                    " cannot relay: not a smart node");
            }
        }
    }
    if (kind == GatherKind::Voltage && solution == nullptr) {
        throw ParameterError("voltage gather needs a power-flow solution");
    }

    GatherResult result;
    const auto branches = grid.path_branches(src, dst);
    std::size_t delivered = 0;
    for (std::size_t k = 0; k < branches.size(); ++k) {
        if (links.is_broken(branches[k])) {
            // The request dies here; the source times out waiting for the ack.
            log.gather_hops += delivered;
            log.ticks += delivered + 2 * path.size();
            return std::nullopt;
        }
        ++delivered;
        result.total_impedance += grid.branch(branches[k]).impedance();
        const NodeId v = path[k + 1];
        result.hops.push_back(HopRecord{v, grid.load_current(v), result.total_impedance});
    }
    if (kind == GatherKind::Voltage) {
        result.dst_voltage = solution->node_voltage.at(dst);
    }
    log.gathers += 1;
    log.gather_hops += 2 * delivered;
    log.ticks += 2 * delivered;
    return result;
}

PartitionResult detect_partitions_and_promote(const GridTree& grid, const LinkState& links,
                                              const std::vector<NodeId>& sn_set) {
    const auto ring = assign_dfs_ids(grid, sn_set);
    PartitionResult out;
    // The PCC comes first in preorder, so this is the PCC whenever it is an SN.
    out.original_coordinator = ring.front();

    // Label physical components: a node starts a new one at the root or
    // below a broken link. Preorder guarantees the parent is labeled first.
    std::vector<std::size_t> label(grid.size());
    std::size_t labels = 0;
    for (NodeId v : grid.preorder()) {
        if (v == grid.root() || links.is_broken(grid.parent_branch(v))) {
            label[v] = labels++;
        } else {
            label[v] = label[grid.parent(v)];
        }
    }

    std::vector<std::size_t> slot(labels, std::numeric_limits<std::size_t>::max());
    out.component_of.assign(grid.size(), std::numeric_limits<std::size_t>::max());
    for (NodeId v : ring) {
        std::size_t& s = slot[label[v]];
        if (s == std::numeric_limits<std::size_t>::max()) {
            s = out.components.size();
            out.components.emplace_back();
        }
        out.components[s].members.push_back(v);
        out.component_of[v] = s;
    }
    for (auto& c : out.components) {
        // Members are in DFS order, so the front is the smallest DFS id; the
        // original coordinator is always the front of its own component.
        c.coordinator = c.members.front();
        c.promoted = c.coordinator != out.original_coordinator;
        c.has_pcc = label[c.members.front()] == label[grid.root()];
        c.token = make_token_state(grid, c.members);
    }
    return out;
}

}  // namespace mgsim
