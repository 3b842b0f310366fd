#pragma once

// Communication overlay: messages travel along the unique tree path between
// two smart nodes, one hop per tick. Links fail statically per scenario; a
// broken link makes every path through it unusable (trees have no detours).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mgsim/phasor_grid.hpp"
#include "mgsim/random.hpp"

namespace mgsim {

/// Communication state of each branch. Electrical behavior is unaffected.
class LinkState {
public:
    LinkState() = default;
    explicit LinkState(std::size_t branch_count) : broken_(branch_count, false) {}

    /// Breaks exactly floor(q * branch_count) links chosen uniformly.
    static LinkState random(std::size_t branch_count, double q, Rng& rng);
    /// Throws ParameterError for an out-of-range branch id.
    static LinkState from_ids(std::size_t branch_count, const std::vector<BranchId>& ids);

    std::size_t size() const { return broken_.size(); }
    bool is_broken(BranchId b) const;
    void set_broken(BranchId b, bool broken = true);
    std::size_t broken_count() const;
    std::vector<BranchId> broken_ids() const;

private:
    std::vector<bool> broken_;
};

/// Scripted failure file: whitespace-separated branch ids, `#` comments.
std::vector<BranchId> parse_failure_list(std::istream& in);
std::vector<BranchId> load_failure_list(const std::string& path);

struct MessageLog {
    std::uint64_t tokens_passed = 0;
    std::uint64_t token_hops = 0;
    std::uint64_t gathers = 0;      ///< Completed request/ack round trips.
    std::uint64_t gather_hops = 0;  ///< Both directions.
    std::uint64_t retries = 0;
    std::uint64_t skips = 0;
    std::uint64_t ticks = 0;

    std::uint64_t total_hops() const { return token_hops + gather_hops; }
    bool operator==(const MessageLog&) const = default;
};

/// Maps SN index -> node, in depth-first preorder (children ascending).
/// Throws ParameterError for an empty set or unknown node.
std::vector<NodeId> assign_dfs_ids(const GridTree& grid, const std::vector<NodeId>& sn_set);

inline std::size_t next_owner(std::size_t i, std::size_t n) { return n == 0 ? 0 : (i + 1) % n; }

/// The unique tree path src..dst (both included) or nullopt if a link on it
/// is broken.
std::optional<std::vector<NodeId>> route(const GridTree& grid, const LinkState& links,
                                         NodeId src, NodeId dst);

/// Longest path in hops.
std::size_t tree_diameter(const GridTree& grid);

struct TokenState {
    std::size_t owner = 0;
    std::size_t sn_count = 0;
    std::vector<NodeId> id_of;  ///< Ring members in DFS order.
    std::size_t attempts = 0;   ///< Attempts spent on the last delivery.
    std::size_t timeout = 0;    ///< Ticks to wait for an acknowledgement.
    std::size_t max_attempts = 3;
    NodeId coordinator = 0;

    NodeId owner_node() const { return id_of.at(owner); }
};

/// Ring over `ring` (DFS order) starting at its first member, with the
/// timeout 2 * diameter + 2.
TokenState make_token_state(const GridTree& grid, std::vector<NodeId> ring);

/// Hands the token to the next reachable ring member. An unreachable
/// successor costs max_attempts timeouts and is skipped; if nobody is
/// reachable the owner keeps the token.
TokenState pass_token(const TokenState& state, const GridTree& grid, const LinkState& links,
                      MessageLog& log);

enum class GatherKind { Data, Voltage, BuildCluster };

struct HopRecord {
    NodeId node = 0;
    Phasor load_current{};
    Phasor impedance_from_source{};
};

struct GatherResult {
    std::vector<HopRecord> hops;  ///< Every node after src, in path order, dst last.
    Phasor total_impedance{};
    Phasor dst_voltage{};  ///< Only filled by Voltage gathers.
};

/// Request/ack round trip src -> dst. Voltage gathers read dst's voltage
/// from `solution`, which is then required. Returns nullopt when the path is
/// broken. Throws ProtocolError if src is not an SN, or, for Data and
/// BuildCluster, if any path node is not an SN.
std::optional<GatherResult> gather(const GridTree& grid, const LinkState& links, NodeId src,
                                   NodeId dst, GatherKind kind, MessageLog& log,
                                   const PowerFlowSolution* solution = nullptr);

struct CommComponent {
    std::vector<NodeId> members;  ///< SNs in DFS order.
    NodeId coordinator = 0;
    bool promoted = false;  ///< Coordinator took over after losing the original one.
    bool has_pcc = false;
    TokenState token;
};

struct PartitionResult {
    std::vector<CommComponent> components;
    std::vector<std::size_t> component_of;  ///< Per node; SIZE_MAX for non-SNs.
    NodeId original_coordinator = 0;
};

/// Splits the SNs by the broken links. The original coordinator is the PCC
/// when it is an SN, otherwise the SN with DFS id 0; every component without
/// it promotes its smallest DFS id.
PartitionResult detect_partitions_and_promote(const GridTree& grid, const LinkState& links,
                                              const std::vector<NodeId>& sn_set);

}  // namespace mgsim
