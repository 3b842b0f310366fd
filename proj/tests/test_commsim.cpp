#include <catch_amalgamated.hpp>

#include <map>
#include <sstream>

#include "fixtures.hpp"
#include "mgsim/commsim.hpp"
#include "mgsim/errors.hpp"
#include "oracles.hpp"

using namespace mgsim;

namespace {

std::vector<NodeId> all_nodes(const GridTree& g) {
    std::vector<NodeId> v(g.size());
    for (NodeId i = 0; i < g.size(); ++i) {
        v[i] = i;
    }
    return v;
}

}  // namespace

TEST_CASE("next owner wraps around", "[token]") {
    CHECK(next_owner(8, 9) == 0);
    CHECK(next_owner(3, 9) == 4);
    CHECK(next_owner(0, 1) == 0);
}

TEST_CASE("DFS identifiers follow the depth-first token path", "[token]") {
    const auto g = fixtures::reference_grid();
    const auto ids = assign_dfs_ids(g, all_nodes(g));
    CHECK(ids == oracle::preorder(g));
    CHECK(ids == std::vector<NodeId>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    CHECK(assign_dfs_ids(g, {6}) == std::vector<NodeId>{6});
    CHECK(assign_dfs_ids(g, {9, 4, 0, 1}) == std::vector<NodeId>{0, 1, 4, 9});
    CHECK_THROWS_AS(assign_dfs_ids(g, {}), ParameterError);

    const auto path = fixtures::line({NodeKind::LoadOnly, NodeKind::LoadOnly, NodeKind::DgWithLoad},
                                     {{1, 0}, {1, 0}, {1, 0}}, {1, 1, 1});
    CHECK(assign_dfs_ids(path, all_nodes(path)) == std::vector<NodeId>{0, 1, 2, 3});
}

TEST_CASE("routes are the unique tree path unless a link is down", "[route]") {
    const auto g = fixtures::reference_grid();
    LinkState links(g.branches().size());
    CHECK(*route(g, links, 1, 4) == std::vector<NodeId>{1, 3, 4});
    CHECK(route(g, links, 0, 1)->size() == 2);
    links.set_broken(g.parent_branch(3));
    CHECK_FALSE(route(g, links, 1, 4).has_value());
    CHECK(route(g, links, 1, 2).has_value());

    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto r = fixtures::random_grid(seed, 25, 0.3);
        LinkState ok(r.branches().size());
        for (NodeId a = 0; a < r.size(); a += 3) {
            for (NodeId b = 0; b < r.size(); b += 2) {
                CHECK(*route(r, ok, a, b) == oracle::bfs_path(r, a, b));
            }
        }
    }
}

TEST_CASE("broken link sets", "[links]") {
    Rng rng(3);
    auto s = LinkState::random(29, 0.25, rng);
    CHECK(s.broken_count() == 7);
    CHECK(LinkState::random(29, 1.0, rng).broken_count() == 29);
    CHECK(LinkState::random(29, 0.0, rng).broken_count() == 0);
    CHECK_THROWS_AS(LinkState::from_ids(5, {7}), ParameterError);
    std::istringstream file("# cut the feeder\n3 5\n\n1 # and one more\n");
    CHECK(parse_failure_list(file) == std::vector<BranchId>{3, 5, 1});
    std::istringstream bad("3 x\n");
    CHECK_THROWS_AS(parse_failure_list(bad), FormatError);
}

TEST_CASE("token passing", "[token]") {
    const auto g = fixtures::reference_grid();
    LinkState links(g.branches().size());
    MessageLog log;
    auto t = make_token_state(g, assign_dfs_ids(g, all_nodes(g)));
    CHECK(t.timeout == 2 * tree_diameter(g) + 2);
    for (std::size_t k = 1; k <= 12; ++k) {
        t = pass_token(t, g, links, log);
        CHECK(t.owner == k % 10);
    }
    CHECK(log.skips == 0);

    SECTION("unreachable successor is skipped once") {
        // Ring over the generators only; cutting N3's parent branch hides
        // G3 (node 4) from G0 (node 1) while G5 stays reachable.
        auto ring = make_token_state(g, assign_dfs_ids(g, {0, 1, 4, 6, 9}));
        links.set_broken(g.parent_branch(4));
        MessageLog l;
        ring = pass_token(ring, g, links, l);  // 0 -> 1
        REQUIRE(ring.owner_node() == 1);
        ring = pass_token(ring, g, links, l);
        CHECK(ring.owner_node() == 6);
        CHECK(l.skips == 1);
        CHECK(l.retries == ring.max_attempts);
    }
    SECTION("isolated owner keeps the token") {
        auto ring = make_token_state(g, assign_dfs_ids(g, {0, 4, 6}));
        ring.owner = 1;
        links.set_broken(g.parent_branch(4));
        MessageLog l;
        const auto after = pass_token(ring, g, links, l);
        CHECK(after.owner == 1);
        CHECK(l.skips == 2);
        CHECK(l.tokens_passed == 0);
    }
}

TEST_CASE("fairness and DFS travel bound on random trees", "[token][oracle]") {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto g = fixtures::random_grid(seed, 5 + seed % 26, 0.3);
        LinkState links(g.branches().size());
        MessageLog log;
        auto t = make_token_state(g, assign_dfs_ids(g, all_nodes(g)));
        std::size_t expected_hops = 0;
        for (std::size_t i = 0; i < t.sn_count; ++i) {
            expected_hops += oracle::hop_distance(g, t.id_of[i], t.id_of[(i + 1) % t.sn_count]);
        }
        CHECK(expected_hops == 2 * (g.size() - 1));
        std::map<NodeId, int> owned;
        for (std::size_t k = 0; k < 2 * t.sn_count; ++k) {
            t = pass_token(t, g, links, log);
            ++owned[t.owner_node()];
        }
        CHECK(log.token_hops == 2 * 2 * (g.size() - 1));
        CHECK(owned.size() == g.size());
        for (const auto& [node, count] : owned) {
            CHECK(count == 2);
        }
    }
}

TEST_CASE("gathers", "[gather]") {
    const auto g = fixtures::reference_grid();
    LinkState links(g.branches().size());
    MessageLog log;
    const auto sol = solve_power_flow(g, {});

    const auto v = gather(g, links, 6, 5, GatherKind::Voltage, log, &sol);
    REQUIRE(v);
    CHECK(v->dst_voltage == sol.node_voltage[5]);

    // G5 (node 6) to the PCC crosses load N4 (node 5).
    const auto bc = gather(g, links, 9, 4, GatherKind::BuildCluster, log);
    REQUIRE(bc);
    const auto path = g.path_nodes(9, 4);
    REQUIRE(bc->hops.size() == path.size() - 1);
    Phasor prefix{};
    for (std::size_t k = 0; k < bc->hops.size(); ++k) {
        prefix += path_impedance(g, path[k], path[k + 1]);
        CHECK(bc->hops[k].node == path[k + 1]);
        CHECK(std::abs(bc->hops[k].impedance_from_source - prefix) < 1e-15);
        CHECK(bc->hops[k].load_current == g.load_current(path[k + 1]));
    }
    CHECK(std::abs(bc->total_impedance - path_impedance(g, 9, 4)) < 1e-15);
    CHECK(log.gathers == 2);
    CHECK(log.gather_hops == 2 * (1 + path.size() - 1));

    links.set_broken(g.parent_branch(5));
    CHECK_FALSE(gather(g, links, 6, 0, GatherKind::Data, log).has_value());
    CHECK(log.gathers == 2);

    const std::vector<NodeId> smart{0, 1, 4, 6, 9};
    const auto sparse = g.with_smart_nodes(smart);
    LinkState ok(g.branches().size());
    CHECK_THROWS_AS(gather(sparse, ok, 1, 4, GatherKind::BuildCluster, log), ProtocolError);
    CHECK_THROWS_AS(gather(sparse, ok, 2, 0, GatherKind::Voltage, log, &sol), ProtocolError);
    CHECK(gather(sparse, ok, 1, 4, GatherKind::Voltage, log, &sol).has_value());
}

TEST_CASE("partitions promote one coordinator each", "[partition]") {
    const auto g = fixtures::reference_grid();
    const auto sns = all_nodes(g);
    LinkState links(g.branches().size());

    auto one = detect_partitions_and_promote(g, links, sns);
    REQUIRE(one.components.size() == 1);
    CHECK(one.components[0].coordinator == 0);
    CHECK_FALSE(one.components[0].promoted);

    // Cutting N4's parent link isolates {N4, N5, N6, N7, N8}; cutting N5's
    // link to N4 as well leaves the 4-node subtree below N5 and N4 alone.
    links.set_broken(g.parent_branch(5));
    auto two = detect_partitions_and_promote(g, links, sns);
    REQUIRE(two.components.size() == 2);
    CHECK(two.components[1].members == std::vector<NodeId>{5, 6, 7, 8, 9});
    CHECK(two.components[1].coordinator == 5);
    CHECK(two.components[1].promoted);
    CHECK_FALSE(two.components[1].has_pcc);

    links.set_broken(g.parent_branch(6));
    auto three = detect_partitions_and_promote(g, links, sns);
    REQUIRE(three.components.size() == 3);
    CHECK(three.components[2].members == std::vector<NodeId>{6, 7, 8, 9});
    CHECK(three.components[2].coordinator == 6);

    LinkState all(g.branches().size());
    for (BranchId b = 0; b < g.branches().size(); ++b) {
        all.set_broken(b);
    }
    auto alone = detect_partitions_and_promote(g, all, sns);
    REQUIRE(alone.components.size() == g.size());
    for (const auto& c : alone.components) {
        CHECK(c.members.size() == 1);
        CHECK(c.coordinator == c.members.front());
    }
}

TEST_CASE("message logs are deterministic", "[token]") {
    auto run = [] {
        const auto g = fixtures::random_grid(8, 30, 0.3);
        Rng rng(derive_seed(8, 1));
        const auto links = LinkState::random(g.branches().size(), 0.25, rng);
        MessageLog log;
        for (auto& c : detect_partitions_and_promote(g, links, all_nodes(g)).components) {
            for (int k = 0; k < 40; ++k) {
                c.token = pass_token(c.token, g, links, log);
            }
        }
        return log;
    };
    CHECK(run() == run());
}
