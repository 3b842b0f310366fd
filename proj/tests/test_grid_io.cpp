#include <catch_amalgamated.hpp>

#include <sstream>

#include "fixtures.hpp"
#include "mgsim/errors.hpp"
#include "mgsim/grid_io.hpp"

using namespace mgsim;

TEST_CASE("reference grid file matches the published line data", "[io]") {
    const auto g = fixtures::reference_grid();
    REQUIRE(g.size() == 10);
    const double lengths[] = {100, 23, 45, 26, 35, 67, 32, 12, 66};
    for (NodeId v = 1; v < 10; ++v) {
        const auto& b = g.branch(g.parent_branch(v));
        CHECK(b.length_m == lengths[v - 1]);
        CHECK(b.impedance_per_m == Phasor{0.8e-3, 0.8e-3});
    }
    CHECK(g.parent(2) == 1);
    CHECK(g.parent(7) == 6);
    CHECK(g.pcc_voltage() == Phasor{230.0, 0.0});
}

TEST_CASE("write/read round trip is bit exact", "[io]") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto g = fixtures::random_grid(seed, 30, 0.3);
        std::stringstream ss;
        write_grid(ss, g);
        const auto back = read_grid(ss);
        REQUIRE(back.size() == g.size());
        for (NodeId v = 0; v < g.size(); ++v) {
            CHECK(back.node(v).kind == g.node(v).kind);
            CHECK(back.node(v).load_demand == g.node(v).load_demand);
            CHECK(back.node(v).is_smart == g.node(v).is_smart);
            CHECK(back.parent(v) == g.parent(v));
        }
        for (BranchId b = 0; b < g.branches().size(); ++b) {
            CHECK(back.branch(b).length_m == g.branch(b).length_m);
        }
    }
}

TEST_CASE("malformed files report the line", "[io]") {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return read_grid(in);
    };
    const std::string head = "pcc_voltage 230 0\nimpedance_per_m 1e-3 1e-3\n";
    CHECK_THROWS_WITH(parse(head + "node 0 pcc - 0 0 0\nnode 1 lod 0 10 1 1\n"),
                      Catch::Matchers::ContainsSubstring("line 4"));
    CHECK_THROWS_AS(parse(head + "node 0 pcc - 0 0 0\nnode 1 load 0 1x 1 1\n"), FormatError);
    CHECK_THROWS_AS(parse("node 0 pcc - 0 0 0\n"), FormatError);
    CHECK_THROWS_AS(parse(head + "node 0 pcc - 0 0 0\nnode 1 load 5 10 1 1\n"), StructuralError);
    CHECK_THROWS_AS(load_grid("/nonexistent/grid"), IoError);
}
