#include <catch_amalgamated.hpp>

#include <cmath>

#include "fixtures.hpp"
#include "mgsim/clustering.hpp"
#include "mgsim/controllers.hpp"
#include "mgsim/errors.hpp"
#include "oracles.hpp"

using namespace mgsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("local compensation currents", "[controllers]") {
    const Phasor u{230.0, 0.0};
    CHECK(lc_current({3000.0, 0.0}, u) == Phasor{});
    CHECK(std::abs(lc_current({0.0, 2300.0}, u) - Phasor{0.0, -10.0}) < 1e-12);
    CHECK(std::abs(elc_current({2300.0, 2300.0}, u) - Phasor{10.0, -10.0}) < 1e-12);
    CHECK(elc_current({}, u) == Phasor{});
    CHECK_THAT(std::abs(elc_current({4000.0, 3000.0}, u)), WithinRel(5000.0 / 230.0, 1e-12));
    CHECK_THROWS_AS(lc_current({1, 1}, {}), NumericError);
    CHECK_THROWS_AS(elc_current({1, 1}, {}), NumericError);
    CHECK(project({3.0, -4.0}, ControlMode::ReactiveOnly) == Phasor{0.0, -4.0});
    CHECK(project({3.0, -4.0}, ControlMode::FullCurrent) == Phasor{3.0, -4.0});
}

TEST_CASE("LC feed leaves only active current in the branch", "[controllers]") {
    const auto g = fixtures::line({NodeKind::DgWithLoad}, {{1500.0, 2300.0}}, {10.0});
    InjectionState inj;
    inj.set(1, load_feed(g, 1, ControlMode::ReactiveOnly));
    CHECK(std::abs(solve_power_flow(g, inj).branch_current[0].imag()) < 1e-12);
    inj.set(1, load_feed(g, 1, ControlMode::FullCurrent));
    CHECK(std::abs(solve_power_flow(g, inj).branch_current[0]) < 1e-12);
}

TEST_CASE("CBSC on the two-branch example", "[controllers][cbsc]") {
    // PCC -(1 Ohm)- L1 -(1 Ohm)- G_A with a 10 A load at L1.
    const auto g = fixtures::line({NodeKind::LoadOnly, NodeKind::DgWithLoad},
                                  {{2300.0, 0.0}, {0.0, 0.0}}, {1.0, 1.0});
    LinkState links(g.branches().size());
    MessageLog log;
    const auto t = build_cluster_table(g, 2, links, log);
    const auto out = cbsc_current(t, ControlMode::FullCurrent);
    CHECK_THAT(out.new_injection.real(), WithinRel(5.0, 1e-12));
    CHECK_THAT(out.new_injection.imag(), WithinAbs(0.0, 1e-12));
    // (10 - x)^2 + x^2 is smallest at x = 5.
    for (double x : {4.9, 5.1}) {
        InjectionState inj;
        inj.set(2, {x, 0.0});
        InjectionState best;
        best.set(2, out.new_injection);
        CHECK(solve_power_flow(g, best).total_loss < solve_power_flow(g, inj).total_loss);
    }
}

TEST_CASE("CBSC projects pairwise clusters but fully feeds special clusters",
          "[controllers][cbsc]") {
    ClusterTable t;
    Cluster pair;
    pair.endpoint_a = 1;
    pair.endpoint_b = 0;
    pair.path_resistance = 2.0;
    pair.member_loads = {{3, {4.0, -2.0}, 1.0}};
    t.clusters.emplace(0, pair);
    Cluster special;
    special.endpoint_a = 1;
    special.member_loads = {{5, {6.0, -3.0}, 0.5}, {6, {1.0, -1.0}, 0.7}};
    t.special_clusters.push_back(special);

    const Phasor pairwise{2.0, -1.0};
    const Phasor fed{7.0, -4.0};
    const auto full = cbsc_current(t, ControlMode::FullCurrent);
    CHECK(std::abs(full.new_injection - (pairwise + fed)) < 1e-12);
    const auto reactive = cbsc_current(t, ControlMode::ReactiveOnly);
    CHECK(std::abs(reactive.new_injection - (Phasor{0.0, -1.0} + fed)) < 1e-12);
}

TEST_CASE("CBSC degenerate tables", "[controllers][cbsc]") {
    ClusterTable empty;
    const auto none = cbsc_current(empty, ControlMode::FullCurrent);
    CHECK(none.new_injection == Phasor{});
    CHECK(none.converged_hint);

    const auto g = fixtures::line({NodeKind::LoadOnly, NodeKind::DgWithLoad},
                                  {{0.0, 0.0}, {500.0, 100.0}}, {3.0, 2.0});
    LinkState links(g.branches().size());
    MessageLog log;
    CHECK(cbsc_current(build_cluster_table(g, 2, links, log), ControlMode::FullCurrent)
              .new_injection == Phasor{});

    const auto adjacent = fixtures::line({NodeKind::DgWithLoad}, {{500.0, 100.0}}, {3.0});
    const auto t = build_cluster_table(adjacent, 1, LinkState(1), log);
    CHECK(t.clusters.at(0).member_loads.empty());
    CHECK(cbsc_current(t, ControlMode::FullCurrent).new_injection == Phasor{});
}

TEST_CASE("CBSC matches the exact quadratic minimizer on random lines", "[controllers][cbsc][oracle]") {
    Rng rng(77);
    for (int rep = 0; rep < 60; ++rep) {
        const std::size_t loads = 1 + rng.below(8);
        std::vector<NodeKind> kinds(loads, NodeKind::LoadOnly);
        kinds.push_back(NodeKind::DgWithLoad);
        std::vector<Phasor> s;
        std::vector<double> len;
        for (std::size_t i = 0; i <= loads; ++i) {
            s.emplace_back(rng.uniform(500, 8000), rng.uniform(0, 5000));
            len.push_back(rng.uniform(5, 60));
        }
        const Phasor z{rng.uniform(0.05e-3, 1e-3), rng.uniform(0.0, 1e-3)};
        const auto g = fixtures::line(kinds, s, len, z);
        const NodeId dg = static_cast<NodeId>(loads + 1);

        // Every branch current is D_b - y for total DG injection y, so the
        // loss sum R_b |D_b - y|^2 is minimized by the R-weighted mean of D_b.
        const auto base = oracle::nodal_solve(g, std::vector<Phasor>(g.size()));
        Phasor num{};
        double den = 0.0;
        for (const auto& br : g.branches()) {
            const Phasor zb = br.length_m * br.impedance_per_m;
            const Phasor d = (base.voltage[br.parent] - base.voltage[br.child]) / zb;
            num += zb.real() * d;
            den += zb.real();
        }
        const Phasor y_star = num / den;

        MessageLog log;
        const auto t = build_cluster_table(g, dg, LinkState(g.branches().size()), log);
        const Phasor y = load_feed(g, dg, ControlMode::FullCurrent) +
                         cbsc_current(t, ControlMode::FullCurrent).new_injection;
        CHECK(std::abs(y - y_star) / std::abs(y_star) < 1e-9);
    }
}

TEST_CASE("VBSC target voltage", "[controllers][vbsc]") {
    const Phasor z{0.3, 0.2};
    VbscInputs one{{229.0, 0.0}, {{{227.5, -1.0}, z}}, z};
    CHECK(std::abs(*vbsc_optimal_voltage(one) - Phasor{227.5, -1.0}) < 1e-12);

    VbscInputs two{{229.0, 0.0}, {{{230.0, 0.0}, z}, {{228.0, 0.0}, z}}, z};
    CHECK_THAT(vbsc_optimal_voltage(two)->real(), WithinRel(229.0, 1e-15));

    // Weights R/|Z|^2: doubling Z halves the weight, so the target is
    // (1 * 230 + 2 * 227) / 3 = 228.
    VbscInputs skew{{229.0, 0.0}, {{{230.0, 0.0}, 2.0 * z}, {{227.0, 0.0}, z}}, z};
    CHECK_THAT(vbsc_optimal_voltage(skew)->real(), WithinRel(228.0, 1e-14));

    VbscInputs alone{{229.0, 0.0}, {}, z};
    CHECK_FALSE(vbsc_optimal_voltage(alone).has_value());
    const auto idle = vbsc_step(alone, {3.0, 1.0}, ControlMode::FullCurrent, 1e-3);
    CHECK(idle.new_injection == Phasor{3.0, 1.0});
}

TEST_CASE("VBSC step", "[controllers][vbsc]") {
    const Phasor z{0.3, 0.2};
    VbscInputs fixed{{229.0, 1.0}, {{{229.0, 1.0}, z}}, z};
    const auto still = vbsc_step(fixed, {2.0, 0.0}, ControlMode::FullCurrent, 1e-3);
    CHECK(std::abs(still.new_injection - Phasor{2.0, 0.0}) < 1e-12);
    CHECK(still.converged_hint);

    VbscInputs far{{225.0, 0.0}, {{{230.0, 0.0}, z}}, z};
    const auto full = vbsc_step(far, {}, ControlMode::FullCurrent, 1e-3);
    CHECK(std::abs(full.new_injection - Phasor{5.0, 0.0} / z) < 1e-12);
    const auto reactive = vbsc_step(far, {}, ControlMode::ReactiveOnly, 1e-3);
    CHECK(reactive.new_injection.real() == 0.0);
    CHECK_THAT(reactive.new_injection.imag(), WithinRel((Phasor{5.0, 0.0} / z).imag(), 1e-12));

    VbscInputs short_circuit{{225.0, 0.0}, {{{230.0, 0.0}, z}}, {}};
    CHECK_THROWS_AS(vbsc_step(short_circuit, {}, ControlMode::FullCurrent, 1e-3), NumericError);
}

TEST_CASE("VBSC drives a lone DG to the PCC voltage", "[controllers][vbsc]") {
    const auto g = fixtures::line({NodeKind::LoadOnly, NodeKind::DgWithLoad},
                                  {{4000.0, 2000.0}, {3000.0, 1000.0}}, {25.0, 40.0},
                                  {0.5e-3, 0.4e-3});
    InjectionState inj;
    Phasor control{};
    double last_loss = solve_power_flow(g, inj).total_loss;
    double last_gap = std::abs(solve_power_flow(g, inj).node_voltage[2] - g.pcc_voltage());
    for (int step = 0; step < 5; ++step) {
        const auto sol = solve_power_flow(g, inj);
        VbscInputs in{sol.node_voltage[2], {{sol.node_voltage[0], path_impedance(g, 2, 0)}},
                      thevenin_impedance(g, 2)};
        control = vbsc_step(in, control, ControlMode::FullCurrent, 1e-3).new_injection;
        inj.set(2, control);
        const auto after = solve_power_flow(g, inj);
        const double gap = std::abs(after.node_voltage[2] - g.pcc_voltage());
        CHECK(after.total_loss <= last_loss + 1e-9);
        CHECK(gap <= last_gap + 1e-12);
        last_loss = after.total_loss;
        last_gap = gap;
    }
    CHECK(last_gap < 1e-3);
}

namespace {

class Idle : public Controller {
public:
    std::string_view name() const override { return "idle"; }
    ControllerOutcome act(const ControlContext& ctx) override {
        return {ctx.control_injection, true};
    }
};

}  // namespace

TEST_CASE("controller registry", "[controllers]") {
    CHECK(make_controller("elc", ControlMode::FullCurrent)->name() == "elc");
    CHECK(make_controller("lc", ControlMode::ReactiveOnly)->name() == "lc");
    CHECK(make_controller("cbsc-ec", ControlMode::FullCurrent)->uses_special_clusters());
    CHECK(make_controller("vbsc", ControlMode::FullCurrent)->generators_only());
    CHECK_FALSE(make_controller("elc", ControlMode::FullCurrent)->communicates());
    CHECK_THROWS_AS(make_controller("lc", ControlMode::FullCurrent), ConfigError);
    CHECK_THROWS_AS(make_controller("dorpf", ControlMode::FullCurrent), ConfigError);
    register_controller("idle", [] { return std::make_unique<Idle>(); });
    CHECK(make_controller("idle", ControlMode::FullCurrent)->name() == "idle");
    CHECK(parse_control_mode("reactive") == ControlMode::ReactiveOnly);
    CHECK_THROWS_AS(parse_control_mode("half"), ConfigError);
}
