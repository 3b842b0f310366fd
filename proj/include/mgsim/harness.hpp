#pragma once

// Scenario runner: build a grid, break links, circulate the token and let
// each DG act when it owns it. One optimization step is one DG action.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mgsim/commsim.hpp"
#include "mgsim/controllers.hpp"
#include "mgsim/phasor_grid.hpp"
#include "mgsim/topology_gen.hpp"

namespace mgsim {

using SolveObserver =
    std::function<void(const GridTree&, const InjectionState&, const PowerFlowSolution&)>;

struct ScenarioConfig {
    std::string scenario_id = "default";
    GenParams gen;
    std::string controller = "vbsc";
    ControlMode mode = ControlMode::FullCurrent;
    bool ec_enabled = false;  ///< Turns "cbsc" into "cbsc-ec".
    double broken_link_fraction = 0.0;
    std::size_t replications = 100;
    std::size_t max_steps = 2000;
    std::uint64_t base_seed = 1;
    double tolerance_a = 1e-3;
    std::size_t max_actions_per_dg = 200;

    /// Use this grid instead of generating one (every replication).
    std::optional<GridTree> grid;
    /// Break exactly these branches instead of drawing floor(q * E) of them.
    std::optional<std::vector<BranchId>> scripted_failures;
    /// Called after every power-flow solve.
    SolveObserver on_solve;

    std::string effective_controller() const;
    std::uint64_t seed_for(std::size_t replication) const { return base_seed + replication; }
    /// Throws ConfigError or ParameterError.
    void validate() const;
};

struct MetricsRecord {
    std::string scenario_id;
    std::string controller;
    ControlMode mode = ControlMode::FullCurrent;
    double dg_fraction = 0.0;
    double q = 0.0;
    std::size_t replication = 0;
    std::uint64_t seed = 0;
    std::size_t node_count = 0;
    std::size_t dg_count = 0;

    double initial_loss = 0.0;  ///< No DG injects anything.
    double initial_pcc_w = 0.0;
    std::vector<double> loss_series;  ///< After each step.
    std::vector<double> pcc_series;
    std::vector<std::uint64_t> msgs_series;  ///< Cumulative hops.
    std::vector<double> delta_series;        ///< |change of the acting DG's injection|.
    std::vector<NodeId> actor_series;

    double final_loss = 0.0;
    double pcc_workload = 0.0;
    std::size_t convergence_steps = 0;  ///< Steps needed to get within 5% of the minimum.
    MessageLog messages;
    std::size_t components = 0;
    std::size_t promoted = 0;
};

/// Smallest index s with series[s] <= (1 + fraction) * min(series).
/// Throws ParameterError for an empty series.
std::size_t convergence_steps(const std::vector<double>& series, double fraction = 0.05);

MetricsRecord run_scenario(const ScenarioConfig& cfg, std::size_t replication);
std::vector<MetricsRecord> run_replications(const ScenarioConfig& cfg);

struct Summary {
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0;
    double ci95 = 0.0;  ///< Half-width, normal approximation.
};

Summary summarize(const std::vector<double>& values);

struct SweepPoint {
    std::string parameter;
    double value = 0.0;
    std::vector<MetricsRecord> records;
    Summary final_loss;
    Summary pcc_workload;
    Summary convergence;
};

using SweepTable = std::vector<SweepPoint>;

SweepTable sweep_dg_fraction(const ScenarioConfig& cfg, const std::vector<double>& fractions);
SweepTable sweep_broken_links(const ScenarioConfig& cfg, const std::vector<double>& qs);
/// Sweeps the specific line impedance (Ohm/m); the point value is |z|.
SweepTable sweep_impedance(const ScenarioConfig& cfg, const std::vector<Phasor>& impedances);

struct EcComparison {
    double dg_fraction = 0.0;
    Summary standard_pcc;
    Summary ec_pcc;
    /// (standard - ec) / standard on the mean PCC workload; positive when
    /// enhanced clustering relieves the PCC.
    double gain = 0.0;
};

/// Runs "cbsc" and "cbsc-ec" on the same seeds in cfg.mode.
EcComparison compare_ec(const ScenarioConfig& cfg);

struct CsvRow {
    std::string scenario_id;
    std::size_t replication = 0;
    std::string controller;
    std::string mode;
    double dg_fraction = 0.0;
    double q = 0.0;
    std::size_t step = 0;
    double loss_w = 0.0;
    double pcc_w = 0.0;
    std::uint64_t msgs = 0;

    bool operator==(const CsvRow&) const = default;
};

inline constexpr const char* kCsvHeader =
    "scenario_id,replication,controller,mode,dg_fraction,q,step,loss_w,pcc_w,msgs";

/// Step 0 is the no-injection state, then one row per step.
std::vector<CsvRow> to_rows(const MetricsRecord& record);
void write_csv(std::ostream& out, const std::vector<CsvRow>& rows);
/// Throws FormatError with the offending line number.
std::vector<CsvRow> read_csv(std::istream& in);

/// Throw IoError naming the path.
void emit_csv(const std::vector<MetricsRecord>& records, const std::string& path);
void emit_csv(const SweepTable& table, const std::string& path);
std::vector<CsvRow> load_csv(const std::string& path);

/// One row per sweep point: means and 95% half-widths.
void write_summary_csv(std::ostream& out, const SweepTable& table);

}  // namespace mgsim
