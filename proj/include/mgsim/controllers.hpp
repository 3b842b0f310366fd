#pragma once

// Control laws for the DG injections. Every controller returns the control
// part of the injection; the DG's own load feed (full current, or only its
// reactive part) is added on top by the caller via `load_feed`.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mgsim/clustering.hpp"
#include "mgsim/phasor_grid.hpp"

namespace mgsim {

enum class ControlMode { FullCurrent, ReactiveOnly };

std::string_view to_string(ControlMode mode);
/// "full" or "reactive"; throws ConfigError otherwise.
ControlMode parse_control_mode(std::string_view text);

/// Identity in FullCurrent, 0 + j Im(x) in ReactiveOnly.
Phasor project(Phasor x, ControlMode mode);

/// Reactive part of the load current. Throws NumericError for U = 0.
Phasor lc_current(Phasor load_s, Phasor u_nominal);
/// Full load current conj(S / U). Throws NumericError for U = 0.
Phasor elc_current(Phasor load_s, Phasor u_nominal);

/// What a DG injects for its own load under `mode`.
Phasor load_feed(const GridTree& grid, NodeId dg, ControlMode mode);

struct ControllerOutcome {
    Phasor new_injection{};  ///< Control part only.
    bool converged_hint = false;
};

/// Sum over reachable clusters of (1/R_A,h) sum_i I_i R_h,i, projected by
/// `mode`, plus the full load current of every special cluster.
ControllerOutcome cbsc_current(const ClusterTable& table, ControlMode mode);

struct VbscNeighbor {
    Phasor voltage{};
    Phasor path_impedance{};
};

struct VbscInputs {
    Phasor own_voltage{};
    std::vector<VbscNeighbor> neighbors;  ///< Reachable ones only.
    Phasor thevenin{};
};

/// Resistance-weighted mean of the neighbor voltages with weights
/// R / |Z|^2. nullopt when no neighbor is reachable.
std::optional<Phasor> vbsc_optimal_voltage(const VbscInputs& inputs);

/// One voltage-correction step. Throws NumericError for a zero Thevenin
/// impedance. With no reachable neighbor the injection is left unchanged.
ControllerOutcome vbsc_step(const VbscInputs& inputs, Phasor current_injection, ControlMode mode,
                            double tolerance);

/// Everything a DG may use when it holds the token.
struct ControlContext {
    const GridTree* grid = nullptr;
    NodeId dg = 0;
    ControlMode mode = ControlMode::FullCurrent;
    double tolerance = 1e-3;
    Phasor control_injection{};  ///< Current control part.
    const ClusterTable* table = nullptr;
    std::set<NodeId> neighbors;
    /// Voltage gathered from a neighbor; nullopt if it cannot be reached.
    std::function<std::optional<Phasor>(NodeId)> measure;
    Phasor own_voltage{};
};

class Controller {
public:
    virtual ~Controller() = default;
    virtual std::string_view name() const = 0;
    /// False for purely local controllers; those use no token ring.
    virtual bool communicates() const { return true; }
    virtual bool needs_cluster_tables() const { return false; }
    virtual bool uses_special_clusters() const { return false; }
    /// Only PCC and DGs take part in the token ring, not every node.
    virtual bool generators_only() const { return false; }
    virtual ControllerOutcome act(const ControlContext& ctx) = 0;
};

using ControllerFactory = std::function<std::unique_ptr<Controller>()>;

/// Registers an extra controller under `name`, replacing any earlier one.
void register_controller(const std::string& name, ControllerFactory factory);
std::vector<std::string> controller_names();
/// Throws ConfigError for an unknown name or the invalid pair lc + full.
std::unique_ptr<Controller> make_controller(const std::string& name, ControlMode mode);

}  // namespace mgsim
