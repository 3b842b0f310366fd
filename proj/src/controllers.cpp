#include "mgsim/controllers.hpp"

#include <cmath>
#include <mutex>

#include "mgsim/errors.hpp"

namespace mgsim {

std::string_view to_string(ControlMode mode) {
    return mode == ControlMode::FullCurrent ? "full" : "reactive";
}

ControlMode parse_control_mode(std::string_view text) {
    if (text == "full") {
        return ControlMode::FullCurrent;
    }
    if (text == "reactive") {
        return ControlMode::ReactiveOnly;
    }
    throw ConfigError("unknown control mode '" + std::string(text) + "' (full|reactive)");
}

Phasor project(Phasor x, ControlMode mode) {
    return mode == ControlMode::FullCurrent ? x : Phasor{0.0, x.imag()};
}

Phasor elc_current(Phasor load_s, Phasor u_nominal) {
    if (u_nominal == Phasor{}) {
        throw NumericError("nominal voltage is zero");
    }
    return std::conj(load_s / u_nominal);
}

Phasor lc_current(Phasor load_s, Phasor u_nominal) {
    return {0.0, elc_current(load_s, u_nominal).imag()};
}

Phasor load_feed(const GridTree& grid, NodeId dg, ControlMode mode) {
    const Phasor s = grid.node(dg).load_demand;
    return mode == ControlMode::FullCurrent ? elc_current(s, grid.pcc_voltage())
                                            : lc_current(s, grid.pcc_voltage());
}

ControllerOutcome cbsc_current(const ClusterTable& table, ControlMode mode) {
    Phasor total{};
    for (const auto& [h, c] : table.clusters) {
        if (!(c.path_resistance > 0.0)) {
            throw NumericError("cluster " + std::to_string(c.endpoint_a) + "-" +
                               std::to_string(h) + " has non-positive resistance");
        }
        Phasor weighted{};
        for (const MemberLoad& m : c.member_loads) {
            weighted += m.current * m.resistance_to_b;
        }
        total += weighted / c.path_resistance;
    }
    // Special clusters are fully fed in either mode, so the PCC supplies none
    // of their current.
    Phasor special{};
    for (const Cluster& sc : table.special_clusters) {
        for (const MemberLoad& m : sc.member_loads) {
            special += m.current;
        }
    }
    const bool empty = table.clusters.empty() && table.special_clusters.empty();
    return {project(total, mode) + special, empty};
}

std::optional<Phasor> vbsc_optimal_voltage(const VbscInputs& inputs) {
    Phasor num{};
    double den = 0.0;
    for (const VbscNeighbor& nb : inputs.neighbors) {
        const double r = nb.path_impedance.real();
        if (!(r > 0.0)) {
            throw NumericError("neighbor path needs a positive resistance");
        }
        const double w = r / std::norm(nb.path_impedance);
        num += w * nb.voltage;
        den += w;
    }
    if (inputs.neighbors.empty()) {
        return std::nullopt;
    }
    return num / den;
}

ControllerOutcome vbsc_step(const VbscInputs& inputs, Phasor current_injection, ControlMode mode,
                            double tolerance) {
    if (inputs.thevenin == Phasor{}) {
        throw NumericError("Thevenin impedance is zero");
    }
    const auto target = vbsc_optimal_voltage(inputs);
    if (!target) {
        return {current_injection, true};
    }
    const Phasor delta = project((*target - inputs.own_voltage) / inputs.thevenin, mode);
    return {current_injection + delta, std::abs(delta) < tolerance};
}

namespace {

class LocalController : public Controller {
public:
    explicit LocalController(std::string_view name) : name_(name) {}
    std::string_view name() const override { return name_; }
    bool communicates() const override { return false; }
    ControllerOutcome act(const ControlContext&) override { return {{}, true}; }

private:
    std::string_view name_;
};

class CbscController : public Controller {
public:
    explicit CbscController(bool ec) : ec_(ec) {}
    std::string_view name() const override { return ec_ ? "cbsc-ec" : "cbsc"; }
    bool needs_cluster_tables() const override { return true; }
    bool uses_special_clusters() const override { return ec_; }
    ControllerOutcome act(const ControlContext& ctx) override {
        if (ctx.table == nullptr) {
            throw ParameterError("CBSC needs a cluster table");
        }
        auto out = cbsc_current(*ctx.table, ctx.mode);
        out.converged_hint = std::abs(out.new_injection - ctx.control_injection) < ctx.tolerance;
        return out;
    }

private:
    bool ec_;
};

class VbscController : public Controller {
public:
    std::string_view name() const override { return "vbsc"; }
    bool generators_only() const override { return true; }
    ControllerOutcome act(const ControlContext& ctx) override {
        VbscInputs in;
        in.own_voltage = ctx.own_voltage;
        in.thevenin = thevenin_impedance(*ctx.grid, ctx.dg);
        for (NodeId h : ctx.neighbors) {
            if (auto u = ctx.measure(h)) {
                in.neighbors.push_back({*u, path_impedance(*ctx.grid, ctx.dg, h)});
            }
        }
        return vbsc_step(in, ctx.control_injection, ctx.mode, ctx.tolerance);
    }
};

std::mutex registry_mutex;

std::map<std::string, ControllerFactory>& registry() {
    static std::map<std::string, ControllerFactory> r = {
        {"lc", [] { return std::make_unique<LocalController>("lc"); }},
        {"elc", [] { return std::make_unique<LocalController>("elc"); }},
        {"cbsc", [] { return std::make_unique<CbscController>(false); }},
        {"cbsc-ec", [] { return std::make_unique<CbscController>(true); }},
        {"vbsc", [] { return std::make_unique<VbscController>(); }},
    };
    return r;
}

}  // namespace

void register_controller(const std::string& name, ControllerFactory factory) {
    std::lock_guard lock(registry_mutex);
    registry()[name] = std::move(factory);
}

std::vector<std::string> controller_names() {
    std::lock_guard lock(registry_mutex);
    std::vector<std::string> names;
    for (const auto& [name, f] : registry()) {
        names.push_back(name);
    }
    return names;
}

std::unique_ptr<Controller> make_controller(const std::string& name, ControlMode mode) {
    if (name == "lc" && mode == ControlMode::FullCurrent) {
        throw ConfigError("controller 'lc' only exists in reactive mode (use 'elc' for full)");
    }
    std::lock_guard lock(registry_mutex);
    auto it = registry().find(name);
    if (it == registry().end()) {
        throw ConfigError("unknown controller '" + name + "'");
    }
    return it->second();
}

}  // namespace mgsim
