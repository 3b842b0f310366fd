#include "mgsim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "mgsim/clustering.hpp"
#include "mgsim/errors.hpp"
#include "mgsim/text_format.hpp"

namespace mgsim {

std::string ScenarioConfig::effective_controller() const {
    return controller == "cbsc" && ec_enabled ? "cbsc-ec" : controller;
}

void ScenarioConfig::validate() const {
    if (scenario_id.empty() || scenario_id.find_first_of(",\"\r\n") != std::string::npos) {
        throw ConfigError("scenario_id must be non-empty and free of commas, quotes and newlines");
    }
    if (!grid) {
        gen.validate();
    }
    if (ec_enabled && controller != "cbsc" && controller != "cbsc-ec") {
        throw ConfigError("enhanced clustering only applies to cbsc");
    }
    make_controller(effective_controller(), mode);
    if (!(broken_link_fraction >= 0.0 && broken_link_fraction <= 1.0)) {
        throw ConfigError("broken link fraction must be in [0, 1]");
    }
    if (replications == 0) {
        throw ConfigError("replications must be positive");
    }
    if (max_steps == 0 || max_actions_per_dg == 0) {
        throw ConfigError("step limits must be positive");
    }
    if (!(tolerance_a > 0.0)) {
        throw ConfigError("tolerance must be positive");
    }
}

std::size_t convergence_steps(const std::vector<double>& series, double fraction) {
    if (series.empty()) {
        throw ParameterError("convergence_steps of an empty series");
    }
    const double limit = (1.0 + fraction) * *std::min_element(series.begin(), series.end());
    for (std::size_t s = 0; s < series.size(); ++s) {
        if (series[s] <= limit) {
            return s;
        }
    }
    return series.size() - 1;
}

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

struct Ring {
    TokenState token;
    std::size_t component = kNone;  ///< kNone for the local scheduler.
};

}  // namespace

MetricsRecord run_scenario(const ScenarioConfig& cfg, std::size_t replication) {
    cfg.validate();
    const std::uint64_t seed = cfg.seed_for(replication);
    GridTree grid = [&] {
        if (cfg.grid) {
            return *cfg.grid;
        }
        GenParams g = cfg.gen;
        g.seed = seed;
        return generate_grid(g);
    }();
    const std::string name = cfg.effective_controller();
    auto controller = make_controller(name, cfg.mode);

    LinkState links;
    if (cfg.scripted_failures) {
        links = LinkState::from_ids(grid.branches().size(), *cfg.scripted_failures);
    } else {
        Rng rng(derive_seed(seed, 1));
        links = LinkState::random(grid.branches().size(), cfg.broken_link_fraction, rng);
    }

    MetricsRecord rec;
    rec.scenario_id = cfg.scenario_id;
    rec.controller = name;
    rec.mode = cfg.mode;
    rec.dg_fraction = cfg.gen.dg_fraction;
    rec.q = cfg.broken_link_fraction;
    rec.replication = replication;
    rec.seed = seed;
    rec.node_count = grid.size();
    const auto dgs = grid.dg_nodes();
    rec.dg_count = dgs.size();

    InjectionState inj;
    auto solve = [&] {
        PowerFlowSolution sol = solve_power_flow(grid, inj);
        if (cfg.on_solve) {
            cfg.on_solve(grid, inj, sol);
        }
        return sol;
    };
    const PowerFlowSolution initial = solve();
    rec.initial_loss = initial.total_loss;
    rec.initial_pcc_w = pcc_workload(initial);

    MessageLog& log = rec.messages;
    std::vector<Ring> rings;
    std::vector<NodeId> acting;
    PartitionResult parts;
    std::map<NodeId, ClusterTable> tables;
    if (controller->communicates()) {
        std::vector<NodeId> sns;
        for (NodeId v : grid.smart_nodes()) {
            if (!controller->generators_only() || grid.is_terminal(v)) {
                sns.push_back(v);
            }
        }
        if (!sns.empty()) {
            parts = detect_partitions_and_promote(grid, links, sns);
            for (std::size_t c = 0; c < parts.components.size(); ++c) {
                rings.push_back(Ring{parts.components[c].token, c});
                rec.promoted += parts.components[c].promoted ? 1 : 0;
            }
            rec.components = parts.components.size();
        }
        for (NodeId d : dgs) {
            if (grid.node(d).is_smart) {
                acting.push_back(d);
            }
        }
        if (controller->needs_cluster_tables()) {
            for (NodeId d : acting) {
                tables.emplace(d, build_cluster_table(grid, d, links, log));
            }
            if (controller->uses_special_clusters()) {
                attach_special_clusters(grid, links, find_special_clusters(grid), tables);
            }
        }
    } else {
        acting = dgs;
        std::vector<NodeId> order;
        for (NodeId v : grid.preorder()) {
            if (grid.is_dg(v)) {
                order.push_back(v);
            }
        }
        if (!order.empty()) {
            rings.push_back(Ring{make_token_state(grid, order), kNone});
        }
    }

    std::map<NodeId, Phasor> control;
    std::map<NodeId, double> last_delta;
    std::map<NodeId, std::size_t> actions;
    for (NodeId d : acting) {
        control[d] = {};
        last_delta[d] = std::numeric_limits<double>::infinity();
        actions[d] = 0;
    }
    auto finished = [&] {
        return std::all_of(acting.begin(), acting.end(), [&](NodeId d) {
            return last_delta[d] < cfg.tolerance_a || actions[d] >= cfg.max_actions_per_dg;
        });
    };

    auto act = [&](NodeId d, std::size_t component) {
        const Phasor old = inj.get(d);
        const Phasor feed = load_feed(grid, d, cfg.mode);
        ControlContext ctx;
        ctx.grid = &grid;
        ctx.dg = d;
        ctx.mode = cfg.mode;
        ctx.tolerance = cfg.tolerance_a;
        ctx.control_injection = control[d];
        if (auto it = tables.find(d); it != tables.end()) {
            ctx.table = &it->second;
            for (const auto& [h, c] : it->second.clusters) {
                gather(grid, links, d, h, GatherKind::Data, log);
            }
        }
        PowerFlowSolution measured;
        if (controller->generators_only()) {
            // The DG measures with its own load feed already engaged.
            inj.set(d, feed + control[d]);
            measured = solve();
            ctx.own_voltage = measured.node_voltage[d];
            ctx.neighbors = discover_neighbors(grid, d);
            const CommComponent* comp =
                component == kNone ? nullptr : &parts.components[component];
            ctx.measure = [&, comp](NodeId h) -> std::optional<Phasor> {
                if (grid.node(h).is_smart) {
                    if (auto r = gather(grid, links, d, h, GatherKind::Voltage, log, &measured)) {
                        return r->dst_voltage;
                    }
                }
                // A promoted coordinator keeps the pre-failure PCC voltage as
                // the reference for its island.
                if (h == grid.root() && comp != nullptr && !comp->has_pcc &&
                    comp->members.size() >= 2) {
                    return grid.pcc_voltage();
                }
                return std::nullopt;
            };
        }
        const ControllerOutcome out = controller->act(ctx);
        control[d] = out.new_injection;
        const Phasor now = feed + control[d];
        inj.set(d, now);
        last_delta[d] = std::abs(now - old);
        actions[d] += 1;

        const PowerFlowSolution sol = solve();
        rec.loss_series.push_back(sol.total_loss);
        rec.pcc_series.push_back(pcc_workload(sol));
        rec.msgs_series.push_back(log.total_hops());
        rec.delta_series.push_back(last_delta[d]);
        rec.actor_series.push_back(d);
    };

    std::size_t longest = 0;
    for (const Ring& r : rings) {
        longest = std::max(longest, r.token.sn_count);
    }
    std::size_t idle = 0;
    std::size_t steps = 0;
    while (!acting.empty() && steps < cfg.max_steps && !finished() && idle <= longest) {
        bool acted = false;
        for (Ring& r : rings) {
            const NodeId owner = r.token.owner_node();
            if (r.component != kNone && parts.component_of[owner] != r.component) {
                throw ProtocolError("token owner " + std::to_string(owner) +
                                    " left its component");
            }
            if (actions.contains(owner) && actions[owner] < cfg.max_actions_per_dg) {
                act(owner, r.component);
                acted = true;
                if (++steps >= cfg.max_steps || finished()) {
                    break;
                }
            }
            if (r.component == kNone) {
                r.token.owner = next_owner(r.token.owner, r.token.sn_count);
            } else {
                r.token = pass_token(r.token, grid, links, log);
            }
        }
        idle = acted ? 0 : idle + 1;
    }

    rec.final_loss = rec.loss_series.empty() ? rec.initial_loss : rec.loss_series.back();
    rec.pcc_workload = rec.pcc_series.empty() ? rec.initial_pcc_w : rec.pcc_series.back();
    rec.convergence_steps = rec.loss_series.empty() ? 0 : convergence_steps(rec.loss_series) + 1;
    return rec;
}

std::vector<MetricsRecord> run_replications(const ScenarioConfig& cfg) {
    cfg.validate();
    std::vector<MetricsRecord> out;
    out.reserve(cfg.replications);
    for (std::size_t k = 0; k < cfg.replications; ++k) {
        out.push_back(run_scenario(cfg, k));
    }
    return out;
}

Summary summarize(const std::vector<double>& values) {
    Summary s;
    s.n = values.size();
    if (s.n == 0) {
        return s;
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    s.mean = sum / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - s.mean) * (v - s.mean);
        }
        s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
        s.ci95 = 1.96 * s.sd / std::sqrt(static_cast<double>(s.n));
    }
    return s;
}

namespace {

SweepPoint make_point(std::string parameter, double value, std::vector<MetricsRecord> records) {
    SweepPoint p;
    p.parameter = std::move(parameter);
    p.value = value;
    std::vector<double> loss, pcc, conv;
    for (const auto& r : records) {
        loss.push_back(r.final_loss);
        pcc.push_back(r.pcc_workload);
        conv.push_back(static_cast<double>(r.convergence_steps));
    }
    p.final_loss = summarize(loss);
    p.pcc_workload = summarize(pcc);
    p.convergence = summarize(conv);
    p.records = std::move(records);
    return p;
}

template <typename T, typename Apply>
SweepTable sweep(const ScenarioConfig& cfg, const std::string& parameter,
                 const std::vector<T>& values, Apply apply) {
    SweepTable table;
    for (const T& v : values) {
        ScenarioConfig c = cfg;
        const double x = apply(c, v);
        c.scenario_id = cfg.scenario_id + ":" + parameter + "=" + format_double(x);
        table.push_back(make_point(parameter, x, run_replications(c)));
    }
    return table;
}

}  // namespace

SweepTable sweep_dg_fraction(const ScenarioConfig& cfg, const std::vector<double>& fractions) {
    return sweep(cfg, "dg_fraction", fractions, [](ScenarioConfig& c, double f) {
        c.gen.dg_fraction = f;
        return f;
    });
}

SweepTable sweep_broken_links(const ScenarioConfig& cfg, const std::vector<double>& qs) {
    return sweep(cfg, "q", qs, [](ScenarioConfig& c, double q) {
        c.broken_link_fraction = q;
        return q;
    });
}

SweepTable sweep_impedance(const ScenarioConfig& cfg, const std::vector<Phasor>& impedances) {
    return sweep(cfg, "impedance", impedances, [](ScenarioConfig& c, Phasor z) {
        c.gen.impedance_per_m = z;
        if (c.grid) {
            c.grid = c.grid->with_impedance_per_m(z);
        }
        return std::abs(z);
    });
}

EcComparison compare_ec(const ScenarioConfig& cfg) {
    ScenarioConfig standard = cfg;
    standard.controller = "cbsc";
    standard.ec_enabled = false;
    ScenarioConfig enhanced = standard;
    enhanced.controller = "cbsc-ec";
    auto pcc = [](const std::vector<MetricsRecord>& records) {
        std::vector<double> v;
        for (const auto& r : records) {
            v.push_back(r.pcc_workload);
        }
        return summarize(v);
    };
    EcComparison out;
    out.dg_fraction = cfg.gen.dg_fraction;
    out.standard_pcc = pcc(run_replications(standard));
    out.ec_pcc = pcc(run_replications(enhanced));
    out.gain = out.standard_pcc.mean == 0.0
                   ? 0.0
                   : (out.standard_pcc.mean - out.ec_pcc.mean) / out.standard_pcc.mean;
    return out;
}

std::vector<CsvRow> to_rows(const MetricsRecord& r) {
    std::vector<CsvRow> rows;
    CsvRow base{r.scenario_id, r.replication, r.controller, std::string(to_string(r.mode)),
                r.dg_fraction, r.q, 0, r.initial_loss, r.initial_pcc_w, 0};
    rows.push_back(base);
    for (std::size_t s = 0; s < r.loss_series.size(); ++s) {
        base.step = s + 1;
        base.loss_w = r.loss_series[s];
        base.pcc_w = r.pcc_series[s];
        base.msgs = r.msgs_series[s];
        rows.push_back(base);
    }
    return rows;
}

void write_csv(std::ostream& out, const std::vector<CsvRow>& rows) {
    out << kCsvHeader << '\n';
    for (const CsvRow& r : rows) {
        out << r.scenario_id << ',' << r.replication << ',' << r.controller << ',' << r.mode << ','
            << format_double(r.dg_fraction) << ',' << format_double(r.q) << ',' << r.step << ','
            << format_double(r.loss_w) << ',' << format_double(r.pcc_w) << ',' << r.msgs << '\n';
    }
}

std::vector<CsvRow> read_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw FormatError("line 1: expected header '" + std::string(kCsvHeader) + "'");
    }
    std::vector<CsvRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            f.push_back(cell);
        }
        if (f.size() != 10) {
            throw FormatError("line " + std::to_string(line_no) + ": expected 10 fields, got " +
                              std::to_string(f.size()));
        }
        try {
            rows.push_back(CsvRow{f[0], parse_unsigned(f[1]), f[2], f[3], parse_double(f[4]),
                                  parse_double(f[5]), parse_unsigned(f[6]), parse_double(f[7]),
                                  parse_double(f[8]), parse_unsigned(f[9])});
        } catch (const FormatError& e) {
            throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path);
    }
    return out;
}

void check_written(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) {
        throw IoError("write failed: " + path);
    }
}

}  // namespace

void emit_csv(const std::vector<MetricsRecord>& records, const std::string& path) {
    std::vector<CsvRow> rows;
    for (const auto& r : records) {
        auto more = to_rows(r);
        rows.insert(rows.end(), more.begin(), more.end());
    }
    auto out = open_out(path);
    write_csv(out, rows);
    check_written(out, path);
}

void emit_csv(const SweepTable& table, const std::string& path) {
    std::vector<MetricsRecord> all;
    for (const auto& p : table) {
        all.insert(all.end(), p.records.begin(), p.records.end());
    }
    emit_csv(all, path);
}

std::vector<CsvRow> load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    try {
        return read_csv(in);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

void write_summary_csv(std::ostream& out, const SweepTable& table) {
    out << "scenario_id,controller,mode,parameter,value,n,loss_mean,loss_ci95,pcc_mean,pcc_ci95,"
           "conv_mean,conv_ci95\n";
    for (const SweepPoint& p : table) {
        const MetricsRecord* first = p.records.empty() ? nullptr : &p.records.front();
        out << (first ? first->scenario_id : "") << ',' << (first ? first->controller : "") << ','
            << (first ? to_string(first->mode) : "") << ',' << p.parameter << ','
            << format_double(p.value) << ',' << p.final_loss.n << ','
            << format_double(p.final_loss.mean) << ',' << format_double(p.final_loss.ci95) << ','
            << format_double(p.pcc_workload.mean) << ',' << format_double(p.pcc_workload.ci95)
            << ',' << format_double(p.convergence.mean) << ','
            << format_double(p.convergence.ci95) << '\n';
    }
}

}  // namespace mgsim
