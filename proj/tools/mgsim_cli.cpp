// Command-line front end: grid generation, single scenarios and the sweeps.
// Every flag can also come from a TOML/INI file given with --config.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mgsim/commsim.hpp"
#include "mgsim/errors.hpp"
#include "mgsim/grid_io.hpp"
#include "mgsim/harness.hpp"
#include "mgsim/text_format.hpp"

namespace {

struct Options {
    mgsim::ScenarioConfig cfg;
    std::vector<std::string> controllers{"vbsc"};
    std::string mode = "full";
    double z_re = 0.08e-3;
    double z_im = 0.08e-3;
    std::string grid_file;
    std::string failure_file;
    std::string out;
    std::string summary;
    std::vector<double> values;
};

mgsim::ScenarioConfig finish(Options& o) {
    mgsim::ScenarioConfig c = o.cfg;
    c.mode = mgsim::parse_control_mode(o.mode);
    c.gen.impedance_per_m = {o.z_re, o.z_im};
    if (!o.grid_file.empty()) {
        c.grid = mgsim::load_grid(o.grid_file);
    }
    if (!o.failure_file.empty()) {
        c.scripted_failures = mgsim::load_failure_list(o.failure_file);
    }
    return c;
}

void write_rows(const Options& o, const std::vector<mgsim::MetricsRecord>& records) {
    if (o.out.empty() || o.out == "-") {
        std::vector<mgsim::CsvRow> rows;
        for (const auto& r : records) {
            auto more = mgsim::to_rows(r);
            rows.insert(rows.end(), more.begin(), more.end());
        }
        mgsim::write_csv(std::cout, rows);
    } else {
        mgsim::emit_csv(records, o.out);
    }
}

void write_summary(const Options& o, const mgsim::SweepTable& table) {
    if (o.summary.empty()) {
        return;
    }
    std::ofstream out(o.summary);
    if (!out) {
        throw mgsim::IoError("cannot write " + o.summary);
    }
    mgsim::write_summary_csv(out, table);
}

void report(const mgsim::SweepTable& table) {
    for (const auto& p : table) {
        const auto& r = p.records.front();
        std::cerr << r.controller << ' ' << to_string(r.mode) << ' ' << p.parameter << '='
                  << mgsim::format_double(p.value) << " loss " << p.final_loss.mean << " +- "
                  << p.final_loss.ci95 << " W, pcc " << p.pcc_workload.mean << " W, steps "
                  << p.convergence.mean << '\n';
    }
}

template <typename Sweep>
void run_sweep(Options& o, Sweep sweep) {
    const mgsim::ScenarioConfig base = finish(o);
    mgsim::SweepTable all;
    for (const auto& name : o.controllers) {
        mgsim::ScenarioConfig c = base;
        c.controller = name;
        c.scenario_id = base.scenario_id + ":" + name;
        auto table = sweep(c);
        all.insert(all.end(), table.begin(), table.end());
    }
    report(all);
    std::vector<mgsim::MetricsRecord> records;
    for (const auto& p : all) {
        records.insert(records.end(), p.records.begin(), p.records.end());
    }
    write_rows(o, records);
    write_summary(o, all);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Micro-grid loss-minimization co-simulator"};
    app.set_config("--config", "", "Read options from a TOML/INI file");
    app.require_subcommand(1);
    app.fallthrough();

    Options o;
    auto& g = o.cfg.gen;
    app.add_option("--scenario-id", o.cfg.scenario_id, "Label written to the CSV")
        ->capture_default_str();
    app.add_option("--nodes", g.n_nodes, "Number of nodes including the PCC")->capture_default_str();
    app.add_option("--rewiring", g.rewiring_p, "Rewiring probability")->capture_default_str();
    app.add_option("--line-length", g.mean_line_length_m, "Mean line length (m)")
        ->capture_default_str();
    app.add_option("--z-re", o.z_re, "Line resistance per meter (Ohm/m)")->capture_default_str();
    app.add_option("--z-im", o.z_im, "Line reactance per meter (Ohm/m)")->capture_default_str();
    app.add_option("--dg-fraction", g.dg_fraction, "Fraction of non-PCC nodes that are DGs")
        ->capture_default_str();
    app.add_option("--s-min", g.load_s_min_va, "Smallest load (VA)")->capture_default_str();
    app.add_option("--s-max", g.load_s_max_va, "Largest load (VA)")->capture_default_str();
    app.add_option("--pf-min", g.load_pf_min, "Smallest power factor")->capture_default_str();
    app.add_option("--pf-max", g.load_pf_max, "Largest power factor")->capture_default_str();
    app.add_option("--seed", o.cfg.base_seed, "Base seed; replication k uses seed + k")
        ->capture_default_str();
    app.add_option("--controller", o.controllers, "lc, elc, cbsc, cbsc-ec or vbsc (repeatable)")
        ->capture_default_str();
    app.add_option("--mode", o.mode, "full or reactive")->capture_default_str();
    app.add_flag("--ec", o.cfg.ec_enabled, "Enable enhanced clustering for cbsc");
    app.add_option("--q", o.cfg.broken_link_fraction, "Fraction of broken links")
        ->capture_default_str();
    app.add_option("--replications", o.cfg.replications, "Replications per point")
        ->capture_default_str();
    app.add_option("--max-steps", o.cfg.max_steps, "Step limit per run")->capture_default_str();
    app.add_option("--tolerance", o.cfg.tolerance_a, "Convergence tolerance (A)")
        ->capture_default_str();
    app.add_option("--grid", o.grid_file, "Use this grid file instead of generating grids");
    app.add_option("--failures", o.failure_file, "File listing branch ids to break");
    app.add_option("--out", o.out, "Output file (default: stdout)");
    app.add_option("--summary", o.summary, "Per-point summary CSV (sweeps)");

    auto* generate = app.add_subcommand("generate", "Write one random grid file");
    auto* run = app.add_subcommand("run", "Run replications of one scenario per controller");
    auto* sweep_dg = app.add_subcommand("sweep-dg", "Sweep the DG fraction");
    auto* sweep_links = app.add_subcommand("sweep-links", "Sweep the broken-link fraction");
    auto* sweep_z = app.add_subcommand(
        "sweep-impedance", "Sweep the line resistance per meter, keeping the X/R ratio");
    auto* compare = app.add_subcommand("compare-ec", "PCC workload gain of enhanced clustering");
    for (auto* sub : {sweep_dg, sweep_links, sweep_z, compare}) {
        sub->add_option("--values", o.values, "Sweep points")->required()->delimiter(',');
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*generate) {
            mgsim::GenParams p = finish(o).gen;
            p.seed = o.cfg.base_seed;
            const auto grid = mgsim::generate_grid(p);
            if (o.out.empty() || o.out == "-") {
                mgsim::write_grid(std::cout, grid);
            } else {
                mgsim::save_grid(o.out, grid);
            }
        } else if (*run) {
            const mgsim::ScenarioConfig base = finish(o);
            std::vector<mgsim::MetricsRecord> records;
            for (const auto& name : o.controllers) {
                mgsim::ScenarioConfig c = base;
                c.controller = name;
                auto more = mgsim::run_replications(c);
                std::vector<double> loss;
                for (const auto& r : more) {
                    loss.push_back(r.final_loss);
                }
                const auto s = mgsim::summarize(loss);
                std::cerr << c.effective_controller() << ' ' << o.mode << " loss " << s.mean
                          << " +- " << s.ci95 << " W over " << s.n << " runs\n";
                records.insert(records.end(), more.begin(), more.end());
            }
            write_rows(o, records);
        } else if (*sweep_dg) {
            run_sweep(o, [&](const mgsim::ScenarioConfig& c) {
                return mgsim::sweep_dg_fraction(c, o.values);
            });
        } else if (*sweep_links) {
            run_sweep(o, [&](const mgsim::ScenarioConfig& c) {
                return mgsim::sweep_broken_links(c, o.values);
            });
        } else if (*sweep_z) {
            const double ratio = o.z_im / o.z_re;
            std::vector<mgsim::Phasor> zs;
            for (double v : o.values) {
                zs.emplace_back(v, v * ratio);
            }
            run_sweep(o, [&](const mgsim::ScenarioConfig& c) {
                return mgsim::sweep_impedance(c, zs);
            });
        } else if (*compare) {
            const mgsim::ScenarioConfig base = finish(o);
            std::ostringstream table;
            table << "dg_fraction,standard_pcc_w,standard_ci95,ec_pcc_w,ec_ci95,gain\n";
            for (double f : o.values) {
                mgsim::ScenarioConfig c = base;
                c.gen.dg_fraction = f;
                const auto r = mgsim::compare_ec(c);
                table << mgsim::format_double(f) << ',' << mgsim::format_double(r.standard_pcc.mean)
                      << ',' << mgsim::format_double(r.standard_pcc.ci95) << ','
                      << mgsim::format_double(r.ec_pcc.mean) << ','
                      << mgsim::format_double(r.ec_pcc.ci95) << ','
                      << mgsim::format_double(r.gain) << '\n';
            }
            if (o.out.empty() || o.out == "-") {
                std::cout << table.str();
            } else {
                std::ofstream out(o.out);
                if (!(out << table.str())) {
                    throw mgsim::IoError("cannot write " + o.out);
                }
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "mgsim: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
