#include "mgsim/grid_io.hpp"

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mgsim/errors.hpp"
#include "mgsim/text_format.hpp"

namespace mgsim {

namespace {

NodeKind parse_kind(const std::string& s) {
    if (s == "pcc") return NodeKind::Pcc;
    if (s == "load") return NodeKind::LoadOnly;
    if (s == "dg") return NodeKind::DgWithLoad;
    if (s == "junction") return NodeKind::Junction;
    throw FormatError("unknown node kind '" + s + "'");
}

struct NodeRecord {
    GridNode node;
    std::optional<NodeId> parent;
    double length_m = 0.0;
};

}  // namespace

void write_grid(std::ostream& out, const GridTree& grid) {
    Phasor z{};
    if (!grid.branches().empty()) {
        z = grid.branches().front().impedance_per_m;
        for (const Branch& b : grid.branches()) {
            if (b.impedance_per_m != z) {
                throw ParameterError("grid file format needs a uniform impedance per meter");
            }
        }
    }
    out << "# mgsim grid\n";
    out << "pcc_voltage " << format_double(grid.pcc_voltage().real()) << ' '
        << format_double(grid.pcc_voltage().imag()) << '\n';
    out << "impedance_per_m " << format_double(z.real()) << ' ' << format_double(z.imag())
        << '\n';
    out << "# node id kind parent length_m load_re load_im smart\n";
    for (const GridNode& nd : grid.nodes()) {
        out << "node " << nd.id << ' ' << to_string(nd.kind) << ' ';
        if (nd.id == grid.root()) {
            out << "- 0";
        } else {
            const Branch& b = grid.branch(grid.parent_branch(nd.id));
            out << b.parent << ' ' << format_double(b.length_m);
        }
        out << ' ' << format_double(nd.load_demand.real()) << ' '
            << format_double(nd.load_demand.imag()) << ' ' << (nd.is_smart ? 1 : 0) << '\n';
    }
}

GridTree read_grid(std::istream& in) {
    std::optional<Phasor> pcc_voltage;
    std::optional<Phasor> z_per_m;
    std::vector<NodeRecord> records;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) {
            tok.push_back(t);
        }
        if (tok.empty()) {
            continue;
        }
        try {
            if (tok[0] == "pcc_voltage" || tok[0] == "impedance_per_m") {
                if (tok.size() != 3) {
                    throw FormatError(tok[0] + " expects two numbers");
                }
                const Phasor value{parse_double(tok[1]), parse_double(tok[2])};
                (tok[0] == "pcc_voltage" ? pcc_voltage : z_per_m) = value;
            } else if (tok[0] == "node") {
                if (tok.size() != 7 && tok.size() != 8) {
                    throw FormatError("node record expects 6 or 7 fields");
                }
                NodeRecord r;
                r.node.id = static_cast<NodeId>(parse_unsigned(tok[1]));
                r.node.kind = parse_kind(tok[2]);
                if (tok[3] != "-") {
                    r.parent = static_cast<NodeId>(parse_unsigned(tok[3]));
                }
                r.length_m = parse_double(tok[4]);
                r.node.load_demand = {parse_double(tok[5]), parse_double(tok[6])};
                if (tok.size() == 8) {
                    if (tok[7] != "0" && tok[7] != "1") {
                        throw FormatError("smart flag must be 0 or 1");
                    }
                    r.node.is_smart = tok[7] == "1";
                }
                if (r.parent.has_value() == (r.node.kind == NodeKind::Pcc)) {
                    throw FormatError("exactly the PCC record has no parent");
                }
                records.push_back(r);
            } else {
                throw FormatError("unknown record '" + tok[0] + "'");
            }
        } catch (const FormatError& e) {
            throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!pcc_voltage || !z_per_m) {
        throw FormatError("missing pcc_voltage or impedance_per_m header");
    }

    std::vector<GridNode> nodes;
    std::vector<Branch> branches;
    for (const auto& r : records) {
        nodes.push_back(r.node);
        if (r.parent) {
            branches.push_back(Branch{*r.parent, r.node.id, r.length_m, *z_per_m});
        }
    }
    return GridTree(std::move(nodes), std::move(branches), *pcc_voltage);
}

void save_grid(const std::filesystem::path& path, const GridTree& grid) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    write_grid(out, grid);
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

GridTree load_grid(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return read_grid(in);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace mgsim
