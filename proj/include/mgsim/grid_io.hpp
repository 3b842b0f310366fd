#pragma once

// Grid description files.
//
//   # comment
//   pcc_voltage <re> <im>
//   impedance_per_m <re> <im>
//   node <id> <kind> <parent|-> <length_m> <load_re> <load_im> [smart]
//
// `kind` is one of pcc, load, dg, junction. The PCC record uses `-` as its
// parent and a zero length. `smart` is 1 or 0 and defaults to 1. Loads are
// apparent powers in VA; numbers are written in shortest round-trip form so a
// write/read cycle reproduces the grid bit for bit.

#include <filesystem>
#include <iosfwd>

#include "mgsim/phasor_grid.hpp"

namespace mgsim {

/// Throws ParameterError if the branches do not share one impedance per meter
/// (the format stores a single value).
void write_grid(std::ostream& out, const GridTree& grid);
/// Throws FormatError with the offending line number.
GridTree read_grid(std::istream& in);

void save_grid(const std::filesystem::path& path, const GridTree& grid);
GridTree load_grid(const std::filesystem::path& path);

}  // namespace mgsim
