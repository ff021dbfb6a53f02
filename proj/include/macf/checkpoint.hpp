#pragma once

// Binary field checkpoints.
//
// Layout (all integers and floats little-endian):
//   "MACF"            4 bytes magic
//   version           u16 (currently 1)
//   d                 u8
//   N                 u32
//   coefficients      f64 (re, im) pairs over the half-spectrum: full grid
//                     index range on axes 1..d-1 and last-axis index
//                     0..N/2, in row-major (lexicographic) index order.
// Grid index i on an axis stands for wavenumber i (i <= N/2) or i - N.

#include <filesystem>
#include <iosfwd>

#include "macf/torus_field.hpp"

namespace macf {

inline constexpr std::uint16_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const SpectralField& f);
SpectralField read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const SpectralField& f);
SpectralField load_checkpoint(const std::filesystem::path& path);

}  // namespace macf
