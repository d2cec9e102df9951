#pragma once

#include <string>

#include "sublab/grid.hpp"

namespace sublab {

// Binary field file (little-endian):
//   "SLFIELD1" | u32 version | u32 n | u64 counts[n] | f64 lo[n] | f64 hi[n] | f64 spacing[n]
//   | u8 mask encoding (0 = default rim mask, 1 = explicit) | f64 values[N] | u8 mask[N] if explicit
void write_field(const std::string& path, const GridFunction& f);
GridFunction read_field(const std::string& path);

// CSV mirror: one row per node with coordinates, value and mask flag.
void write_field_csv(const std::string& path, const GridFunction& f);

}  // namespace sublab
