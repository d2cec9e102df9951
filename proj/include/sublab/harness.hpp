#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sublab/geometry.hpp"
#include "sublab/grid.hpp"
#include "sublab/operator.hpp"

namespace sublab {

inline constexpr double kArgmaxSlack = 1e-9;

struct ComparisonResult {
  bool pass = false;
  double max_interior_gap = 0.0;  // max of u - v over the mask
  double max_boundary_gap = 0.0;  // max of (u - v)^+ over the discrete boundary of the mask
  std::vector<std::size_t> argmax_nodes;
  std::optional<std::size_t> offending_node;
};

// The discrete boundary of the mask is the set of unmasked nodes axis-adjacent to it.
// Passes iff max_interior_gap <= max_boundary_gap + tolerance.
ComparisonResult comparison_check(const GridFunction& u, const GridFunction& v,
                                  const std::vector<std::uint8_t>& interior_mask, double tolerance);
std::vector<std::uint8_t> mask_boundary(const Grid& grid, const std::vector<std::uint8_t>& mask);

enum class StrongMaxVerdict {
  Constant,             // interior maximum and oscillation <= 10 tol
  BoundaryAttained,     // maximum only on the rim
  Violation,            // interior maximum of a certified subsolution that is not constant
  CertificationFailed,  // L^u <= tol fails somewhere, so nothing is claimed
  NotApplicable,        // max(u) < 0
};

struct StrongMaxResult {
  StrongMaxVerdict verdict = StrongMaxVerdict::NotApplicable;
  double max_residual = 0.0;
  double maximum = 0.0;
  double oscillation = 0.0;
  bool interior_attained = false;
  // True unless the outcome contradicts the strong maximum principle.
  bool consistent() const { return verdict != StrongMaxVerdict::Violation; }
};

std::string to_string(StrongMaxVerdict v);

StrongMaxResult strong_max_probe(const QuasilinearOperator& op, const VectorFieldSystem& sys,
                                 const GridFunction& u, double tolerance);

struct TranslationCell {
  double value = 0.0;
  bool valid = false;
  std::vector<std::size_t> argmax;
};

struct TranslationTable {
  double delta = 0.0;
  std::vector<HVector> hs;
  std::vector<HVector> ls;
  std::vector<TranslationCell> cells;  // row-major in (h, l)
  const TranslationCell& cell(std::size_t ih, std::size_t il) const { return cells[ih * ls.size() + il]; }
};

// Tensor grid of per_axis values in [-extent, extent]^m.
std::vector<HVector> h_lattice(int m, double extent, int per_axis);

// M(h, l) = max over the mask of u(exp_x(h.X)) - v(exp_x(l.X)), values off the grid
// by multilinear interpolation. Cells whose flows leave the grid are invalid.
TranslationTable translation_max_map(const GridFunction& u, const GridFunction& v,
                                     const VectorFieldSystem& sys,
                                     const std::vector<std::uint8_t>& omega_delta, double delta,
                                     const std::vector<HVector>& hs, const std::vector<HVector>& ls,
                                     int flow_steps = 16);

// sup of |sigma^T grad I| with I the multilinear interpolant, taken at cell corners.
double horizontal_gradient_sup(const GridFunction& u, const VectorFieldSystem& sys);

struct LipschitzFit {
  double h_ratio = 0.0;  // max |M(h,l) - M(h',l)| / |h - h'|
  double l_ratio = 0.0;
  double grad_u = 0.0;   // measured |Xu|_inf
  double grad_v = 0.0;
  double slack = 1.2;
  bool h_ok = false;
  bool l_ok = false;
  bool ok() const { return h_ok && l_ok; }
};

// DegenerateInputError if the table has fewer than 3 values per axis.
LipschitzFit lipschitz_probe(const TranslationTable& table, const GridFunction& u,
                             const GridFunction& v, const VectorFieldSystem& sys, double slack = 1.2);

}  // namespace sublab
