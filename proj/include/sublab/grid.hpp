#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "sublab/types.hpp"

namespace sublab {

// Uniform Cartesian lattice over a bounded box. Nodes are stored row-major:
// axis 0 varies slowest. Rim nodes are those with some index 0 or count-1.
class Grid {
 public:
  Grid() = default;
  Grid(Box box, std::vector<int> counts);
  static Grid cube(int n, double lo, double hi, int count);

  int dim() const { return static_cast<int>(counts_.size()); }
  std::size_t size() const { return size_; }
  const Box& box() const { return box_; }
  const std::vector<int>& counts() const { return counts_; }
  int count(int axis) const { return counts_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  const Eigen::VectorXd& spacings() const { return spacing_; }
  double min_spacing() const { return spacing_.minCoeff(); }
  std::size_t stride(int axis) const { return strides_[axis]; }

  std::size_t index(const int* multi) const;
  std::size_t index(const std::vector<int>& multi) const { return index(multi.data()); }
  void multi_index(std::size_t node, int* out) const;
  std::vector<int> multi_index(std::size_t node) const;

  Point point(std::size_t node) const;
  void point(std::size_t node, double* out) const;
  double coord(int axis, int i) const { return box_.lo[axis] + i * spacing_[axis]; }

  bool on_rim(std::size_t node) const;
  std::size_t nearest(const Point& x) const;
  bool same_lattice(const Grid& o) const;

 private:
  Box box_;
  std::vector<int> counts_;
  Eigen::VectorXd spacing_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

// Scalar field on a grid plus an interior mask (1 = interior node).
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(Grid grid, double fill = 0.0);
  GridFunction(Grid grid, std::vector<double> values);
  static GridFunction sample(const Grid& grid, const std::function<double(const Point&)>& f);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double at(std::size_t i) const;

  const std::vector<std::uint8_t>& mask() const { return mask_; }
  std::vector<std::uint8_t>& mask() { return mask_; }
  bool interior(std::size_t i) const { return mask_[i] != 0; }
  // True when the mask equals the default (every non-rim node).
  bool has_default_mask() const;

  // Multilinear interpolation; throws std::out_of_range outside the box.
  double interpolate(const Point& x) const;
  double interpolate(const double* x) const;

  double max() const;
  double min() const;
  double max_abs() const;

 private:
  Grid grid_;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
};

std::vector<std::uint8_t> default_mask(const Grid& grid);
// Largest |a - b| over all nodes.
double max_abs_difference(const GridFunction& a, const GridFunction& b);
// Interpolation weights: fills node indices and weights for the cell containing x.
// Returns the number of entries (2^n at most). Throws std::out_of_range outside the box.
int interpolation_stencil(const Grid& grid, const double* x, std::size_t* nodes, double* weights);

}  // namespace sublab
