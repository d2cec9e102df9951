#pragma once

#include <Eigen/Dense>

#include <limits>
#include <vector>

namespace sublab {

// Domain coordinates (length n) and horizontal coefficients (length m).
using Point = Eigen::VectorXd;
using HVector = Eigen::VectorXd;

// Axis-aligned box. Infinite bounds are allowed and mean "unbounded".
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Box() = default;
  Box(Eigen::VectorXd lo_, Eigen::VectorXd hi_);

  static Box unbounded(int n);
  static Box cube(int n, double lo, double hi);

  int dim() const { return static_cast<int>(lo.size()); }
  bool bounded() const;
  bool contains(const Point& x, double slack = 0.0) const;
  double edge(int axis) const { return hi[axis] - lo[axis]; }
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace sublab
