#pragma once

#include <cstdint>
#include <vector>

#include "sublab/grid.hpp"
#include "sublab/metric.hpp"

namespace sublab {

struct Envelope {
  GridFunction field;
  std::vector<std::size_t> argmax;  // node attaining the max (min for inf-convolution)
  double epsilon = 0.0;
  double r0 = 0.0;  // 2 |u|_inf
};

// u^eps(x) = max_y u(y) - d(x, y)^2 / (2 eps) over grid nodes, ties to the smallest index.
Envelope sup_convolution(const GridFunction& u, double epsilon, const DistanceOracle& d);
// v_eps(x) = min_y v(y) + d(x, y)^2 / (2 eps).
Envelope inf_convolution(const GridFunction& v, double epsilon, const DistanceOracle& d);

struct SemiconvexityResult {
  bool is_semiconvex = false;
  double lambda = 0.0;
};

// Least lambda making every axis and diagonal second difference of
// w + lambda |x|^2 / 2 at least -1e-9.
SemiconvexityResult semiconvexity_check(const GridFunction& w, double lambda_cap);

// Largest second difference of d^2(., y*(x)) / |delta|^2 over the same stencils,
// y*(x) the recorded optimizer. The envelope then satisfies lambda <= C / (2 eps).
double envelope_curvature_constant(const Envelope& env, const DistanceOracle& d);

struct ConvergenceRow {
  double epsilon = 0.0;
  double deviation = 0.0;  // max of u^eps - u on the shrunken mask
  std::size_t mask_count = 0;
  bool empty_mask = true;
};

// Deviations on Omega_{(1 + 4 R0) eps}, R0 = 2 |u|_inf.
std::vector<ConvergenceRow> convergence_report(const GridFunction& u, const DistanceOracle& d,
                                               const std::vector<double>& epsilons);

struct JensenResult {
  double success_fraction = 0.0;
  int trials = 0;
  int successes = 0;
  double curvature_bound = 0.0;
  std::vector<Eigen::VectorXd> perturbations;
  std::vector<std::size_t> maximizers;
  std::vector<std::uint8_t> success;
};

// Perturb w by <p, x> with |p| < delta and maximize over the Euclidean ball B_r(xhat).
// A trial succeeds if the maximizer has a full stencil, lies strictly inside the ball,
// and every second difference quotient of w there is bounded by curvature_bound
// (default: 10 max(1, lambda) with lambda from semiconvexity_check).
JensenResult jensen_probe(const GridFunction& w, const Point& xhat, double r, double delta,
                          int trials, std::uint64_t seed = 0, double curvature_bound = 0.0);

}  // namespace sublab
