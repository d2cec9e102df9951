#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "sublab/geometry.hpp"
#include "sublab/grid.hpp"
#include "sublab/operator.hpp"

namespace sublab {

enum class SolveMethod {
  Implicit,  // linearized backward-Euler pseudo-time steps with a growing step
  Explicit,  // u <- u - tau L^u (Jacobi sweeps)
};

struct SolverParams {
  double tolerance = 1e-8;  // on |L^u|_inf over interior nodes
  int max_iterations = 200000;
  SolveMethod method = SolveMethod::Implicit;
  double tau = 0.0;  // explicit: fixed step (0 = stable automatic); implicit: first step (0 = 1)
  double cfl = 0.9;  // explicit automatic step: tau = cfl / max diagonal stencil weight
  double p_regularization = 1e-8;
};

// One frozen stencil row: L^u(node) = sum_k coef_k u[node_k] + constant.
struct StencilRow {
  std::vector<std::pair<std::size_t, double>> entries;
  double constant = 0.0;
  bool degenerate = false;
};

// Discrete operator on the non-rim nodes of a grid. Second-order central
// differences in the Euclidean form sigma^T D^2u sigma + M; the infinity
// Laplacian uses a second difference along the discrete direction sigma Xu.
class DiscreteOperator {
 public:
  DiscreteOperator(QuasilinearOperator op, const VectorFieldSystem& sys, const Grid& grid,
                   double p_regularization = 1e-8);

  const Grid& grid() const { return grid_; }
  const QuasilinearOperator& op() const { return op_; }

  // Coefficients frozen at u (A evaluated at the discrete Xu(node)).
  void row(const GridFunction& u, std::size_t node, StencilRow& out) const;
  double apply(const GridFunction& u, std::size_t node, bool* degenerate = nullptr) const;

 private:
  QuasilinearOperator op_;
  Grid grid_;
  int n_;
  int m_;
  double delta_;
  std::vector<Eigen::MatrixXd> sigma_;  // per node
  std::vector<Eigen::MatrixXd> v_;      // per node: column i*m+j holds (Dsigma^j sigma^i + Dsigma^i sigma^j)/2
  Eigen::MatrixXd effective_A(const HVector& xi, bool& degenerate) const;
  void linear_row(std::size_t node, const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                  StencilRow& out) const;
};

struct SolveResult {
  GridFunction solution;
  std::vector<std::pair<int, double>> history;  // (iteration, residual)
  int iterations = 0;
  double residual = 0.0;
  std::size_t degenerate_nodes = 0;
};

// Pointwise L^u on non-rim nodes, 0 on the rim.
GridFunction residual(const QuasilinearOperator& op, const VectorFieldSystem& sys,
                      const GridFunction& u, double p_regularization = 1e-8);

// Rim nodes pinned to boundary_data; NonconvergenceError after max_iterations.
SolveResult solve_dirichlet(const QuasilinearOperator& op, const VectorFieldSystem& sys,
                            const Grid& grid, const std::function<double(const Point&)>& boundary_data,
                            const SolverParams& params = {}, const GridFunction* initial = nullptr);

struct SubSuperPair {
  GridFunction sub;    // boundary data f - gap, L^u <= tol
  GridFunction super;  // boundary data f, L^v >= -tol
  double sub_max_residual = 0.0;
  double super_min_residual = 0.0;
  int sub_iterations = 0;
  int super_iterations = 0;
  std::vector<std::pair<int, double>> sub_history;
  std::vector<std::pair<int, double>> super_history;
};

// CertificationError listing offending nodes if either inequality fails.
SubSuperPair make_sub_super_pair(const QuasilinearOperator& op, const VectorFieldSystem& sys,
                                 const Grid& grid,
                                 const std::function<double(const Point&)>& boundary_data,
                                 double gap, const SolverParams& params = {});

}  // namespace sublab
