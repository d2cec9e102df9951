#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sublab/polynomial.hpp"
#include "sublab/types.hpp"

namespace sublab {

using FieldFn = std::function<Eigen::VectorXd(const Point&)>;

// m vector fields X_j = sigma^j . grad on an n-dimensional box.
// sigma(x) is n x m (column j is X_j); dsigma(x)[j] is the n x n Jacobian of column j.
// Field indices are 0-based throughout.
class VectorFieldSystem {
 public:
  using SigmaFn = std::function<Eigen::MatrixXd(const Point&)>;
  using JacobianFn = std::function<std::vector<Eigen::MatrixXd>(const Point&)>;

  VectorFieldSystem(int n, int m, SigmaFn sigma, JacobianFn dsigma, std::string name = {});

  // Jacobians from central differences of sigma.
  static VectorFieldSystem with_fd_jacobian(int n, int m, SigmaFn sigma, std::string name = {},
                                            double step = 1e-5);
  // columns[j][a] is the a-th component of X_j.
  static VectorFieldSystem from_polynomials(std::vector<PolynomialField> columns,
                                            std::string name = {});

  int dim() const { return n_; }
  int fields() const { return m_; }
  const std::string& name() const { return name_; }

  Eigen::MatrixXd sigma(const Point& x) const { return sigma_(x); }
  std::vector<Eigen::MatrixXd> dsigma(const Point& x) const { return dsigma_(x); }
  Eigen::VectorXd field(int j, const Point& x) const;

  const Box& domain() const { return domain_; }
  VectorFieldSystem with_domain(Box box) const;

  // Swap in equivalent (typically faster) evaluators, keeping everything else.
  VectorFieldSystem with_evaluators(SigmaFn sigma, JacobianFn dsigma) const;

  std::optional<int> declared_step() const { return declared_step_; }
  VectorFieldSystem with_declared_step(int r) const;

  // Exact polynomial columns when known; enables exact bracket towers.
  const std::vector<PolynomialField>* polynomial_columns() const;

 private:
  int n_;
  int m_;
  SigmaFn sigma_;
  JacobianFn dsigma_;
  std::string name_;
  Box domain_;
  std::optional<int> declared_step_;
  std::shared_ptr<const std::vector<PolynomialField>> poly_;
};

VectorFieldSystem euclidean_system(int n);
// X1 = dx - (y/2) dt, X2 = dy + (x/2) dt on R^3.
VectorFieldSystem heisenberg_system();
// X1 = dx, X2 = x dy on R^2.
VectorFieldSystem grushin_system();
// "euclidean" (n = 2), "euclidean:<n>", "heisenberg1", "grushin".
VectorFieldSystem make_preset_system(std::string_view name);
std::vector<std::string> preset_system_names();

// [X_i, X_j](x) = Dsigma^j sigma^i - Dsigma^i sigma^j.
FieldFn lie_bracket(const VectorFieldSystem& sys, int i, int j);

struct RankResult {
  int rank = 0;
  std::optional<int> step;
  std::vector<int> rank_by_order;  // rank after including brackets of order 1..k
  int fields_considered = 0;
};

inline constexpr double kRankTolerance = 1e-8;

struct TowerField {
  int order = 1;
  Eigen::VectorXd at_x;
};

// Iterated brackets [X_i, [X_j, ...]] up to max_order, deduplicated, evaluated at x.
std::vector<TowerField> bracket_tower(const VectorFieldSystem& sys, const Point& x, int max_order);

RankResult hormander_rank(const VectorFieldSystem& sys, const Point& x, int max_order);

inline constexpr int kDefaultFlowSteps = 64;

// gamma(1) for gamma' = sigma(gamma) h, gamma(0) = x, classical RK4.
Point exp_flow(const VectorFieldSystem& sys, const Point& x, const HVector& h,
               int steps = kDefaultFlowSteps);
// Jacobian of y -> exp_flow(y, h) at x from the variational equation.
Eigen::MatrixXd flow_jacobian(const VectorFieldSystem& sys, const Point& x, const HVector& h,
                              int steps = kDefaultFlowSteps);

struct Diffeomorphism {
  std::function<Point(const Point&)> forward;
  std::function<Point(const Point&)> inverse;
  std::function<Eigen::MatrixXd(const Point&)> jacobian;
  bool identity = false;
};

Diffeomorphism identity_map(int n);
Diffeomorphism translation_map(const Eigen::VectorXd& v);
// Theta_h(y) = exp_flow(y, h), inverse exp_flow(., -h).
Diffeomorphism flow_map(const VectorFieldSystem& sys, const HVector& h,
                        int steps = kDefaultFlowSteps);

// Fields (dTheta_t)^{-1} X_i(Theta(t)); Jacobians of the new sigma by central differences.
VectorFieldSystem pullback_system(const VectorFieldSystem& sys, Diffeomorphism theta,
                                  double fd_step = 1e-5);

}  // namespace sublab
