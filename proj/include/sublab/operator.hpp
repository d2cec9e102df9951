#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sublab/geometry.hpp"
#include "sublab/grid.hpp"
#include "sublab/smooth_function.hpp"

namespace sublab {

enum class ZeroGradientRule {
  None,           // evaluate A(0) as given
  DropDiffusion,  // A-term is 0 at xi = 0 and the point is flagged degenerate
};

// L u = -Tr(A(Xu) X*Xu) + H(Xu), with scaling profile phi on (0, 1].
struct QuasilinearOperator {
  std::string name;
  std::function<Eigen::MatrixXd(const HVector&)> A;
  std::function<double(const HVector&)> H;
  std::function<double(double)> phi;
  std::string phi_name;
  ZeroGradientRule zero_gradient_rule = ZeroGradientRule::None;

  // Optional closed-form xi-derivatives: dA(xi)[k] = dA/dxi_k, dH(xi) = grad H.
  std::function<std::vector<Eigen::MatrixXd>(const HVector&)> dA;
  std::function<HVector(const HVector&)> dH;

  // Kind tags used by the discrete solver's stencils.
  enum class Family { Generic, SubLaplacian, Infinity, PNorm };
  Family family = Family::Generic;
  double p = 2.0;  // exponent for PNorm

  double ellipticity(const HVector& xi) const { return xi.dot(A(xi) * xi); }
};

// phi(s) = s^k
std::function<double(double)> power_profile(double k);
// "power:<k>"
std::function<double(double)> parse_profile(std::string_view name);

QuasilinearOperator sublaplacian_operator(std::string_view phi = "power:1");
QuasilinearOperator infinity_operator(std::string_view phi = "power:3");
QuasilinearOperator pnorm_operator(double p, std::string_view phi = "power:1");
// "sublaplacian", "infinity", "pnorm:<p>"; phi overrides the preset profile when given.
QuasilinearOperator make_preset_operator(std::string_view name, std::string_view phi = {});

struct HorizontalJet {
  HVector grad;          // Xu = sigma^T grad u
  Eigen::MatrixXd hess;  // X*Xu = sigma^T D^2u sigma + M
  Point base;
};

// M_ij = (<Dsigma^j sigma^i, g> + <Dsigma^i sigma^j, g>) / 2
Eigen::MatrixXd m_correction(const Eigen::MatrixXd& sigma, const std::vector<Eigen::MatrixXd>& dsigma,
                             const Eigen::VectorXd& g);
HorizontalJet jet_from_derivatives(const VectorFieldSystem& sys, const Point& x,
                                   const Eigen::VectorXd& grad, const Eigen::MatrixXd& hess);
HorizontalJet horizontal_jet(const VectorFieldSystem& sys, const SmoothFunction& u, const Point& x);
// Second-order central differences at an interior node; BoundaryStencilError on the rim.
HorizontalJet horizontal_jet(const VectorFieldSystem& sys, const GridFunction& u, std::size_t node);
// Euclidean gradient and Hessian from central differences at an interior node.
void grid_derivatives(const GridFunction& u, std::size_t node, Eigen::VectorXd& grad,
                      Eigen::MatrixXd& hess);

struct OperatorValue {
  double value = 0.0;
  bool degenerate = false;
};

OperatorValue apply_operator(const QuasilinearOperator& op, const HorizontalJet& jet);
double evaluate_operator(const QuasilinearOperator& op, const VectorFieldSystem& sys,
                         const SmoothFunction& u, const Point& x);
double evaluate_operator(const QuasilinearOperator& op, const VectorFieldSystem& sys,
                         const GridFunction& u, std::size_t node);

// G(xi, X) = -Tr(A(xi) X) + H(xi)
double operator_G(const QuasilinearOperator& op, const HVector& xi, const Eigen::MatrixXd& X);

struct Linearization {
  Eigen::MatrixXd second_order;  // P2: acts as -Tr(P2 X*Xv)
  HVector first_order;           // P1: acts as <P1, Xv>
  double apply(const HorizontalJet& v) const {
    return -(second_order.cwiseProduct(v.hess)).sum() + first_order.dot(v.grad);
  }
};

// Derivatives of A and H at xi (closed forms when supplied, else central differences, step 1e-6).
std::vector<Eigen::MatrixXd> diffusion_derivative(const QuasilinearOperator& op, const HVector& xi);
HVector drift_derivative(const QuasilinearOperator& op, const HVector& xi);

// Linearization of L at x around u. NondifferentiableError at Xu = 0 for
// operators with a zero-gradient rule.
Linearization linearize_at(const QuasilinearOperator& op, const VectorFieldSystem& sys,
                           const SmoothFunction& u, const Point& x);

struct StructureViolation {
  std::string check;  // "symmetry", "psd", "ellipticity", "diffusion_scaling", "drift_scaling"
  double margin = 0.0;
  double t = 1.0;
  HVector xi;
};

struct StructureReport {
  int samples = 0;
  std::vector<StructureViolation> violations;
  double worst_diffusion_margin = kInf;
  double worst_drift_margin = kInf;
  double min_eigenvalue = kInf;
  double min_ellipticity = kInf;
  bool passed() const { return violations.empty(); }
};

// Samples (t, xi, X), t in t_range (t >= 1), |xi| in xi_range, X random symmetric.
StructureReport check_structure(const QuasilinearOperator& op, int m, int samples,
                                std::pair<double, double> t_range,
                                std::pair<double, double> xi_range, std::uint64_t seed = 0);

struct GrowthReport {
  double theta = 0.0;
  double a_theta = 0.0;
  double worst_margin = kInf;       // relative margin of E(xi) >= |xi| a / (theta phi(theta/|xi|))
  double worst_weak_margin = kInf;  // relative margin of E(xi) >= a / phi(theta/|xi|)
  int checked = 0;
  int rejected = 0;  // samples with |xi| < theta
  bool passed() const { return checked > 0 && worst_margin >= -1e-12; }
};

GrowthReport growth_lower_bound(const QuasilinearOperator& op, double theta,
                                const std::vector<HVector>& xi_samples, int sphere_samples = 4096,
                                std::uint64_t seed = 0);

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs + slack - lhs
  bool holds = false;
};

inline constexpr double kChainRuleSlack = 1e-9;

BoundCheck chain_rule_bound_probe(const QuasilinearOperator& op, const VectorFieldSystem& sys,
                                  const SmoothFunction& omega, const ScalarProfile& h,
                                  const Point& x0);

struct PerturbationBound {
  double deviation = 0.0;
  double bound = 0.0;
  double omega_A = 0.0;
  double omega_H = 0.0;
  double constant = 1.0;
  double margin() const { return bound - deviation; }
  bool holds() const { return deviation <= bound; }
};

PerturbationBound linear_perturbation_bound_probe(const QuasilinearOperator& op,
                                                  const VectorFieldSystem& sys,
                                                  const SmoothFunction& w,
                                                  const Eigen::VectorXd& p, const Point& x,
                                                  std::uint64_t seed = 0, int pairs = 1000);

}  // namespace sublab
