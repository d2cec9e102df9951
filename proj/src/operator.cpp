#include "sublab/operator.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "sublab/errors.hpp"

namespace sublab {

std::function<double(double)> power_profile(double k) {
  return [k](double s) { return std::pow(s, k); };
}

std::function<double(double)> parse_profile(std::string_view name) {
  if (name.starts_with("power:")) {
    std::string rest(name.substr(6));
    try {
      std::size_t used = 0;
      double k = std::stod(rest, &used);
      if (used != rest.size() || !(k > 0)) throw std::invalid_argument(rest);
      return power_profile(k);
    } catch (const std::exception&) {
      throw ConfigError("operator", "bad profile exponent '" + rest + "'");
    }
  }
  throw ConfigError("operator", "unknown profile '" + std::string(name) + "'");
}

QuasilinearOperator sublaplacian_operator(std::string_view phi) {
  QuasilinearOperator op;
  op.name = "sublaplacian";
  op.family = QuasilinearOperator::Family::SubLaplacian;
  op.A = [](const HVector& xi) -> Eigen::MatrixXd {
    return Eigen::MatrixXd::Identity(xi.size(), xi.size());
  };
  op.H = [](const HVector&) { return 0.0; };
  op.dA = [](const HVector& xi) {
    const auto m = xi.size();
    return std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(m), Eigen::MatrixXd::Zero(m, m));
  };
  op.dH = [](const HVector& xi) -> HVector { return HVector::Zero(xi.size()); };
  op.phi = parse_profile(phi);
  op.phi_name = std::string(phi);
  return op;
}

QuasilinearOperator infinity_operator(std::string_view phi) {
  QuasilinearOperator op;
  op.name = "infinity";
  op.family = QuasilinearOperator::Family::Infinity;
  op.zero_gradient_rule = ZeroGradientRule::DropDiffusion;
  op.A = [](const HVector& xi) -> Eigen::MatrixXd { return xi * xi.transpose(); };
  op.H = [](const HVector&) { return 0.0; };
  op.dA = [](const HVector& xi) {
    const auto m = xi.size();
    std::vector<Eigen::MatrixXd> d;
    for (Eigen::Index k = 0; k < m; ++k) {
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(m, m);
      e.row(k) += xi.transpose();
      e.col(k) += xi;
      d.push_back(e);
    }
    return d;
  };
  op.dH = [](const HVector& xi) -> HVector { return HVector::Zero(xi.size()); };
  op.phi = parse_profile(phi);
  op.phi_name = std::string(phi);
  return op;
}

QuasilinearOperator pnorm_operator(double p, std::string_view phi) {
  if (!(p > 1.0)) throw ConfigError("operator", "normalized p-Laplacian needs p > 1");
  QuasilinearOperator op;
  std::ostringstream label;
  label << "pnorm:" << p;
  op.name = label.str();
  op.family = QuasilinearOperator::Family::PNorm;
  op.p = p;
  op.zero_gradient_rule = ZeroGradientRule::DropDiffusion;
  op.A = [p](const HVector& xi) -> Eigen::MatrixXd {
    const auto m = xi.size();
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
    const double n2 = xi.squaredNorm();
    if (n2 > 0) a += (p - 2) * xi * xi.transpose() / n2;
    return a;
  };
  op.H = [](const HVector&) { return 0.0; };
  op.dA = [p](const HVector& xi) {
    const auto m = xi.size();
    const double n2 = xi.squaredNorm();
    if (n2 == 0) throw NondifferentiableError("normalized p-Laplacian is not differentiable at 0");
    std::vector<Eigen::MatrixXd> d;
    for (Eigen::Index k = 0; k < m; ++k) {
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(m, m);
      e.row(k) += xi.transpose();
      e.col(k) += xi;
      e = e / n2 - 2 * xi[k] * xi * xi.transpose() / (n2 * n2);
      d.push_back((p - 2) * e);
    }
    return d;
  };
  op.dH = [](const HVector& xi) -> HVector { return HVector::Zero(xi.size()); };
  op.phi = parse_profile(phi);
  op.phi_name = std::string(phi);
  return op;
}

QuasilinearOperator make_preset_operator(std::string_view name, std::string_view phi) {
  if (name == "sublaplacian") return sublaplacian_operator(phi.empty() ? "power:1" : phi);
  if (name == "infinity") return infinity_operator(phi.empty() ? "power:3" : phi);
  if (name.starts_with("pnorm:")) {
    std::string rest(name.substr(6));
    double p = 0;
    try {
      std::size_t used = 0;
      p = std::stod(rest, &used);
      if (used != rest.size()) throw std::invalid_argument(rest);
    } catch (const std::exception&) {
      throw ConfigError("operator", "bad exponent in '" + std::string(name) + "'");
    }
    return pnorm_operator(p, phi.empty() ? "power:1" : phi);
  }
  throw ConfigError("operator", "unknown operator preset '" + std::string(name) + "'");
}

Eigen::MatrixXd m_correction(const Eigen::MatrixXd& sigma, const std::vector<Eigen::MatrixXd>& dsigma,
                             const Eigen::VectorXd& g) {
  const auto m = sigma.cols();
  // w_j = Dsigma^j^T g, so <Dsigma^j sigma^i, g> = <sigma^i, w_j>.
  Eigen::MatrixXd W(sigma.rows(), m);
  for (Eigen::Index j = 0; j < m; ++j) W.col(j) = dsigma[static_cast<std::size_t>(j)].transpose() * g;
  Eigen::MatrixXd T = sigma.transpose() * W;  // T(i, j) = <Dsigma^j sigma^i, g>
  return 0.5 * (T + T.transpose());
}

HorizontalJet jet_from_derivatives(const VectorFieldSystem& sys, const Point& x,
                                   const Eigen::VectorXd& grad, const Eigen::MatrixXd& hess) {
  Eigen::MatrixXd s = sys.sigma(x);
  HorizontalJet jet;
  jet.base = x;
  jet.grad = s.transpose() * grad;
  Eigen::MatrixXd h = s.transpose() * hess * s;
  jet.hess = 0.5 * (h + h.transpose()) + m_correction(s, sys.dsigma(x), grad);
  return jet;
}

HorizontalJet horizontal_jet(const VectorFieldSystem& sys, const SmoothFunction& u, const Point& x) {
  if (x.size() != sys.dim()) throw std::invalid_argument("jet point dimension mismatch");
  return jet_from_derivatives(sys, x, u.grad(x), u.hess(x));
}

void grid_derivatives(const GridFunction& u, std::size_t node, Eigen::VectorXd& grad,
                      Eigen::MatrixXd& hess) {
  const Grid& g = u.grid();
  if (node >= g.size()) throw std::out_of_range("grid node index");
  if (g.on_rim(node)) throw BoundaryStencilError(node);
  const int n = g.dim();
  grad.resize(n);
  hess.resize(n, n);
  const double u0 = u[node];
  for (int a = 0; a < n; ++a) {
    const std::size_t sa = g.stride(a);
    const double ha = g.spacing(a);
    const double up = u[node + sa];
    const double um = u[node - sa];
    grad[a] = (up - um) / (2 * ha);
    hess(a, a) = (up - 2 * u0 + um) / (ha * ha);
    for (int b = a + 1; b < n; ++b) {
      const std::size_t sb = g.stride(b);
      const double hb = g.spacing(b);
      const double c = (u[node + sa + sb] - u[node + sa - sb] - u[node - sa + sb] + u[node - sa - sb]) /
                       (4 * ha * hb);
      hess(a, b) = hess(b, a) = c;
    }
  }
}

HorizontalJet horizontal_jet(const VectorFieldSystem& sys, const GridFunction& u, std::size_t node) {
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  grid_derivatives(u, node, grad, hess);
  return jet_from_derivatives(sys, u.grid().point(node), grad, hess);
}

OperatorValue apply_operator(const QuasilinearOperator& op, const HorizontalJet& jet) {
  OperatorValue v;
  const double drift = op.H(jet.grad);
  if (op.zero_gradient_rule == ZeroGradientRule::DropDiffusion && jet.grad.isZero(0.0)) {
    v.value = drift;
    v.degenerate = true;
    return v;
  }
  v.value = -(op.A(jet.grad).cwiseProduct(jet.hess)).sum() + drift;
  return v;
}

double evaluate_operator(const QuasilinearOperator& op, const VectorFieldSystem& sys,
                         const SmoothFunction& u, const Point& x) {
  return apply_operator(op, horizontal_jet(sys, u, x)).value;
}

double evaluate_operator(const QuasilinearOperator& op, const VectorFieldSystem& sys,
                         const GridFunction& u, std::size_t node) {
  return apply_operator(op, horizontal_jet(sys, u, node)).value;
}

double operator_G(const QuasilinearOperator& op, const HVector& xi, const Eigen::MatrixXd& X) {
  return -(op.A(xi).cwiseProduct(X)).sum() + op.H(xi);
}

namespace {
constexpr double kXiStep = 1e-6;

// A with the zero-gradient convention applied.
Eigen::MatrixXd effective_A(const QuasilinearOperator& op, const HVector& xi) {
  if (op.zero_gradient_rule == ZeroGradientRule::DropDiffusion && xi.isZero(0.0))
    return Eigen::MatrixXd::Zero(xi.size(), xi.size());
  return op.A(xi);
}
}  // namespace

std::vector<Eigen::MatrixXd> diffusion_derivative(const QuasilinearOperator& op, const HVector& xi) {
  if (op.dA) return op.dA(xi);
  std::vector<Eigen::MatrixXd> d;
  HVector y = xi;
  for (Eigen::Index k = 0; k < xi.size(); ++k) {
    y[k] = xi[k] + kXiStep;
    Eigen::MatrixXd ap = op.A(y);
    y[k] = xi[k] - kXiStep;
    Eigen::MatrixXd am = op.A(y);
    y[k] = xi[k];
    d.push_back((ap - am) / (2 * kXiStep));
  }
  return d;
}

HVector drift_derivative(const QuasilinearOperator& op, const HVector& xi) {
  if (op.dH) return op.dH(xi);
  HVector d(xi.size());
  HVector y = xi;
  for (Eigen::Index k = 0; k < xi.size(); ++k) {
    y[k] = xi[k] + kXiStep;
    double hp = op.H(y);
    y[k] = xi[k] - kXiStep;
    double hm = op.H(y);
    y[k] = xi[k];
    d[k] = (hp - hm) / (2 * kXiStep);
  }
  return d;
}

Linearization linearize_at(const QuasilinearOperator& op, const VectorFieldSystem& sys,
                           const SmoothFunction& u, const Point& x) {
  HorizontalJet jet = horizontal_jet(sys, u, x);
  if (op.zero_gradient_rule == ZeroGradientRule::DropDiffusion && jet.grad.isZero(0.0))
    throw NondifferentiableError(op.name + " is not differentiable at zero horizontal gradient");
  Linearization lin;
  lin.second_order = op.A(jet.grad);
  std::vector<Eigen::MatrixXd> dA = diffusion_derivative(op, jet.grad);
  HVector dH = drift_derivative(op, jet.grad);
  lin.first_order.resize(jet.grad.size());
  for (Eigen::Index k = 0; k < jet.grad.size(); ++k)
    lin.first_order[k] = -(dA[static_cast<std::size_t>(k)].cwiseProduct(jet.hess)).sum() + dH[k];
  return lin;
}

namespace {

HVector random_direction(std::mt19937_64& rng, int m) {
  std::normal_distribution<double> g;
  HVector v(m);
  do {
    for (int k = 0; k < m; ++k) v[k] = g(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, int m) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd X(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) X(a, b) = X(b, a) = g(rng);
  return X;
}

bool below(double lhs, double rhs) { return lhs <= rhs + 1e-9 * (1 + std::abs(lhs) + std::abs(rhs)); }

}  // namespace

StructureReport check_structure(const QuasilinearOperator& op, int m, int samples,
                                std::pair<double, double> t_range,
                                std::pair<double, double> xi_range, std::uint64_t seed) {
  if (samples < 100) throw std::invalid_argument("check_structure needs at least 100 samples");
  if (m < 1) throw std::invalid_argument("field count must be positive");
  if (!(t_range.first >= 1.0 && t_range.second >= t_range.first))
    throw std::invalid_argument("t range must satisfy 1 <= lo <= hi");
  if (!(xi_range.first > 0.0 && xi_range.second >= xi_range.first))
    throw std::invalid_argument("|xi| range must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ut(t_range.first, t_range.second);
  std::uniform_real_distribution<double> ur(xi_range.first, xi_range.second);
  StructureReport rep;
  rep.samples = samples;
  auto record = [&](const std::string& check, double margin, double t, const HVector& xi) {
    rep.violations.push_back({check, margin, t, xi});
  };
  for (int s = 0; s < samples; ++s) {
    const double t = ut(rng);
    const HVector xi = random_direction(rng, m) * ur(rng);
    const Eigen::MatrixXd X = random_symmetric(rng, m);
    const HVector txi = t * xi;
    const Eigen::MatrixXd A = op.A(xi);
    const Eigen::MatrixXd At = op.A(txi);
    for (const Eigen::MatrixXd* M : {&A, &At}) {
      const double asym = (*M - M->transpose()).cwiseAbs().maxCoeff();
      if (asym > 1e-12 * (1 + M->cwiseAbs().maxCoeff())) record("symmetry", -asym, t, xi);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (*M + M->transpose()));
      const double lmin = es.eigenvalues().minCoeff();
      rep.min_eigenvalue = std::min(rep.min_eigenvalue, lmin);
      if (lmin < -1e-10) record("psd", lmin, t, xi);
    }
    const double e = xi.dot(A * xi);
    rep.min_ellipticity = std::min(rep.min_ellipticity, e);
    if (!(e > 0)) record("ellipticity", e, t, xi);

    const double factor = 1.0 / (t * op.phi(1.0 / t));
    const Eigen::MatrixXd XX = xi * xi.transpose();
    for (const Eigen::MatrixXd* Y : {&X, &XX}) {
      const double lhs = -(At.cwiseProduct(*Y)).sum();
      const double rhs = -(A.cwiseProduct(*Y)).sum() * factor;
      rep.worst_diffusion_margin = std::min(rep.worst_diffusion_margin, rhs - lhs);
      if (!below(lhs, rhs)) record(Y == &X ? "diffusion_scaling" : "diffusion_scaling_xi", rhs - lhs, t, xi);
    }
    const double hl = op.H(txi);
    const double hr = op.H(xi) / op.phi(1.0 / t);
    rep.worst_drift_margin = std::min(rep.worst_drift_margin, hr - hl);
    if (!below(hl, hr)) record("drift_scaling", hr - hl, t, xi);
  }
  return rep;
}

GrowthReport growth_lower_bound(const QuasilinearOperator& op, double theta,
                                const std::vector<HVector>& xi_samples, int sphere_samples,
                                std::uint64_t seed) {
  if (!(theta > 0)) throw std::invalid_argument("theta must be positive");
  GrowthReport rep;
  rep.theta = theta;
  if (xi_samples.empty()) return rep;
  const int m = static_cast<int>(xi_samples.front().size());
  std::mt19937_64 rng(seed);
  double a = kInf;
  if (m == 2) {
    for (int k = 0; k < sphere_samples; ++k) {
      const double ang = 2 * M_PI * k / sphere_samples;
      HVector z(2);
      z << theta * std::cos(ang), theta * std::sin(ang);
      a = std::min(a, op.ellipticity(z));
    }
  } else {
    for (int k = 0; k < m; ++k)
      for (double sgn : {1.0, -1.0}) {
        HVector z = HVector::Zero(m);
        z[k] = sgn * theta;
        a = std::min(a, op.ellipticity(z));
      }
    for (int k = 0; k < sphere_samples; ++k) a = std::min(a, op.ellipticity(theta * random_direction(rng, m)));
  }
  rep.a_theta = a;
  for (const auto& xi : xi_samples) {
    const double r = xi.norm();
    if (r < theta) {
      ++rep.rejected;
      continue;
    }
    ++rep.checked;
    const double e = op.ellipticity(xi);
    const double strong = r * a / (theta * op.phi(theta / r));
    const double weak = a / op.phi(theta / r);
    rep.worst_margin = std::min(rep.worst_margin, (e - strong) / std::max(1.0, std::abs(strong)));
    rep.worst_weak_margin = std::min(rep.worst_weak_margin, (e - weak) / std::max(1.0, std::abs(weak)));
  }
  return rep;
}

BoundCheck chain_rule_bound_probe(const QuasilinearOperator& op, const VectorFieldSystem& sys,
                                  const SmoothFunction& omega, const ScalarProfile& h,
                                  const Point& x0) {
  const double u = omega(x0);
  const double h1 = h.d1(u);
  const double h2 = h.d2(u);
  if (!(h1 >= 1.0) || !(h2 >= 0.0))
    throw std::invalid_argument("profile needs h' >= 1 and h'' >= 0 at omega(x0)");
  HorizontalJet jet = horizontal_jet(sys, omega, x0);
  const double L_omega = apply_operator(op, jet).value;
  const double E = op.zero_gradient_rule == ZeroGradientRule::DropDiffusion && jet.grad.isZero(0.0)
                       ? 0.0
                       : op.ellipticity(jet.grad);
  BoundCheck c;
  c.lhs = evaluate_operator(op, sys, compose(h, omega), x0);
  c.rhs = (L_omega - (h2 / h1) * E) / op.phi(1.0 / h1);
  c.margin = c.rhs + kChainRuleSlack - c.lhs;
  c.holds = c.margin >= 0.0;
  return c;
}

PerturbationBound linear_perturbation_bound_probe(const QuasilinearOperator& op,
                                                  const VectorFieldSystem& sys,
                                                  const SmoothFunction& w,
                                                  const Eigen::VectorXd& p, const Point& x,
                                                  std::uint64_t seed, int pairs) {
  if (p.size() != sys.dim()) throw std::invalid_argument("p must have the domain dimension");
  if (p.norm() > 1.0 + 1e-12) throw std::invalid_argument("|p| must not exceed 1");
  PerturbationBound out;
  HorizontalJet jet = horizontal_jet(sys, w, x);
  HorizontalJet jet_p = horizontal_jet(sys, add_linear(w, p), x);
  out.deviation = std::abs(apply_operator(op, jet_p).value - apply_operator(op, jet).value);

  const Eigen::MatrixXd s = sys.sigma(x);
  const std::vector<Eigen::MatrixXd> ds = sys.dsigma(x);
  const int m = sys.fields();
  double cm2 = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      cm2 += (0.5 * (ds[j] * s.col(i) + ds[i] * s.col(j))).squaredNorm();
  out.constant = std::max(1.0, std::sqrt(cm2));

  const double radius = s.jacobiSvd().singularValues()[0] * p.norm();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto in_ball = [&](double r) -> HVector { return random_direction(rng, m) * r * std::pow(u01(rng), 1.0 / m); };
  double wa = 0.0, wh = 0.0;
  auto visit = [&](const HVector& a, const HVector& b) {
    wa = std::max(wa, (effective_A(op, a) - effective_A(op, b)).norm());
    wh = std::max(wh, std::abs(op.H(a) - op.H(b)));
  };
  visit(jet.grad, jet_p.grad);
  if (radius > 0)
    for (int k = 0; k < pairs; ++k) {
      HVector a = jet.grad + in_ball(radius);
      visit(a, HVector(a + in_ball(radius)));
    }
  out.omega_A = 1.5 * wa;
  out.omega_H = 1.5 * wh;
  const double A_norm = effective_A(op, jet.grad).norm();
  out.bound = out.constant * (out.omega_A * (jet.hess.norm() + p.norm()) + A_norm * p.norm() + out.omega_H);
  return out;
}

}  // namespace sublab
