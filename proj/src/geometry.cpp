#include "sublab/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "sublab/errors.hpp"

namespace sublab {

Box::Box(Eigen::VectorXd lo_, Eigen::VectorXd hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size()) throw std::invalid_argument("box bounds differ in dimension");
  for (Eigen::Index k = 0; k < lo.size(); ++k)
    if (!(lo[k] <= hi[k])) throw std::invalid_argument("box lower bound exceeds upper bound");
}

Box Box::unbounded(int n) {
  return Box(Eigen::VectorXd::Constant(n, -kInf), Eigen::VectorXd::Constant(n, kInf));
}

Box Box::cube(int n, double lo, double hi) {
  return Box(Eigen::VectorXd::Constant(n, lo), Eigen::VectorXd::Constant(n, hi));
}

bool Box::bounded() const { return lo.allFinite() && hi.allFinite(); }

bool Box::contains(const Point& x, double slack) const {
  for (Eigen::Index k = 0; k < lo.size(); ++k)
    if (x[k] < lo[k] - slack || x[k] > hi[k] + slack) return false;
  return true;
}

VectorFieldSystem::VectorFieldSystem(int n, int m, SigmaFn sigma, JacobianFn dsigma,
                                     std::string name)
    : n_(n),
      m_(m),
      sigma_(std::move(sigma)),
      dsigma_(std::move(dsigma)),
      name_(std::move(name)),
      domain_(Box::unbounded(n)) {
  if (n <= 0 || m <= 0) throw std::invalid_argument("system dimensions must be positive");
}

VectorFieldSystem VectorFieldSystem::with_fd_jacobian(int n, int m, SigmaFn sigma,
                                                      std::string name, double step) {
  JacobianFn dsigma = [sigma, n, m, step](const Point& x) {
    std::vector<Eigen::MatrixXd> J(m, Eigen::MatrixXd::Zero(n, n));
    Point y = x;
    for (int k = 0; k < n; ++k) {
      y[k] = x[k] + step;
      Eigen::MatrixXd sp = sigma(y);
      y[k] = x[k] - step;
      Eigen::MatrixXd sm = sigma(y);
      y[k] = x[k];
      for (int j = 0; j < m; ++j) J[j].col(k) = (sp.col(j) - sm.col(j)) / (2 * step);
    }
    return J;
  };
  return VectorFieldSystem(n, m, std::move(sigma), std::move(dsigma), std::move(name));
}

VectorFieldSystem VectorFieldSystem::from_polynomials(std::vector<PolynomialField> columns,
                                                      std::string name) {
  if (columns.empty()) throw std::invalid_argument("system needs at least one field");
  const int m = static_cast<int>(columns.size());
  const int n = static_cast<int>(columns[0].size());
  for (const auto& c : columns) {
    if (static_cast<int>(c.size()) != n) throw std::invalid_argument("field length mismatch");
    for (const auto& p : c)
      if (p.nvars() != n) throw std::invalid_argument("polynomial variable count mismatch");
  }
  // derivs[j][a][k] = d sigma^j_a / d x_k
  std::vector<std::vector<std::vector<Polynomial>>> derivs(m);
  for (int j = 0; j < m; ++j) {
    derivs[j].resize(n);
    for (int a = 0; a < n; ++a)
      for (int k = 0; k < n; ++k) derivs[j][a].push_back(columns[j][a].derivative(k));
  }
  SigmaFn sigma = [columns, n, m](const Point& x) {
    Eigen::MatrixXd s(n, m);
    for (int j = 0; j < m; ++j)
      for (int a = 0; a < n; ++a) s(a, j) = columns[j][a](x);
    return s;
  };
  JacobianFn dsigma = [derivs, n, m](const Point& x) {
    std::vector<Eigen::MatrixXd> J(m, Eigen::MatrixXd(n, n));
    for (int j = 0; j < m; ++j)
      for (int a = 0; a < n; ++a)
        for (int k = 0; k < n; ++k) J[j](a, k) = derivs[j][a][k](x);
    return J;
  };
  VectorFieldSystem sys(n, m, std::move(sigma), std::move(dsigma), std::move(name));
  sys.poly_ = std::make_shared<const std::vector<PolynomialField>>(std::move(columns));
  return sys;
}

Eigen::VectorXd VectorFieldSystem::field(int j, const Point& x) const {
  if (j < 0 || j >= m_) throw std::out_of_range("field index " + std::to_string(j));
  return sigma_(x).col(j);
}

VectorFieldSystem VectorFieldSystem::with_domain(Box box) const {
  if (box.dim() != n_) throw std::invalid_argument("domain dimension mismatch");
  VectorFieldSystem s = *this;
  s.domain_ = std::move(box);
  return s;
}

VectorFieldSystem VectorFieldSystem::with_evaluators(SigmaFn sigma, JacobianFn dsigma) const {
  VectorFieldSystem s = *this;
  s.sigma_ = std::move(sigma);
  s.dsigma_ = std::move(dsigma);
  return s;
}

VectorFieldSystem VectorFieldSystem::with_declared_step(int r) const {
  VectorFieldSystem s = *this;
  s.declared_step_ = r;
  return s;
}

const std::vector<PolynomialField>* VectorFieldSystem::polynomial_columns() const {
  return poly_.get();
}

namespace {

PolynomialField coordinate_field(int n, int axis, const Polynomial& coef) {
  PolynomialField f(n, Polynomial(n));
  f[axis] = coef;
  return f;
}

}  // namespace

VectorFieldSystem euclidean_system(int n) {
  std::vector<PolynomialField> cols;
  for (int j = 0; j < n; ++j) cols.push_back(coordinate_field(n, j, Polynomial::constant(n, 1.0)));
  std::string name = n == 2 ? "euclidean" : "euclidean:" + std::to_string(n);
  return VectorFieldSystem::from_polynomials(cols, name)
      .with_evaluators([n](const Point&) -> Eigen::MatrixXd { return Eigen::MatrixXd::Identity(n, n); },
                       [n](const Point&) {
                         return std::vector<Eigen::MatrixXd>(n, Eigen::MatrixXd::Zero(n, n));
                       })
      .with_declared_step(1);
}

VectorFieldSystem heisenberg_system() {
  const int n = 3;
  Polynomial one = Polynomial::constant(n, 1.0);
  PolynomialField X1{one, Polynomial(n), Polynomial::variable(n, 1) * -0.5};
  PolynomialField X2{Polynomial(n), one, Polynomial::variable(n, 0) * 0.5};
  auto sigma = [](const Point& x) -> Eigen::MatrixXd {
    Eigen::MatrixXd s(3, 2);
    s << 1, 0, 0, 1, -0.5 * x[1], 0.5 * x[0];
    return s;
  };
  auto dsigma = [](const Point&) {
    std::vector<Eigen::MatrixXd> d(2, Eigen::MatrixXd::Zero(3, 3));
    d[0](2, 1) = -0.5;
    d[1](2, 0) = 0.5;
    return d;
  };
  return VectorFieldSystem::from_polynomials({X1, X2}, "heisenberg1")
      .with_evaluators(sigma, dsigma)
      .with_declared_step(2);
}

VectorFieldSystem grushin_system() {
  const int n = 2;
  Polynomial one = Polynomial::constant(n, 1.0);
  PolynomialField X1{one, Polynomial(n)};
  PolynomialField X2{Polynomial(n), Polynomial::variable(n, 0)};
  auto sigma = [](const Point& x) -> Eigen::MatrixXd {
    Eigen::MatrixXd s(2, 2);
    s << 1, 0, 0, x[0];
    return s;
  };
  auto dsigma = [](const Point&) {
    std::vector<Eigen::MatrixXd> d(2, Eigen::MatrixXd::Zero(2, 2));
    d[1](1, 0) = 1.0;
    return d;
  };
  return VectorFieldSystem::from_polynomials({X1, X2}, "grushin")
      .with_evaluators(sigma, dsigma)
      .with_declared_step(2);
}

VectorFieldSystem make_preset_system(std::string_view name) {
  if (name == "euclidean") return euclidean_system(2);
  if (name.starts_with("euclidean:")) {
    std::string rest(name.substr(10));
    int n = 0;
    try {
      n = std::stoi(rest);
    } catch (const std::exception&) {
      throw ConfigError("system", "bad euclidean dimension '" + rest + "'");
    }
    if (n <= 0 || n > 8) throw ConfigError("system", "euclidean dimension must be in 1..8");
    return euclidean_system(n);
  }
  if (name == "heisenberg1" || name == "heisenberg") return heisenberg_system();
  if (name == "grushin") return grushin_system();
  throw ConfigError("system", "unknown preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_system_names() {
  return {"euclidean", "euclidean:<n>", "heisenberg1", "grushin"};
}

FieldFn lie_bracket(const VectorFieldSystem& sys, int i, int j) {
  const int m = sys.fields();
  if (i < 0 || i >= m || j < 0 || j >= m)
    throw std::out_of_range("bracket indices " + std::to_string(i) + ", " + std::to_string(j));
  return [sys, i, j](const Point& x) -> Eigen::VectorXd {
    Eigen::MatrixXd s = sys.sigma(x);
    std::vector<Eigen::MatrixXd> d = sys.dsigma(x);
    return d[j] * s.col(i) - d[i] * s.col(j);
  };
}

namespace {

struct TowerEntry {
  FieldFn value;
  std::optional<PolynomialField> poly;
};

// Fixed offsets around x used to decide whether two tower entries coincide.
std::vector<Point> dedup_samples(const Point& x) {
  const auto n = x.size();
  std::vector<Point> pts{x};
  const double offsets[] = {0.37, -0.61, 0.83, -0.29, 0.53};
  for (int s = 0; s < 5; ++s) {
    Point p = x;
    for (Eigen::Index k = 0; k < n; ++k) p[k] += offsets[(s + k) % 5] * (1 + 0.1 * k);
    pts.push_back(p);
  }
  return pts;
}

bool same_up_to_sign(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b) {
  double scale = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s) scale = std::max({scale, a[s].norm(), b[s].norm()});
  const double tol = 1e-10 * std::max(1.0, scale);
  bool plus = true;
  bool minus = true;
  for (std::size_t s = 0; s < a.size(); ++s) {
    plus = plus && (a[s] - b[s]).norm() <= tol;
    minus = minus && (a[s] + b[s]).norm() <= tol;
  }
  return plus || minus;
}

bool same_up_to_sign(const PolynomialField& a, const PolynomialField& b) {
  bool plus = true;
  bool minus = true;
  for (std::size_t k = 0; k < a.size(); ++k) {
    plus = plus && a[k] == b[k];
    minus = minus && a[k] == -b[k];
  }
  return plus || minus;
}

// Finite-difference step for brackets of the given order; larger at higher
// order because inner entries already carry difference error.
double bracket_step(int order) { return 1e-5 * std::pow(10.0, std::max(0, order - 3)); }

FieldFn numeric_bracket(const VectorFieldSystem& sys, int i, FieldFn Y, int order) {
  const double step = bracket_step(order);
  return [sys, i, Y, step](const Point& x) -> Eigen::VectorXd {
    Eigen::VectorXd v = sys.sigma(x).col(i);
    Eigen::VectorXd out = -sys.dsigma(x)[i] * Y(x);
    const double nv = v.norm();
    if (nv > 0) {
      const double s = step / nv;
      out += (Y(x + s * v) - Y(x - s * v)) / (2 * s);
    }
    return out;
  };
}

FieldFn polynomial_field_fn(const PolynomialField& f) {
  return [f](const Point& x) -> Eigen::VectorXd {
    Eigen::VectorXd v(static_cast<Eigen::Index>(f.size()));
    for (std::size_t a = 0; a < f.size(); ++a) v[static_cast<Eigen::Index>(a)] = f[a](x);
    return v;
  };
}

int numeric_rank(const Eigen::MatrixXd& M) {
  if (M.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0;
  int r = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s[k] > kRankTolerance * s[0]) ++r;
  return r;
}

}  // namespace

namespace {

std::vector<TowerField> build_tower(const VectorFieldSystem& sys, const Point& x, int max_order,
                                    bool stop_when_spanning) {
  if (max_order < 1) throw std::invalid_argument("max_order must be at least 1");
  if (x.size() != sys.dim()) throw std::invalid_argument("point dimension mismatch");
  const int n = sys.dim();
  const int m = sys.fields();
  const auto* poly = sys.polynomial_columns();
  const std::vector<Point> samples = dedup_samples(x);

  std::vector<TowerEntry> kept;
  std::vector<std::vector<Eigen::VectorXd>> kept_samples;
  std::vector<TowerField> out;

  // Returns true if the candidate is new (not zero, not a duplicate up to sign).
  auto admit = [&](TowerEntry e, int order) {
    std::vector<Eigen::VectorXd> vals;
    for (const auto& p : samples) vals.push_back(e.value(p));
    if (e.poly) {
      if (is_zero(*e.poly)) return false;
      for (const auto& k : kept)
        if (k.poly && same_up_to_sign(*k.poly, *e.poly)) return false;
    } else {
      double norm = 0.0;
      for (const auto& v : vals) norm = std::max(norm, v.norm());
      if (norm <= 1e-12) return false;
      for (const auto& ks : kept_samples)
        if (same_up_to_sign(ks, vals)) return false;
    }
    out.push_back({order, vals[0]});
    kept_samples.push_back(std::move(vals));
    kept.push_back(std::move(e));
    return true;
  };
  auto spanning = [&]() {
    Eigen::MatrixXd M(n, static_cast<Eigen::Index>(out.size()));
    for (std::size_t c = 0; c < out.size(); ++c) M.col(static_cast<Eigen::Index>(c)) = out[c].at_x;
    return numeric_rank(M) == n;
  };

  std::vector<std::size_t> previous;
  for (int j = 0; j < m; ++j) {
    TowerEntry e;
    if (poly) {
      e.poly = (*poly)[j];
      e.value = polynomial_field_fn(*e.poly);
    } else {
      e.value = [sys, j](const Point& p) -> Eigen::VectorXd { return sys.sigma(p).col(j); };
    }
    std::size_t before = kept.size();
    if (admit(std::move(e), 1)) previous.push_back(before);
  }
  for (int order = 2; order <= max_order && !previous.empty(); ++order) {
    if (stop_when_spanning && spanning()) break;
    std::vector<std::size_t> next;
    for (std::size_t idx : previous) {
      for (int i = 0; i < m; ++i) {
        TowerEntry e;
        if (poly && kept[idx].poly) {
          e.poly = bracket((*poly)[i], *kept[idx].poly);
          e.value = polynomial_field_fn(*e.poly);
        } else {
          e.value = numeric_bracket(sys, i, kept[idx].value, order);
        }
        std::size_t before = kept.size();
        if (admit(std::move(e), order)) next.push_back(before);
      }
    }
    previous = std::move(next);
  }
  return out;
}

}  // namespace

std::vector<TowerField> bracket_tower(const VectorFieldSystem& sys, const Point& x, int max_order) {
  return build_tower(sys, x, max_order, false);
}

RankResult hormander_rank(const VectorFieldSystem& sys, const Point& x, int max_order) {
  const int n = sys.dim();
  std::vector<TowerField> tower = build_tower(sys, x, max_order, true);
  RankResult result;
  result.fields_considered = static_cast<int>(tower.size());
  for (int order = 1; order <= max_order; ++order) {
    std::vector<Eigen::VectorXd> cols;
    for (const auto& f : tower)
      if (f.order <= order) cols.push_back(f.at_x);
    Eigen::MatrixXd M(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) M.col(static_cast<Eigen::Index>(c)) = cols[c];
    const int r = numeric_rank(M);
    result.rank_by_order.push_back(r);
    result.rank = r;
    if (r == n && !result.step) result.step = order;
  }
  return result;
}

namespace {

void check_inside(const VectorFieldSystem& sys, const Point& prev, const Point& next, double t0,
                  double dt) {
  const Box& box = sys.domain();
  if (box.contains(next)) return;
  // Exit time: first crossing of a violated face along the step chord.
  double frac = 1.0;
  for (Eigen::Index k = 0; k < next.size(); ++k) {
    double d = next[k] - prev[k];
    if (next[k] > box.hi[k] && d > 0) frac = std::min(frac, (box.hi[k] - prev[k]) / d);
    if (next[k] < box.lo[k] && d < 0) frac = std::min(frac, (box.lo[k] - prev[k]) / d);
  }
  throw FlowExitError(t0 + std::max(0.0, frac) * dt, prev);
}

}  // namespace

Point exp_flow(const VectorFieldSystem& sys, const Point& x, const HVector& h, int steps) {
  if (steps < 1) throw std::invalid_argument("steps must be at least 1");
  if (x.size() != sys.dim() || h.size() != sys.fields())
    throw std::invalid_argument("exp_flow dimension mismatch");
  if (h.isZero(0.0)) return x;
  if (!sys.domain().contains(x)) throw FlowExitError(0.0, x);
  const double dt = 1.0 / steps;
  Point y = x;
  for (int s = 0; s < steps; ++s) {
    Eigen::VectorXd k1 = sys.sigma(y) * h;
    Eigen::VectorXd k2 = sys.sigma(y + 0.5 * dt * k1) * h;
    Eigen::VectorXd k3 = sys.sigma(y + 0.5 * dt * k2) * h;
    Eigen::VectorXd k4 = sys.sigma(y + dt * k3) * h;
    Point next = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    check_inside(sys, y, next, s * dt, dt);
    y = std::move(next);
  }
  return y;
}

Eigen::MatrixXd flow_jacobian(const VectorFieldSystem& sys, const Point& x, const HVector& h,
                              int steps) {
  if (steps < 1) throw std::invalid_argument("steps must be at least 1");
  if (x.size() != sys.dim() || h.size() != sys.fields())
    throw std::invalid_argument("flow_jacobian dimension mismatch");
  const int n = sys.dim();
  if (h.isZero(0.0)) return Eigen::MatrixXd::Identity(n, n);
  if (!sys.domain().contains(x)) throw FlowExitError(0.0, x);

  auto rhs = [&](const Point& y, const Eigen::MatrixXd& J, Eigen::VectorXd& dy,
                 Eigen::MatrixXd& dJ) {
    dy = sys.sigma(y) * h;
    std::vector<Eigen::MatrixXd> d = sys.dsigma(y);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < sys.fields(); ++j) B += h[j] * d[j];
    dJ = B * J;
  };

  const double dt = 1.0 / steps;
  Point y = x;
  Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd k1, k2, k3, k4;
  Eigen::MatrixXd L1, L2, L3, L4;
  for (int s = 0; s < steps; ++s) {
    rhs(y, J, k1, L1);
    rhs(y + 0.5 * dt * k1, J + 0.5 * dt * L1, k2, L2);
    rhs(y + 0.5 * dt * k2, J + 0.5 * dt * L2, k3, L3);
    rhs(y + dt * k3, J + dt * L3, k4, L4);
    Point next = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    check_inside(sys, y, next, s * dt, dt);
    y = std::move(next);
    J += dt / 6.0 * (L1 + 2 * L2 + 2 * L3 + L4);
  }
  return J;
}

Diffeomorphism identity_map(int n) {
  Diffeomorphism d;
  d.forward = [](const Point& x) { return x; };
  d.inverse = [](const Point& x) { return x; };
  d.jacobian = [n](const Point&) { return Eigen::MatrixXd::Identity(n, n); };
  d.identity = true;
  return d;
}

Diffeomorphism translation_map(const Eigen::VectorXd& v) {
  const auto n = v.size();
  Diffeomorphism d;
  d.forward = [v](const Point& x) -> Point { return x + v; };
  d.inverse = [v](const Point& x) -> Point { return x - v; };
  d.jacobian = [n](const Point&) { return Eigen::MatrixXd::Identity(n, n); };
  d.identity = v.isZero(0.0);
  return d;
}

Diffeomorphism flow_map(const VectorFieldSystem& sys, const HVector& h, int steps) {
  Diffeomorphism d;
  d.forward = [sys, h, steps](const Point& x) { return exp_flow(sys, x, h, steps); };
  d.inverse = [sys, h, steps](const Point& x) { return exp_flow(sys, x, HVector(-h), steps); };
  d.jacobian = [sys, h, steps](const Point& x) { return flow_jacobian(sys, x, h, steps); };
  d.identity = h.isZero(0.0);
  return d;
}

VectorFieldSystem pullback_system(const VectorFieldSystem& sys, Diffeomorphism theta,
                                  double fd_step) {
  if (theta.identity) return sys;
  const int n = sys.dim();
  const int m = sys.fields();
  VectorFieldSystem::SigmaFn sigma = [sys, theta](const Point& t) -> Eigen::MatrixXd {
    Eigen::MatrixXd J = theta.jacobian(t);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    if (!(lu.rcond() > 1e-13)) throw SingularJacobianError("pullback Jacobian is singular");
    return lu.solve(sys.sigma(theta.forward(t)));
  };
  VectorFieldSystem out = VectorFieldSystem::with_fd_jacobian(
      n, m, sigma, sys.name().empty() ? "pullback" : sys.name() + ":pullback", fd_step);
  return out.with_domain(sys.domain());
}

}  // namespace sublab
