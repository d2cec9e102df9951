#include "sublab/smooth_function.hpp"

#include <cmath>

namespace sublab {

namespace {
constexpr double kGradStep = 1e-6;
constexpr double kHessFromGradStep = 1e-5;
constexpr double kHessFromValueStep = 1e-4;
}  // namespace

Eigen::VectorXd SmoothFunction::grad(const Point& x) const {
  if (gradient) return gradient(x);
  const auto n = x.size();
  Eigen::VectorXd g(n);
  Point y = x;
  for (Eigen::Index k = 0; k < n; ++k) {
    y[k] = x[k] + kGradStep;
    double fp = value(y);
    y[k] = x[k] - kGradStep;
    double fm = value(y);
    y[k] = x[k];
    g[k] = (fp - fm) / (2 * kGradStep);
  }
  return g;
}

Eigen::MatrixXd SmoothFunction::hess(const Point& x) const {
  if (hessian) return hessian(x);
  const auto n = x.size();
  Eigen::MatrixXd H(n, n);
  Point y = x;
  if (gradient) {
    for (Eigen::Index k = 0; k < n; ++k) {
      y[k] = x[k] + kHessFromGradStep;
      Eigen::VectorXd gp = gradient(y);
      y[k] = x[k] - kHessFromGradStep;
      Eigen::VectorXd gm = gradient(y);
      y[k] = x[k];
      H.col(k) = (gp - gm) / (2 * kHessFromGradStep);
    }
    return 0.5 * (H + H.transpose());
  }
  const double s = kHessFromValueStep;
  const double f0 = value(x);
  for (Eigen::Index a = 0; a < n; ++a) {
    y[a] = x[a] + s;
    double fp = value(y);
    y[a] = x[a] - s;
    double fm = value(y);
    y[a] = x[a];
    H(a, a) = (fp - 2 * f0 + fm) / (s * s);
    for (Eigen::Index b = a + 1; b < n; ++b) {
      double acc = 0.0;
      for (int sa : {1, -1})
        for (int sb : {1, -1}) {
          y[a] = x[a] + sa * s;
          y[b] = x[b] + sb * s;
          acc += sa * sb * value(y);
        }
      y[a] = x[a];
      y[b] = x[b];
      H(a, b) = H(b, a) = acc / (4 * s * s);
    }
  }
  return H;
}

SmoothFunction SmoothFunction::from_callable(std::function<double(const Point&)> f) {
  SmoothFunction s;
  s.value = std::move(f);
  return s;
}

SmoothFunction SmoothFunction::from_polynomial(const Polynomial& p) {
  const int n = p.nvars();
  std::vector<Polynomial> g;
  std::vector<std::vector<Polynomial>> h(n);
  for (int a = 0; a < n; ++a) g.push_back(p.derivative(a));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) h[a].push_back(g[a].derivative(b));
  SmoothFunction s;
  s.value = [p](const Point& x) { return p(x); };
  s.gradient = [g, n](const Point& x) {
    Eigen::VectorXd v(n);
    for (int a = 0; a < n; ++a) v[a] = g[a](x);
    return v;
  };
  s.hessian = [h, n](const Point& x) {
    Eigen::MatrixXd m(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) m(a, b) = h[a][b](x);
    return m;
  };
  return s;
}

ScalarProfile ScalarProfile::identity() {
  return {"identity", [](double u) { return u; }, [](double) { return 1.0; },
          [](double) { return 0.0; }};
}

ScalarProfile ScalarProfile::quadratic(double a, double c) {
  return {"quadratic", [a, c](double u) { return u + a * (u - c) * (u - c); },
          [a, c](double u) { return 1 + 2 * a * (u - c); }, [a](double) { return 2 * a; }};
}

ScalarProfile ScalarProfile::cubic(double a, double c) {
  return {"cubic", [a, c](double u) { return u + a * std::pow(u - c, 3); },
          [a, c](double u) { return 1 + 3 * a * (u - c) * (u - c); },
          [a, c](double u) { return 6 * a * (u - c); }};
}

ScalarProfile ScalarProfile::exponential(double a, double b, double c) {
  return {"exponential",
          [a, b, c](double u) { return u + a * (std::exp(b * (u - c)) - 1 - b * (u - c)); },
          [a, b, c](double u) { return 1 + a * b * (std::exp(b * (u - c)) - 1); },
          [a, b, c](double u) { return a * b * b * std::exp(b * (u - c)); }};
}

SmoothFunction compose(const ScalarProfile& h, const SmoothFunction& w) {
  SmoothFunction s;
  s.value = [h, w](const Point& x) { return h.value(w(x)); };
  s.gradient = [h, w](const Point& x) -> Eigen::VectorXd { return h.d1(w(x)) * w.grad(x); };
  s.hessian = [h, w](const Point& x) -> Eigen::MatrixXd {
    const double u = w(x);
    Eigen::VectorXd g = w.grad(x);
    return h.d1(u) * w.hess(x) + h.d2(u) * g * g.transpose();
  };
  return s;
}

SmoothFunction add_linear(const SmoothFunction& w, const Eigen::VectorXd& p) {
  SmoothFunction s;
  s.value = [w, p](const Point& x) { return w(x) + p.dot(x); };
  s.gradient = [w, p](const Point& x) -> Eigen::VectorXd { return w.grad(x) + p; };
  s.hessian = [w](const Point& x) -> Eigen::MatrixXd { return w.hess(x); };
  return s;
}

SmoothFunction operator+(const SmoothFunction& a, const SmoothFunction& b) {
  SmoothFunction s;
  s.value = [a, b](const Point& x) { return a(x) + b(x); };
  s.gradient = [a, b](const Point& x) -> Eigen::VectorXd { return a.grad(x) + b.grad(x); };
  s.hessian = [a, b](const Point& x) -> Eigen::MatrixXd { return a.hess(x) + b.hess(x); };
  return s;
}

SmoothFunction operator*(double k, const SmoothFunction& a) {
  SmoothFunction s;
  s.value = [k, a](const Point& x) { return k * a(x); };
  s.gradient = [k, a](const Point& x) -> Eigen::VectorXd { return k * a.grad(x); };
  s.hessian = [k, a](const Point& x) -> Eigen::MatrixXd { return k * a.hess(x); };
  return s;
}

}  // namespace sublab
