#pragma once

#include <functional>
#include <string>

#include "sublab/polynomial.hpp"
#include "sublab/types.hpp"

namespace sublab {

// A twice differentiable scalar function on the domain. Missing derivatives
// fall back to central differences.
struct SmoothFunction {
  std::function<double(const Point&)> value;
  std::function<Eigen::VectorXd(const Point&)> gradient;
  std::function<Eigen::MatrixXd(const Point&)> hessian;

  double operator()(const Point& x) const { return value(x); }
  Eigen::VectorXd grad(const Point& x) const;
  Eigen::MatrixXd hess(const Point& x) const;

  static SmoothFunction from_callable(std::function<double(const Point&)> f);
  static SmoothFunction from_polynomial(const Polynomial& p);
};

// Scalar profile h with first and second derivatives.
struct ScalarProfile {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;

  static ScalarProfile identity();
  // u + a (u - c)^2
  static ScalarProfile quadratic(double a, double c);
  // u + a (u - c)^3, intended for u >= c
  static ScalarProfile cubic(double a, double c);
  // u + a (exp(b (u - c)) - 1 - b (u - c))
  static ScalarProfile exponential(double a, double b, double c);
};

// h o w with exact chain-rule derivatives.
SmoothFunction compose(const ScalarProfile& h, const SmoothFunction& w);
// w + <p, x>
SmoothFunction add_linear(const SmoothFunction& w, const Eigen::VectorXd& p);
SmoothFunction operator+(const SmoothFunction& a, const SmoothFunction& b);
SmoothFunction operator*(double s, const SmoothFunction& a);

}  // namespace sublab
