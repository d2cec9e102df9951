#pragma once

#include <map>
#include <string>
#include <vector>

#include "sublab/types.hpp"

namespace sublab {

// Sparse multivariate polynomial with real coefficients.
class Polynomial {
 public:
  using Exponents = std::vector<int>;

  explicit Polynomial(int nvars = 0);

  static Polynomial constant(int nvars, double c);
  static Polynomial variable(int nvars, int k);
  // Rows of the form [coef, e_1, ..., e_n].
  static Polynomial from_table(int nvars, const std::vector<std::vector<double>>& rows);

  int nvars() const { return nvars_; }
  int degree() const;
  bool is_zero() const { return terms_.empty(); }
  const std::map<Exponents, double>& terms() const { return terms_; }

  void add_term(const Exponents& e, double c);

  double operator()(const double* x) const;
  double operator()(const Point& x) const { return (*this)(x.data()); }

  Polynomial derivative(int k) const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(double s) const;
  Polynomial operator-() const { return (*this) * -1.0; }
  bool operator==(const Polynomial& o) const;

  std::string to_string() const;

 private:
  int nvars_;
  std::map<Exponents, double> terms_;
};

// A polynomial vector field: one polynomial per coordinate.
using PolynomialField = std::vector<Polynomial>;

// Jacobian-vector bracket [X, Y] = DY X - DX Y.
PolynomialField bracket(const PolynomialField& X, const PolynomialField& Y);
bool is_zero(const PolynomialField& f);

}  // namespace sublab
