#include "sublab/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sublab {

Polynomial::Polynomial(int nvars) : nvars_(nvars) {
  if (nvars < 0) throw std::invalid_argument("negative variable count");
}

Polynomial Polynomial::constant(int nvars, double c) {
  Polynomial p(nvars);
  p.add_term(Exponents(nvars, 0), c);
  return p;
}

Polynomial Polynomial::variable(int nvars, int k) {
  if (k < 0 || k >= nvars) throw std::out_of_range("variable index");
  Polynomial p(nvars);
  Exponents e(nvars, 0);
  e[k] = 1;
  p.add_term(e, 1.0);
  return p;
}

Polynomial Polynomial::from_table(int nvars, const std::vector<std::vector<double>>& rows) {
  Polynomial p(nvars);
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != nvars + 1)
      throw std::invalid_argument("polynomial row needs coefficient plus " +
                                  std::to_string(nvars) + " exponents");
    Exponents e(nvars);
    for (int k = 0; k < nvars; ++k) {
      double v = row[k + 1];
      if (v < 0 || v != std::floor(v)) throw std::invalid_argument("exponents must be natural numbers");
      e[k] = static_cast<int>(v);
    }
    p.add_term(e, row[0]);
  }
  return p;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [e, c] : terms_) {
    int s = 0;
    for (int v : e) s += v;
    d = std::max(d, s);
  }
  return d;
}

void Polynomial::add_term(const Exponents& e, double c) {
  if (static_cast<int>(e.size()) != nvars_) throw std::invalid_argument("exponent length");
  if (c == 0.0) return;
  auto it = terms_.find(e);
  if (it == terms_.end()) {
    terms_.emplace(e, c);
  } else {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double Polynomial::operator()(const double* x) const {
  double sum = 0.0;
  for (const auto& [e, c] : terms_) {
    double t = c;
    for (int k = 0; k < nvars_; ++k)
      for (int j = 0; j < e[k]; ++j) t *= x[k];
    sum += t;
  }
  return sum;
}

Polynomial Polynomial::derivative(int k) const {
  if (k < 0 || k >= nvars_) throw std::out_of_range("derivative index");
  Polynomial d(nvars_);
  for (const auto& [e, c] : terms_) {
    if (e[k] == 0) continue;
    Exponents f = e;
    f[k] -= 1;
    d.add_term(f, c * e[k]);
  }
  return d;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  if (o.nvars_ != nvars_) throw std::invalid_argument("variable count mismatch");
  Polynomial r = *this;
  for (const auto& [e, c] : o.terms_) r.add_term(e, c);
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + (-o); }

Polynomial Polynomial::operator*(const Polynomial& o) const {
  if (o.nvars_ != nvars_) throw std::invalid_argument("variable count mismatch");
  Polynomial r(nvars_);
  for (const auto& [e1, c1] : terms_)
    for (const auto& [e2, c2] : o.terms_) {
      Exponents e(nvars_);
      for (int k = 0; k < nvars_; ++k) e[k] = e1[k] + e2[k];
      r.add_term(e, c1 * c2);
    }
  return r;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial r(nvars_);
  for (const auto& [e, c] : terms_) r.add_term(e, c * s);
  return r;
}

bool Polynomial::operator==(const Polynomial& o) const {
  return nvars_ == o.nvars_ && terms_ == o.terms_;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [e, c] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << c;
    for (int k = 0; k < nvars_; ++k)
      if (e[k] > 0) os << "*x" << k << (e[k] > 1 ? "^" + std::to_string(e[k]) : "");
  }
  return os.str();
}

PolynomialField bracket(const PolynomialField& X, const PolynomialField& Y) {
  const std::size_t n = X.size();
  if (Y.size() != n) throw std::invalid_argument("field dimension mismatch");
  PolynomialField out;
  out.reserve(n);
  for (std::size_t a = 0; a < n; ++a) {
    Polynomial acc(X[a].nvars());
    for (std::size_t b = 0; b < n; ++b) {
      acc = acc + Y[a].derivative(static_cast<int>(b)) * X[b];
      acc = acc - X[a].derivative(static_cast<int>(b)) * Y[b];
    }
    out.push_back(acc);
  }
  return out;
}

bool is_zero(const PolynomialField& f) {
  return std::all_of(f.begin(), f.end(), [](const Polynomial& p) { return p.is_zero(); });
}

}  // namespace sublab
