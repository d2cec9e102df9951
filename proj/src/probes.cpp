#include "sublab/probes.hpp"

#include <algorithm>
#include <random>

#include "sublab/smooth_function.hpp"

namespace sublab {

namespace {

Polynomial random_quadratic(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Polynomial p = Polynomial::constant(n, g(rng));
  for (int a = 0; a < n; ++a) {
    p = p + Polynomial::variable(n, a) * g(rng);
    for (int b = a; b < n; ++b) p = p + Polynomial::variable(n, a) * Polynomial::variable(n, b) * g(rng);
  }
  return p;
}

Point random_point(const Box& region, std::mt19937_64& rng) {
  Point x(region.dim());
  for (int a = 0; a < region.dim(); ++a)
    x[a] = std::uniform_real_distribution<double>(region.lo[a], region.hi[a])(rng);
  return x;
}

void tally(ProbeSuiteResult& r, double margin, bool ok) {
  ++r.configurations;
  r.margins.push_back(margin);
  r.worst_margin = std::min(r.worst_margin, margin);
  if (!ok) ++r.failures;
}

}  // namespace

ProbeSuiteResult chain_rule_suite(const QuasilinearOperator& op, const VectorFieldSystem& sys,
                                  const Box& region, int configurations, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ProbeSuiteResult r;
  for (int k = 0; k < configurations; ++k) {
    const SmoothFunction omega = SmoothFunction::from_polynomial(random_quadratic(sys.dim(), rng));
    const Point x0 = random_point(region, rng);
    // c below omega(x0) keeps h' >= 1 and h'' >= 0 there.
    const double c = omega(x0) - unit(rng);
    const double a = 0.1 + 0.9 * unit(rng);
    ScalarProfile h;
    switch (k % 3) {
      case 0: h = ScalarProfile::quadratic(a, c); break;
      case 1: h = ScalarProfile::cubic(a, c); break;
      default: h = ScalarProfile::exponential(a, 0.5 + 1.5 * unit(rng), c); break;
    }
    const BoundCheck b = chain_rule_bound_probe(op, sys, omega, h, x0);
    tally(r, b.margin, b.holds);
  }
  return r;
}

ProbeSuiteResult perturbation_suite(const QuasilinearOperator& op, const VectorFieldSystem& sys,
                                    const Box& region, int configurations, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ProbeSuiteResult r;
  for (int k = 0; k < configurations; ++k) {
    const SmoothFunction w = SmoothFunction::from_polynomial(random_quadratic(sys.dim(), rng));
    const Point x = random_point(region, rng);
    Eigen::VectorXd p(sys.dim());
    for (int a = 0; a < sys.dim(); ++a) p[a] = g(rng);
    p *= unit(rng) / p.norm();
    const PerturbationBound b = linear_perturbation_bound_probe(op, sys, w, p, x, seed + k);
    tally(r, b.margin(), b.holds());
  }
  return r;
}

}  // namespace sublab
