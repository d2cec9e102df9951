#include <doctest.h>

#include "oracles/heisenberg_fundamental.hpp"
#include "sublab/errors.hpp"
#include "sublab/grid.hpp"
#include "sublab/metric.hpp"
#include "sublab/operator.hpp"
#include "sublab/probes.hpp"
#include "sublab/stats.hpp"
#include "test_util.hpp"

using namespace sublab;
using testutil::pt;

namespace {

SmoothFunction poly(int n, const std::vector<std::vector<double>>& rows) {
  return SmoothFunction::from_polynomial(Polynomial::from_table(n, rows));
}

SmoothFunction fundamental() {
  SmoothFunction f;
  f.value = [](const Point& p) { return oracle::fundamental_u(p[0], p[1], p[2]); };
  f.gradient = [](const Point& p) {
    Eigen::VectorXd g(3);
    oracle::fundamental_gradient(p[0], p[1], p[2], g.data());
    return g;
  };
  f.hessian = [](const Point& p) {
    Eigen::Matrix3d h;
    oracle::fundamental_hessian(p[0], p[1], p[2], h.data());
    return Eigen::MatrixXd(h);
  };
  return f;
}

Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, int m, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd x(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) x(i, j) = g(rng);
  return (x + x.transpose()) / 2;
}

Eigen::MatrixXd random_psd(std::mt19937_64& rng, int m) {
  const Eigen::MatrixXd b = random_symmetric(rng, m);
  return b * b.transpose();
}

const char* kPresets[] = {"sublaplacian", "infinity", "pnorm:4"};

}  // namespace

TEST_CASE("horizontal jet") {
  SUBCASE("euclidean linear function") {
    const auto sys = euclidean_system(3);
    const HorizontalJet j = horizontal_jet(sys, poly(3, {{2, 1, 0, 0}, {-1, 0, 1, 0}, {0.5, 0, 0, 1}}),
                                           pt({0.3, 0.1, -0.4}));
    CHECK((j.grad - pt({2, -1, 0.5})).norm() < 1e-14);
    CHECK(testutil::max_abs(j.hess) < 1e-14);
  }
  SUBCASE("heisenberg vertical coordinate at the origin") {
    const HorizontalJet j = horizontal_jet(heisenberg_system(), poly(3, {{1, 0, 0, 1}}), pt({0, 0, 0}));
    CHECK(j.grad.norm() < 1e-15);
    const HorizontalJet k = horizontal_jet(heisenberg_system(), poly(3, {{1, 0, 0, 1}}), pt({0.4, 0.6, 0}));
    CHECK((k.grad - pt({-0.3, 0.2})).norm() < 1e-14);
  }
  SUBCASE("heisenberg hess diagonal matches flow second differences") {
    const auto sys = heisenberg_system();
    const SmoothFunction u = poly(3, {{1, 2, 0, 0}, {1, 0, 2, 0}, {1, 1, 0, 1}});
    std::mt19937_64 rng(30);
    for (int k = 0; k < 10; ++k) {
      const Point x = testutil::random_point(rng, 3, -1, 1);
      const HorizontalJet j = horizontal_jet(sys, u, x);
      CHECK((j.hess - j.hess.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
      for (int i = 0; i < 2; ++i) {
        std::vector<double> steps, errors;
        for (double s : {0.1, 0.05, 0.025}) {
          HVector e = HVector::Zero(2);
          e[i] = s;
          const double d2 = (u(exp_flow(sys, x, e)) - 2 * u(x) + u(exp_flow(sys, x, -e))) / (s * s);
          steps.push_back(s);
          errors.push_back(std::abs(d2 - j.hess(i, i)) + 1e-300);
        }
        if (errors.front() > 1e-10) CHECK(loglog_slope(steps, errors) >= 1.9);
        CHECK(errors.back() < 1e-3);
      }
    }
  }
  SUBCASE("grid path agrees with the smooth path on quadratics") {
    const auto sys = heisenberg_system();
    const SmoothFunction u = poly(3, {{1, 2, 0, 0}, {-1, 0, 2, 0}, {0.5, 0, 0, 1}});
    const Grid g = Grid::cube(3, -1, 1, 9);
    const GridFunction f = GridFunction::sample(g, u.value);
    const std::size_t node = g.index(std::vector<int>{3, 5, 4});
    const HorizontalJet a = horizontal_jet(sys, f, node);
    const HorizontalJet b = horizontal_jet(sys, u, g.point(node));
    CHECK((a.grad - b.grad).norm() < 1e-12);
    CHECK(testutil::max_abs(a.hess - b.hess) < 1e-11);
    CHECK_THROWS_AS(horizontal_jet(sys, f, 0), BoundaryStencilError);
  }
}

TEST_CASE("evaluate operator") {
  const SmoothFunction half_square = poly(2, {{0.5, 2, 0}, {0.5, 0, 2}});
  CHECK(evaluate_operator(sublaplacian_operator(), euclidean_system(2), half_square, pt({0.3, -0.8})) ==
        doctest::Approx(-2.0).epsilon(1e-14));

  SUBCASE("zero gradient rule") {
    const QuasilinearOperator inf = infinity_operator();
    HorizontalJet jet{HVector::Zero(2), Eigen::MatrixXd::Identity(2, 2), pt({0, 0})};
    const OperatorValue v = apply_operator(inf, jet);
    CHECK(v.value == 0.0);
    CHECK(v.degenerate);
    CHECK(evaluate_operator(inf, euclidean_system(2), half_square, pt({0, 0})) == 0.0);
  }

  SUBCASE("fundamental solution of the heisenberg sub-laplacian") {
    double g[3];
    oracle::fundamental_gradient(0.3, -0.7, 0.4, g);
    for (int i = 0; i < 3; ++i) CHECK(g[i] == doctest::Approx(oracle::kSpotGradient[i]).epsilon(1e-14));
    const SmoothFunction u = fundamental();
    const SmoothFunction u_fd = SmoothFunction::from_callable(u.value);
    CHECK((u_fd.grad(pt({0.3, -0.7, 0.4})) - Eigen::Map<const Eigen::Vector3d>(oracle::kSpotGradient)).norm() < 1e-6);

    const auto sys = heisenberg_system();
    const QuasilinearOperator op = sublaplacian_operator();
    std::mt19937_64 rng(31);
    int checked = 0;
    while (checked < 200) {
      const Point x = testutil::random_point(rng, 3, -1.5, 1.5);
      if (heisenberg_gauge(x) < 0.5) continue;
      CHECK(std::abs(evaluate_operator(op, sys, u, x)) <= 1e-6);
      ++checked;
    }
  }
}

TEST_CASE("linearization") {
  SUBCASE("sub-laplacian") {
    const Linearization l = linearize_at(sublaplacian_operator(), heisenberg_system(),
                                         poly(3, {{1, 2, 0, 0}, {1, 1, 0, 1}}), pt({0.2, 0.3, -0.1}));
    CHECK(testutil::max_abs(l.second_order - Eigen::MatrixXd::Identity(2, 2)) < 1e-9);
    CHECK(l.first_order.norm() < 1e-9);
  }
  SUBCASE("infinity laplacian at grad e1") {
    const Linearization l = linearize_at(infinity_operator(), euclidean_system(2),
                                         poly(2, {{1, 1, 0}}), pt({0.1, 0.2}));
    Eigen::MatrixXd e11 = Eigen::MatrixXd::Zero(2, 2);
    e11(0, 0) = 1;
    CHECK(testutil::max_abs(l.second_order - e11) < 1e-9);
    CHECK(l.first_order.norm() < 1e-9);
  }
  SUBCASE("infinity laplacian first-order term from D A") {
    // u = x + y^2/2 at (0, 0): grad (1, 0), hess diag(0, 1); <DA[v], X> = 2 v . X xi = 0.
    // u = x + x y at (0, 0): hess offdiag 1, so the first-order term is -2 X xi = (0, -2).
    const Linearization l = linearize_at(infinity_operator(), euclidean_system(2),
                                         poly(2, {{1, 1, 0}, {1, 1, 1}}), pt({0, 0}));
    CHECK((l.first_order - pt({0, -2})).norm() < 1e-6);
  }
  SUBCASE("nondifferentiable at zero gradient") {
    CHECK_THROWS_AS(linearize_at(infinity_operator(), euclidean_system(2), poly(2, {{1, 2, 0}}), pt({0, 0})),
                    NondifferentiableError);
    CHECK_THROWS_AS(linearize_at(pnorm_operator(3), euclidean_system(2), poly(2, {{1, 2, 0}}), pt({0, 0})),
                    NondifferentiableError);
  }
  SUBCASE("directional consistency") {
    const auto sys = heisenberg_system();
    const SmoothFunction u = poly(3, {{1, 2, 0, 0}, {-1, 0, 2, 0}, {0.5, 0, 0, 1}, {0.3, 1, 0, 0}});
    const SmoothFunction v = poly(3, {{1, 1, 1, 0}, {0.7, 0, 0, 2}, {-0.4, 0, 1, 0}});
    const Point x = pt({0.3, -0.2, 0.1});
    for (const char* name : kPresets) {
      const QuasilinearOperator op = make_preset_operator(name);
      const Linearization l = linearize_at(op, sys, u, x);
      const double pv = l.apply(horizontal_jet(sys, v, x));
      const double lu = evaluate_operator(op, sys, u, x);
      std::vector<double> ss, errs;
      for (int k = 2; k <= 5; ++k) {
        const double s = std::pow(10.0, -k);
        const double q = (evaluate_operator(op, sys, u + s * v, x) - lu) / s;
        ss.push_back(s);
        errs.push_back(std::abs(q - pv));
      }
      CAPTURE(name);
      if (errs.front() < 1e-9) {
        CHECK(errs.back() < 1e-8);  // linear operator: exact up to rounding
      } else {
        CHECK(loglog_slope(ss, errs) >= 0.9);
      }
    }
  }
}

TEST_CASE("structure conditions") {
  SUBCASE("sub-laplacian with phi(s) = s holds with zero margins") {
    const StructureReport r = check_structure(sublaplacian_operator("power:1"), 2, 10000, {1, 10}, {0.1, 10}, 1);
    CHECK(r.passed());
    CHECK(std::abs(r.worst_diffusion_margin) < 1e-9);
    CHECK(std::abs(r.worst_drift_margin) < 1e-12);
  }
  SUBCASE("infinity laplacian with phi(s) = s^3 holds") {
    const StructureReport r = check_structure(infinity_operator("power:3"), 2, 10000, {1, 10}, {0.1, 10}, 2);
    CHECK(r.passed());
    CHECK(r.min_eigenvalue >= -1e-10);
    CHECK(r.min_ellipticity > 0);
  }
  SUBCASE("infinity laplacian with phi(s) = s fails") {
    const StructureReport r = check_structure(infinity_operator("power:1"), 2, 10000, {1, 10}, {0.1, 10}, 3);
    CHECK_FALSE(r.passed());
    CHECK(r.violations.front().check == "diffusion_scaling");
  }
  SUBCASE("normalized p-laplacian with phi(s) = s holds") {
    const StructureReport r = check_structure(pnorm_operator(4), 3, 2000, {1, 10}, {0.1, 10}, 4);
    CHECK(r.passed());
  }
}

TEST_CASE("growth lower bound") {
  std::mt19937_64 rng(32);
  std::vector<HVector> xis;
  for (int k = 0; k < 500; ++k) {
    HVector v = testutil::random_point(rng, 2, -1, 1).normalized();
    xis.push_back(v * std::uniform_real_distribution<double>(1, 20)(rng));
  }
  const GrowthReport sub = growth_lower_bound(sublaplacian_operator(), 1.0, xis);
  CHECK(sub.passed());
  CHECK(sub.a_theta == doctest::Approx(1.0).epsilon(1e-12));
  const GrowthReport inf = growth_lower_bound(infinity_operator("power:3"), 1.0, xis);
  CHECK(inf.passed());
  CHECK(inf.a_theta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(inf.checked == 500);

  xis.push_back(pt({0.1, 0.2}));
  const GrowthReport flagged = growth_lower_bound(sublaplacian_operator(), 1.0, xis);
  CHECK(flagged.rejected == 1);
  CHECK(flagged.checked == 500);
}

TEST_CASE("chain rule bound") {
  const auto heis = heisenberg_system();
  SUBCASE("identity profile is exact") {
    const SmoothFunction omega = poly(3, {{1, 2, 0, 0}, {1, 0, 1, 1}});
    const BoundCheck b = chain_rule_bound_probe(sublaplacian_operator(), heis, omega, ScalarProfile::identity(),
                                                pt({0.2, 0.4, -0.3}));
    CHECK(b.lhs == doctest::Approx(b.rhs).epsilon(1e-12));
    CHECK(b.holds);
  }
  SUBCASE("sub-laplacian with h(u) = u + u^2") {
    const SmoothFunction omega = poly(2, {{0.5, 2, 0}, {0.5, 0, 2}});
    const BoundCheck b = chain_rule_bound_probe(sublaplacian_operator(), euclidean_system(2), omega,
                                                ScalarProfile::quadratic(1.0, 0.0), pt({0.5, 0.3}));
    CHECK(b.holds);
    CHECK(b.margin > 0);
  }
  SUBCASE("infinity laplacian with the proof's quadratic perturbation") {
    const SmoothFunction omega = poly(3, {{1, 2, 0, 0}, {1, 0, 1, 1}, {-0.5, 0, 2, 0}});
    std::mt19937_64 rng(33);
    for (double lambda : {0.01, 0.1}) {
      for (int k = 0; k < 20; ++k) {
        const Point x = testutil::random_point(rng, 3, -1, 1);
        const double min_u = omega(x) - std::uniform_real_distribution<double>(0, 2)(rng);
        const BoundCheck b = chain_rule_bound_probe(infinity_operator(), heis, omega,
                                                    ScalarProfile::quadratic(lambda, min_u), x);
        CHECK(b.holds);
      }
    }
  }
  SUBCASE("randomized suites") {
    for (const char* name : kPresets) {
      CAPTURE(name);
      const ProbeSuiteResult r = chain_rule_suite(make_preset_operator(name), heis, Box::cube(3, -1, 1), 50, 7);
      CHECK(r.configurations == 50);
      CHECK(r.passed());
      CHECK(r.worst_margin >= 0);
    }
  }
}

TEST_CASE("linear perturbation bound") {
  const auto heis = heisenberg_system();
  const SmoothFunction w = poly(3, {{1, 2, 0, 0}, {-1, 0, 2, 0}});
  SUBCASE("p = 0") {
    const PerturbationBound b = linear_perturbation_bound_probe(pnorm_operator(4), heis, w, Eigen::VectorXd::Zero(3),
                                                                pt({0.2, 0.1, 0.3}));
    CHECK(b.deviation == 0.0);
    CHECK(b.holds());
  }
  SUBCASE("sub-laplacian on euclidean space") {
    const PerturbationBound b = linear_perturbation_bound_probe(
        sublaplacian_operator(), euclidean_system(2), poly(2, {{1, 2, 0}, {-1, 0, 2}}), pt({0.3, 0.4}), pt({0.2, 0.1}));
    CHECK(b.deviation < 1e-12);
    CHECK(b.holds());
  }
  SUBCASE("sub-laplacian on heisenberg") {
    const PerturbationBound b =
        linear_perturbation_bound_probe(sublaplacian_operator(), heis, w, pt({0.1, -0.2, 0.5}), pt({0.2, 0.1, 0.3}));
    CHECK(b.omega_A == 0.0);
    CHECK(b.holds());
  }
  SUBCASE("normalized p-laplacian with |p| = 0.1") {
    const PerturbationBound b =
        linear_perturbation_bound_probe(pnorm_operator(4), heis, w, pt({0.06, 0.0, 0.08}), pt({0.4, 0.2, 0.1}));
    MESSAGE("deviation " << b.deviation << " bound " << b.bound);
    CHECK(b.holds());
    CHECK(b.margin() >= 0);
  }
  SUBCASE("randomized suites") {
    for (const char* name : kPresets) {
      CAPTURE(name);
      const ProbeSuiteResult r = perturbation_suite(make_preset_operator(name), heis, Box::cube(3, -1, 1), 50, 8);
      CHECK(r.configurations == 50);
      CHECK(r.passed());
    }
  }
}

TEST_CASE("monotone in the hessian slot") {
  std::mt19937_64 rng(34);
  for (int k = 0; k < 100; ++k) {
    const Eigen::MatrixXd a = random_psd(rng, 3);
    const Eigen::MatrixXd y = random_symmetric(rng, 3);
    const Eigen::MatrixXd x = y + random_psd(rng, 3);
    CHECK(-(a.cwiseProduct(x)).sum() <= -(a.cwiseProduct(y)).sum() + 1e-12);
  }
}

TEST_CASE("presets are degenerate elliptic") {
  std::mt19937_64 rng(35);
  for (const char* name : kPresets) {
    const QuasilinearOperator op = make_preset_operator(name);
    for (int k = 0; k < 200; ++k) {
      const HVector xi = testutil::random_point(rng, 2, -2, 2);
      const Eigen::MatrixXd y = random_symmetric(rng, 2);
      const Eigen::MatrixXd x = y + random_psd(rng, 2);
      CHECK(operator_G(op, xi, x) <= operator_G(op, xi, y) + 1e-12);
    }
  }
}

TEST_CASE("strong maximum principle hypothesis") {
  std::mt19937_64 rng(36);
  for (const char* name : kPresets) {
    const QuasilinearOperator op = make_preset_operator(name);
    for (int k = 0; k < 100; ++k) {
      HVector xi = testutil::random_point(rng, 2, -2, 2);
      if (xi.norm() < 1e-3) xi[0] = 1;
      const Eigen::MatrixXd x = random_symmetric(rng, 2, 3.0);
      const double e = op.ellipticity(xi);
      REQUIRE(e > 0);
      const double gamma_max = ((op.A(xi).cwiseProduct(x)).sum() - op.H(xi)) / e + 1;
      const double gamma = std::max(gamma_max, 0.0);
      CHECK(operator_G(op, xi, x - gamma * xi * xi.transpose()) > 0);
    }
  }
}
