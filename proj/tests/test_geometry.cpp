#include <doctest.h>

#include "sublab/errors.hpp"
#include "sublab/geometry.hpp"
#include "sublab/operator.hpp"
#include "sublab/perturbation.hpp"
#include "sublab/smooth_function.hpp"
#include "sublab/stats.hpp"
#include "test_util.hpp"

using namespace sublab;
using testutil::pt;

namespace {

// Left translation by (h1, h2, 0) in the group law of the preset fields.
Point heisenberg_flow(const Point& x, double h1, double h2) {
  return pt({x[0] + h1, x[1] + h2, x[2] + (x[0] * h2 - x[1] * h1) / 2});
}

}  // namespace

TEST_CASE("brackets of the presets") {
  std::mt19937_64 rng(1);
  const auto e = euclidean_system(2);
  const auto h = heisenberg_system();
  const auto g = grushin_system();
  for (int k = 0; k < 20; ++k) {
    const Point p2 = testutil::random_point(rng, 2, -2, 2);
    const Point p3 = testutil::random_point(rng, 3, -2, 2);
    CHECK(lie_bracket(e, 0, 1)(p2).norm() == 0.0);
    CHECK((lie_bracket(h, 0, 1)(p3) - pt({0, 0, 1})).norm() < 1e-14);
    CHECK((lie_bracket(g, 0, 1)(p2) - pt({0, 1})).norm() < 1e-14);
    // antisymmetry
    CHECK((lie_bracket(h, 0, 1)(p3) + lie_bracket(h, 1, 0)(p3)).norm() == 0.0);
    CHECK(lie_bracket(h, 1, 1)(p3).norm() == 0.0);
  }
  CHECK_THROWS_AS(lie_bracket(h, 0, 2), std::out_of_range);
  CHECK_THROWS_AS(lie_bracket(h, -1, 0), std::out_of_range);
}

TEST_CASE("bracket of a finite-difference system matches the closed form") {
  const auto h = heisenberg_system();
  const auto fd = VectorFieldSystem::with_fd_jacobian(3, 2, [h](const Point& x) { return h.sigma(x); });
  std::mt19937_64 rng(2);
  for (int k = 0; k < 10; ++k) {
    const Point x = testutil::random_point(rng, 3, -1, 1);
    CHECK((lie_bracket(fd, 0, 1)(x) - pt({0, 0, 1})).norm() < 1e-8);
  }
}

TEST_CASE("dsigma agrees with central differences of sigma") {
  std::mt19937_64 rng(3);
  for (const auto& sys : {euclidean_system(3), heisenberg_system(), grushin_system()}) {
    const int n = sys.dim();
    for (int k = 0; k < 20; ++k) {
      const Point x = testutil::random_point(rng, n, -1.5, 1.5);
      const auto ds = sys.dsigma(x);
      const double step = 1e-4;
      for (int j = 0; j < sys.fields(); ++j)
        for (int b = 0; b < n; ++b) {
          Point a = x, c = x;
          a[b] += step;
          c[b] -= step;
          const Eigen::VectorXd fd = (sys.sigma(a).col(j) - sys.sigma(c).col(j)) / (2 * step);
          CHECK((fd - ds[j].col(b)).norm() < 1e-8);
        }
    }
  }
}

TEST_CASE("fields do not vanish where they span on their own") {
  std::mt19937_64 rng(4);
  for (const auto& sys : {euclidean_system(2), heisenberg_system()})
    for (int k = 0; k < 50; ++k) {
      const Eigen::MatrixXd s = sys.sigma(testutil::random_point(rng, sys.dim(), -2, 2));
      for (int j = 0; j < s.cols(); ++j) CHECK(s.col(j).norm() > 0.0);
    }
}

TEST_CASE("hormander rank and step") {
  SUBCASE("euclidean") {
    const RankResult r = hormander_rank(euclidean_system(2), pt({0.3, -0.2}), 4);
    CHECK(r.rank == 2);
    REQUIRE(r.step);
    CHECK(*r.step == 1);
  }
  SUBCASE("heisenberg at random points matches the declared step") {
    const auto sys = heisenberg_system();
    REQUIRE(sys.declared_step());
    std::mt19937_64 rng(5);
    for (int k = 0; k < 100; ++k) {
      const RankResult r = hormander_rank(sys, testutil::random_point(rng, 3, -3, 3), 4);
      CHECK(r.rank == 3);
      REQUIRE(r.step);
      CHECK(*r.step == 2);
      CHECK(*r.step == *sys.declared_step());
    }
  }
  SUBCASE("grushin degenerates on the axis") {
    const auto sys = grushin_system();
    const RankResult axis = hormander_rank(sys, pt({0.0, 0.0}), 4);
    CHECK(axis.rank == 2);
    REQUIRE(axis.step);
    CHECK(*axis.step == 2);
    CHECK(*axis.step <= *sys.declared_step());
    const RankResult off = hormander_rank(sys, pt({0.5, -0.3}), 4);
    REQUIRE(off.step);
    CHECK(*off.step == 1);
  }
  SUBCASE("max_order 1 on heisenberg stays rank deficient") {
    const RankResult r = hormander_rank(heisenberg_system(), pt({0, 0, 0}), 1);
    CHECK(r.rank == 2);
    CHECK_FALSE(r.step);
  }
  SUBCASE("a system that never spans") {
    // X1 = dx on R^2 alone.
    std::vector<PolynomialField> cols = {{Polynomial::constant(2, 1), Polynomial::constant(2, 0)}};
    const auto sys = VectorFieldSystem::from_polynomials(cols);
    const RankResult r = hormander_rank(sys, pt({0.1, 0.2}), 5);
    CHECK(r.rank == 1);
    CHECK_FALSE(r.step);
  }
}

TEST_CASE("polynomial system reproduces the heisenberg preset") {
  const int n = 3;
  auto X = [&](int k) { return Polynomial::variable(n, k); };
  std::vector<PolynomialField> cols = {
      {Polynomial::constant(n, 1), Polynomial::constant(n, 0), X(1) * -0.5},
      {Polynomial::constant(n, 0), Polynomial::constant(n, 1), X(0) * 0.5}};
  const auto sys = VectorFieldSystem::from_polynomials(cols);
  const auto ref = heisenberg_system();
  std::mt19937_64 rng(6);
  for (int k = 0; k < 10; ++k) {
    const Point x = testutil::random_point(rng, 3, -1, 1);
    CHECK(testutil::max_abs(sys.sigma(x) - ref.sigma(x)) < 1e-15);
    CHECK((lie_bracket(sys, 0, 1)(x) - pt({0, 0, 1})).norm() < 1e-14);
  }
  const RankResult r = hormander_rank(sys, pt({0.2, 0.1, -0.3}), 3);
  REQUIRE(r.step);
  CHECK(*r.step == 2);
}

TEST_CASE("exp_flow closed forms") {
  const auto e = euclidean_system(2);
  CHECK((exp_flow(e, pt({0.1, 0.2}), pt({0.5, -1.0})) - pt({0.6, -0.8})).norm() < 1e-14);
  const auto h = heisenberg_system();
  CHECK((exp_flow(h, pt({0, 0, 0}), pt({1, 1})) - pt({1, 1, 0})).norm() < 1e-14);
  CHECK((exp_flow(h, pt({0, 0, 0}), pt({1, 0})) - pt({1, 0, 0})).norm() < 1e-14);
  std::mt19937_64 rng(7);
  for (int k = 0; k < 20; ++k) {
    const Point x = testutil::random_point(rng, 3, -1, 1);
    const Point hv = testutil::random_point(rng, 2, -0.5, 0.5);
    CHECK((exp_flow(h, x, hv) - heisenberg_flow(x, hv[0], hv[1])).norm() < 1e-13);
    // h = 0 returns x bitwise
    const Point same = exp_flow(h, x, HVector::Zero(2));
    CHECK((same.array() == x.array()).all());
  }
}

TEST_CASE("grushin flow matches the closed form") {
  // X1 = dx, X2 = x dy: gamma(s) = (x + s h1, y + h2 (x s + h1 s^2 / 2)).
  const auto g = grushin_system();
  const Point x = pt({0.3, -0.2});
  const Point h = pt({0.4, 0.7});
  const Point expect = pt({0.7, -0.2 + 0.7 * (0.3 + 0.4 / 2)});
  CHECK((exp_flow(g, x, h) - expect).norm() < 1e-13);
}

TEST_CASE("flow reversal and the one-direction group law") {
  const auto g = grushin_system();
  std::mt19937_64 rng(8);
  for (int k = 0; k < 20; ++k) {
    const Point x = testutil::random_point(rng, 2, -1, 1);
    const Point h = testutil::random_point(rng, 2, -1, 1);
    CHECK((exp_flow(g, exp_flow(g, x, h), -h) - x).norm() < 1e-10);
    for (int i = 0; i < 2; ++i) {
      HVector s = HVector::Zero(2), t = HVector::Zero(2);
      s[i] = 0.3;
      t[i] = -0.7;
      CHECK((exp_flow(g, exp_flow(g, x, s), t) - exp_flow(g, x, s + t)).norm() < 1e-12);
    }
  }
}

TEST_CASE("rk4 reversal error shrinks at fourth order") {
  // A field with curvature: X1 = (1, x^2), X2 = (y, 1).
  const int n = 2;
  auto X = [&](int k) { return Polynomial::variable(n, k); };
  std::vector<PolynomialField> cols = {{Polynomial::constant(n, 1), X(0) * X(0)},
                                       {X(1), Polynomial::constant(n, 1)}};
  const auto sys = VectorFieldSystem::from_polynomials(cols);
  const Point x = pt({0.2, 0.1});
  const Point h = pt({0.8, -0.6});
  std::vector<double> ls, le;
  for (int steps : {2, 4, 8}) {
    const double err = (exp_flow(sys, exp_flow(sys, x, h, steps), -h, steps) - x).norm();
    ls.push_back(std::log(1.0 / steps));
    le.push_back(std::log(err));
  }
  CHECK(least_squares_slope(ls, le) >= 3.5);
}

TEST_CASE("flow leaving the domain reports the exit time") {
  const auto h = heisenberg_system().with_domain(Box::cube(3, -1, 1));
  try {
    exp_flow(h, pt({0.5, 0, 0}), pt({1.0, 0}));
    FAIL("expected FlowExitError");
  } catch (const FlowExitError& e) {
    CHECK(e.exit_time > 0.4);
    CHECK(e.exit_time <= 0.6);
    CHECK(e.last_inside[0] <= 1.0);
  }
}

TEST_CASE("flow jacobian") {
  const auto h = heisenberg_system();
  const Point origin = pt({0, 0, 0});
  CHECK(testutil::max_abs(flow_jacobian(h, origin, HVector::Zero(2)) - Eigen::MatrixXd::Identity(3, 3)) == 0.0);
  CHECK(testutil::max_abs(flow_jacobian(euclidean_system(2), pt({0.3, 0.1}), pt({1, -2})) -
                          Eigen::MatrixXd::Identity(2, 2)) < 1e-14);
  // d/dx of (x1 + h1, x2 + h2, t + (x1 h2 - x2 h1)/2)
  Eigen::MatrixXd closed = Eigen::MatrixXd::Identity(3, 3);
  closed(2, 0) = 0.0;
  closed(2, 1) = -0.5;
  CHECK(testutil::max_abs(flow_jacobian(h, origin, pt({1, 0})) - closed) < 1e-12);
  std::mt19937_64 rng(9);
  for (const auto& sys : {heisenberg_system(), grushin_system()}) {
    for (int k = 0; k < 10; ++k) {
      const Point x = testutil::random_point(rng, sys.dim(), -1, 1);
      const Point hv = testutil::random_point(rng, 2, -1, 1);
      const Eigen::MatrixXd J = flow_jacobian(sys, x, hv);
      Eigen::MatrixXd fd(sys.dim(), sys.dim());
      const double step = 1e-5;
      for (int b = 0; b < sys.dim(); ++b) {
        Point a = x, c = x;
        a[b] += step;
        c[b] -= step;
        fd.col(b) = (exp_flow(sys, a, hv) - exp_flow(sys, c, hv)) / (2 * step);
      }
      CHECK(testutil::max_abs(J - fd) < 1e-6);
    }
  }
}

TEST_CASE("pullback by the identity and by translations") {
  const auto h = heisenberg_system();
  const auto same = pullback_system(h, identity_map(3));
  const auto e = euclidean_system(2);
  const auto shifted = pullback_system(e, translation_map(pt({0.4, -0.1})));
  std::mt19937_64 rng(10);
  for (int k = 0; k < 10; ++k) {
    const Point x = testutil::random_point(rng, 3, -1, 1);
    CHECK(testutil::max_abs(same.sigma(x) - h.sigma(x)) == 0.0);
    const Point y = testutil::random_point(rng, 2, -1, 1);
    CHECK(testutil::max_abs(shifted.sigma(y) - Eigen::MatrixXd::Identity(2, 2)) < 1e-14);
  }
}

TEST_CASE("pullback chain-rule identity") {
  const auto h = heisenberg_system();
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  auto check_f = [&](const std::function<double(const Point&)>& f, const Diffeomorphism& theta,
                     const VectorFieldSystem& pulled, int points, double tol) {
    for (int k = 0; k < points; ++k) {
      const Point x = testutil::random_point(rng, 3, -0.8, 0.8);
      const double step = 1e-5;
      Eigen::VectorXd grad_comp(3), grad_f(3);
      const Point y = theta.forward(x);
      for (int b = 0; b < 3; ++b) {
        Point a = x, c = x, ya = y, yc = y;
        a[b] += step;
        c[b] -= step;
        ya[b] += step;
        yc[b] -= step;
        grad_comp[b] = (f(theta.forward(a)) - f(theta.forward(c))) / (2 * step);
        grad_f[b] = (f(ya) - f(yc)) / (2 * step);
      }
      const Eigen::VectorXd lhs = pulled.sigma(x).transpose() * grad_comp;
      const Eigen::VectorXd rhs = h.sigma(y).transpose() * grad_f;
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= tol);
    }
  };
  SUBCASE("x^2 + y t at 20 points, |h| = 1e-2") {
    const Diffeomorphism theta = flow_map(h, pt({0.006, 0.008}));
    const auto pulled = pullback_system(h, theta);
    check_f([](const Point& p) { return p[0] * p[0] + p[1] * p[2]; }, theta, pulled, 20, 1e-5);
  }
  SUBCASE("random quadratics at 50 points") {
    const Diffeomorphism theta = flow_map(h, pt({-0.05, 0.03}));
    const auto pulled = pullback_system(h, theta);
    Eigen::MatrixXd Q(3, 3);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) Q(a, b) = g(rng);
    Eigen::VectorXd q(3);
    for (int a = 0; a < 3; ++a) q[a] = g(rng);
    check_f([&](const Point& p) { return p.dot(Q * p) + q.dot(p); }, theta, pulled, 50, 1e-5);
  }
}

TEST_CASE("singular jacobian is rejected") {
  Diffeomorphism collapse;
  collapse.forward = [](const Point& x) { return x; };
  collapse.inverse = [](const Point& x) { return x; };
  collapse.jacobian = [](const Point&) { return Eigen::MatrixXd::Zero(3, 3); };
  const auto pulled = pullback_system(heisenberg_system(), collapse);
  CHECK_THROWS_AS(pulled.sigma(pt({0.1, 0.2, 0.3})), SingularJacobianError);
}

TEST_CASE("perturbed operator convergence") {
  const auto op = sublaplacian_operator();
  SUBCASE("h = 0 is exact") {
    const auto f = SmoothFunction::from_callable([](const Point& p) { return p[0] * p[0] + p[1] * p[2]; });
    const auto rows = perturbed_operator_convergence(heisenberg_system(), op, pt({0.1, 0.2, 0.0}), f,
                                                     {HVector::Zero(2)});
    CHECK(rows.at(0).deviation == 0.0);
  }
  SUBCASE("euclidean quadratic does not move") {
    Polynomial p = Polynomial::variable(2, 0) * Polynomial::variable(2, 0) +
                   Polynomial::variable(2, 0) * Polynomial::variable(2, 1) * 3.0;
    const auto rows = perturbed_operator_convergence(euclidean_system(2), op, pt({0.1, 0.2}),
                                                     SmoothFunction::from_polynomial(p),
                                                     {pt({0.1, 0.0}), pt({0.0, 0.01})});
    for (const auto& r : rows) CHECK(r.deviation < 1e-8);
  }
  SUBCASE("heisenberg x^2 + y^2 + t^2 decreases with slope >= 1") {
    const int n = 3;
    auto X = [&](int k) { return Polynomial::variable(n, k); };
    const auto f = SmoothFunction::from_polynomial(X(0) * X(0) + X(1) * X(1) + X(2) * X(2));
    std::vector<HVector> hs;
    for (int k = 1; k <= 4; ++k) hs.push_back(pt({std::pow(10.0, -k), 0.0}));
    const auto rows = perturbed_operator_convergence(heisenberg_system(), op, pt({0.2, -0.1, 0.3}), f, hs);
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0) CHECK(rows[i].deviation < rows[i - 1].deviation);
      lx.push_back(std::log(rows[i].h_norm));
      ly.push_back(std::log(rows[i].deviation));
    }
    CHECK(least_squares_slope(lx, ly) >= 1.0);
  }
}
