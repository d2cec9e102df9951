#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "sublab/errors.hpp"
#include "sublab/expression.hpp"
#include "sublab/field_io.hpp"
#include "sublab/grid.hpp"
#include "sublab/metric.hpp"
#include "sublab/polynomial.hpp"
#include "test_util.hpp"

using namespace sublab;
using testutil::pt;

TEST_CASE("polynomial arithmetic and derivatives") {
  const Polynomial x = Polynomial::variable(2, 0), y = Polynomial::variable(2, 1);
  const Polynomial p = x * x * y - y * 3.0 + Polynomial::constant(2, 2);
  CHECK(p(pt({2, 5})) == doctest::Approx(20 - 15 + 2));
  CHECK(p.degree() == 3);
  CHECK(p.derivative(0) == x * y * 2.0);
  CHECK(p.derivative(1) == x * x - Polynomial::constant(2, 3));
  CHECK((p - p).is_zero());
  CHECK(Polynomial::from_table(2, {{1, 2, 1}, {-3, 0, 1}, {2, 0, 0}}) == p);
  // Heisenberg fields bracket to the vertical field.
  const Polynomial one = Polynomial::constant(3, 1), zero(3);
  const PolynomialField X1 = {one, zero, Polynomial::variable(3, 1) * -0.5};
  const PolynomialField X2 = {zero, one, Polynomial::variable(3, 0) * 0.5};
  const PolynomialField b = bracket(X1, X2);
  CHECK(b[0].is_zero());
  CHECK(b[1].is_zero());
  CHECK(b[2] == one);
  CHECK(is_zero(bracket(X1, X1)));
}

TEST_CASE("expressions") {
  CHECK(Expression::parse_for_dimension("x^2 - y^2 + t/2", 3)(pt({1, 2, 4})) == doctest::Approx(-1.0));
  CHECK(Expression::parse_for_dimension("-2^2", 2)(pt({0, 0})) == doctest::Approx(-4.0));
  CHECK(Expression::parse_for_dimension("2^3^2", 2)(pt({0, 0})) == doctest::Approx(512.0));
  CHECK(Expression::parse_for_dimension("max(x, y) * min(1, abs(y))", 2)(pt({0.5, -3})) == doctest::Approx(0.5));
  CHECK(Expression::parse_for_dimension("koranyi(x, y, t)", 3)(pt({0, 0, 1})) == doctest::Approx(2.0));
  CHECK(Expression::parse_for_dimension("x0 + z", 3)(pt({1, 0, 3})) == doctest::Approx(4.0));
  CHECK(Expression::parse_for_dimension("sqrt(exp(log(4)))", 1)(pt({0})) == doctest::Approx(2.0));
  CHECK(Expression::parse("a*b", {"a", "b"})(pt({3, 4})) == doctest::Approx(12.0));
  CHECK_THROWS_AS(Expression::parse_for_dimension("x +", 2), ConfigError);
  CHECK_THROWS_AS(Expression::parse_for_dimension("w", 2), ConfigError);
  CHECK_THROWS_AS(Expression::parse_for_dimension("foo(x)", 2), ConfigError);
}

TEST_CASE("grid indexing") {
  const Grid g(Box(pt({0, -1}), pt({2, 1})), {5, 3});
  CHECK(g.size() == 15);
  CHECK(g.spacing(0) == 0.5);
  CHECK(g.spacing(1) == 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.index(g.multi_index(i)) == i);
  CHECK(g.index(std::vector<int>{1, 2}) == 5);
  CHECK((g.point(5) - pt({0.5, 1})).norm() == 0.0);
  CHECK(g.on_rim(0));
  CHECK_FALSE(g.on_rim(g.index(std::vector<int>{2, 1})));
  CHECK(g.nearest(pt({0.74, 0.1})) == g.index(std::vector<int>{1, 1}));
  CHECK(g.same_lattice(Grid(Box(pt({0, -1}), pt({2, 1})), {5, 3})));
  CHECK_FALSE(g.same_lattice(Grid(Box(pt({0, -1}), pt({2, 1})), {5, 4})));
  CHECK_THROWS(Grid(Box(pt({0, 0}), pt({1, 1})), {1, 3}));

  const GridFunction f = GridFunction::sample(g, [](const Point& p) { return 2 * p[0] - p[1] + p[0] * p[1]; });
  CHECK(f.has_default_mask());
  CHECK(f.interpolate(pt({0.3, 0.2})) == doctest::Approx(0.6 - 0.2 + 0.06));
  CHECK_THROWS_AS(f.interpolate(pt({3, 0})), std::out_of_range);
  CHECK_THROWS_AS(f.at(99), std::out_of_range);
}

TEST_CASE("field files round-trip bitwise") {
  const auto dir = std::filesystem::temp_directory_path() / "sublab_test_io";
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(60);
  const Grid g(Box(pt({-1, 0, 0.25}), pt({1, 3, 0.75})), {7, 4, 5});
  GridFunction f(g);
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::normal_distribution<double>(0, 1e3)(rng);
  f[3] = -0.0;
  f[4] = 5e-324;

  write_field((dir / "a.field").string(), f);
  const GridFunction a = read_field((dir / "a.field").string());
  CHECK(a.grid().same_lattice(g));
  CHECK(a.has_default_mask());
  CHECK(std::memcmp(a.values().data(), f.values().data(), f.size() * sizeof(double)) == 0);

  GridFunction masked = f;
  masked.mask() = shrunken_domain(euclidean_oracle(3), 0.01, g).mask;
  write_field((dir / "b.field").string(), masked);
  const GridFunction b = read_field((dir / "b.field").string());
  CHECK(b.mask() == masked.mask());
  CHECK(std::memcmp(b.values().data(), f.values().data(), f.size() * sizeof(double)) == 0);

  write_field_csv((dir / "a.csv").string(), f);
  std::ifstream csv(dir / "a.csv");
  std::string line;
  std::size_t rows = 0;
  std::getline(csv, line);
  CHECK(line == "x0,x1,x2,value,interior");
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == g.size());

  std::ofstream(dir / "junk.field") << "not a field";
  CHECK_THROWS_AS(read_field((dir / "junk.field").string()), ConfigError);
  CHECK_THROWS(read_field((dir / "missing.field").string()));
  std::filesystem::remove_all(dir);
}
