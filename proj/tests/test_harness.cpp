#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sublab/errors.hpp"
#include "sublab/harness.hpp"
#include "sublab/metric.hpp"
#include "sublab/scenario.hpp"
#include "sublab/solver.hpp"
#include "test_util.hpp"

using namespace sublab;
using testutil::pt;

namespace {

double saddle(const Point& p) { return (p[0] * p[0] - p[1] * p[1]) / 4 + p[2] / 8; }

std::vector<std::uint8_t> inner_mask(const Grid& g, double margin) {
  std::vector<std::uint8_t> mask(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point p = g.point(i);
    bool in = true;
    for (int a = 0; a < g.dim(); ++a)
      in = in && p[a] >= g.box().lo[a] + margin - 1e-12 && p[a] <= g.box().hi[a] - margin + 1e-12;
    mask[i] = in;
  }
  return mask;
}

GridFunction shifted(const GridFunction& u, double c) {
  GridFunction r = u;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += c;
  return r;
}

GridFunction negated(const GridFunction& u) {
  GridFunction r = u;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = -r[i];
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const SubSuperPair& pnorm_pair() {
  static const SubSuperPair pair =
      make_sub_super_pair(pnorm_operator(4), heisenberg_system(), Grid::cube(3, -2, 2, 13), saddle, 0.1);
  return pair;
}

}  // namespace

TEST_CASE("comparison check") {
  const Grid g = Grid::cube(2, -1, 1, 21);
  const GridFunction u = GridFunction::sample(g, [](const Point& p) { return std::sin(3 * p[0]) * p[1]; });
  const auto mask = default_mask(g);
  SUBCASE("identical fields") {
    const ComparisonResult r = comparison_check(u, u, mask, 1e-9);
    CHECK(r.pass);
    CHECK(r.max_interior_gap == 0.0);
    CHECK(r.max_boundary_gap == 0.0);
    CHECK_FALSE(r.argmax_nodes.empty());
  }
  SUBCASE("strictly larger v") {
    const ComparisonResult r = comparison_check(u, shifted(u, 1.0), mask, 1e-9);
    CHECK(r.pass);
    CHECK(r.max_interior_gap == doctest::Approx(-1.0));
    CHECK(r.max_boundary_gap == 0.0);
  }
  SUBCASE("interior bump is offending") {
    GridFunction v = u;
    const std::size_t bad = g.index(std::vector<int>{7, 12});
    v[bad] -= 0.5;
    const ComparisonResult r = comparison_check(u, v, mask, 1e-6);
    CHECK_FALSE(r.pass);
    REQUIRE(r.offending_node.has_value());
    CHECK(*r.offending_node == bad);
  }
  SUBCASE("certified p-laplacian pair") {
    const SubSuperPair& p = pnorm_pair();
    const ComparisonResult r = comparison_check(p.sub, p.super, default_mask(p.sub.grid()), 1e-6);
    CHECK(r.pass);
    CHECK(r.max_boundary_gap == 0.0);
  }
  SUBCASE("errors") {
    const GridFunction other(Grid::cube(2, -1, 1, 11));
    CHECK_THROWS_AS(comparison_check(u, other, mask, 1e-6), GridMismatchError);
    CHECK_THROWS_AS(comparison_check(u, u, std::vector<std::uint8_t>(g.size(), 0), 1e-6), DegenerateInputError);
  }
  SUBCASE("mask boundary of the default mask is the rim") {
    const auto b = mask_boundary(g, mask);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto mi = g.multi_index(i);
      const bool corner = (mi[0] == 0 || mi[0] == 20) && (mi[1] == 0 || mi[1] == 20);
      CHECK(static_cast<bool>(b[i]) == (g.on_rim(i) && !corner));
    }
  }
}

TEST_CASE("strong maximum probe") {
  const auto sys = heisenberg_system();
  const Grid g = Grid::cube(3, -1, 1, 11);
  SUBCASE("constant") {
    const StrongMaxResult r = strong_max_probe(sublaplacian_operator(), sys, GridFunction(g, 0.5), 1e-8);
    CHECK(r.verdict == StrongMaxVerdict::Constant);
    CHECK(r.consistent());
  }
  SUBCASE("negative maximum is outside the hypotheses") {
    const StrongMaxResult r = strong_max_probe(sublaplacian_operator(), sys, GridFunction(g, -0.5), 1e-8);
    CHECK(r.verdict == StrongMaxVerdict::NotApplicable);
  }
  SUBCASE("solver output attains its maximum on the rim") {
    const SolveResult s = solve_dirichlet(sublaplacian_operator(), sys, g,
                                          [](const Point& p) { return p[0] * p[0] - p[1] * p[1]; });
    const StrongMaxResult r = strong_max_probe(sublaplacian_operator(), sys, s.solution, 1e-8);
    CHECK(r.verdict == StrongMaxVerdict::BoundaryAttained);
    CHECK_FALSE(r.interior_attained);
  }
  SUBCASE("hand-built interior maximum is rejected") {
    const GridFunction bump = GridFunction::sample(g, [](const Point& p) { return 1.0 - p.squaredNorm(); });
    for (const char* name : {"sublaplacian", "infinity", "pnorm:4"}) {
      const StrongMaxResult r = strong_max_probe(make_preset_operator(name), sys, bump, 1e-8);
      CHECK(r.verdict == StrongMaxVerdict::CertificationFailed);
      CHECK(r.consistent());
    }
  }
  SUBCASE("a non-elliptic operator produces a reported violation") {
    QuasilinearOperator anti = sublaplacian_operator();
    anti.name = "anti";
    anti.family = QuasilinearOperator::Family::Generic;
    anti.A = [](const HVector& xi) { return Eigen::MatrixXd(-Eigen::MatrixXd::Identity(xi.size(), xi.size())); };
    anti.dA = nullptr;
    const GridFunction bump = GridFunction::sample(g, [](const Point& p) { return 1.0 - p.squaredNorm(); });
    const StrongMaxResult r = strong_max_probe(anti, sys, bump, 1e-8);
    CHECK(r.verdict == StrongMaxVerdict::Violation);
    CHECK_FALSE(r.consistent());
  }
}

TEST_CASE("translation maxima") {
  SUBCASE("euclidean flows are translations") {
    const Grid g = Grid::cube(2, -1, 1, 21);
    const HVector a = pt({0.6, 0.6});
    const GridFunction u = GridFunction::sample(g, [&](const Point& p) { return a.dot(p); });
    const GridFunction v = GridFunction::sample(g, [](const Point& p) { return 0.3 * p[0] * p[1]; });
    const auto mask = inner_mask(g, 0.3);
    const auto hs = h_lattice(2, 0.1, 5);
    const TranslationTable t = translation_max_map(u, v, euclidean_system(2), mask, 0.2, hs, hs);
    for (std::size_t ih = 0; ih < hs.size(); ++ih)
      for (std::size_t il = 0; il < hs.size(); ++il) {
        double expect = -kInf;
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (!mask[i]) continue;
          const Point x = g.point(i);
          expect = std::max(expect, u.interpolate(Point(x + hs[ih])) - v.interpolate(Point(x + hs[il])));
        }
        REQUIRE(t.cell(ih, il).valid);
        CHECK(t.cell(ih, il).value == doctest::Approx(expect).epsilon(1e-12));
      }
    CHECK(t.cell(12, 12).value == doctest::Approx(comparison_check(u, v, mask, 0).max_interior_gap).epsilon(1e-14));

    const LipschitzFit fit = lipschitz_probe(translation_max_map(u, GridFunction(g, 0.0), euclidean_system(2), mask,
                                                                 0.2, hs, hs),
                                             u, GridFunction(g, 0.0), euclidean_system(2));
    CHECK(fit.h_ratio == doctest::Approx(a.norm()).epsilon(1e-9));
    CHECK(fit.l_ratio == 0.0);
    CHECK(fit.grad_u == doctest::Approx(a.norm()).epsilon(1e-9));
    CHECK(fit.ok());
  }
  SUBCASE("constants give zero ratios") {
    const Grid g = Grid::cube(2, -1, 1, 11);
    const auto hs = h_lattice(2, 0.1, 3);
    const TranslationTable t = translation_max_map(GridFunction(g, 1.0), GridFunction(g, 0.5), grushin_system(),
                                                   inner_mask(g, 0.4), 0.2, hs, hs);
    const LipschitzFit fit = lipschitz_probe(t, GridFunction(g, 1.0), GridFunction(g, 0.5), grushin_system());
    CHECK(fit.h_ratio == 0.0);
    CHECK(fit.l_ratio == 0.0);
    CHECK(fit.ok());
  }
  SUBCASE("heisenberg table, relabelings and mask monotonicity") {
    const Grid g = Grid::cube(3, -1, 1, 17);
    const auto sys = heisenberg_system();
    const GridFunction u = GridFunction::sample(g, [](const Point& p) { return 0.5 * heisenberg_gauge(p) - p[1]; });
    const GridFunction v = GridFunction::sample(g, [](const Point& p) { return 0.5 * p[0] - 0.2 * p[2] * p[1]; });
    const double delta = 0.05;
    const auto hs = h_lattice(2, 0.035, 5);
    for (const auto& h : hs) CHECK(h.norm() < delta);
    const auto mask = shrunken_domain(heisenberg_gauge_oracle(), 0.04, g, true).mask;
    const TranslationTable t = translation_max_map(u, v, sys, mask, delta, hs, hs);
    const TranslationTable swapped = translation_max_map(negated(v), negated(u), sys, mask, delta, hs, hs);
    const TranslationTable relabeled = translation_max_map(shifted(u, 0.7), shifted(v, -0.2), sys, mask, delta, hs, hs);
    for (std::size_t ih = 0; ih < hs.size(); ++ih)
      for (std::size_t il = 0; il < hs.size(); ++il) {
        const TranslationCell& c = t.cell(ih, il);
        REQUIRE(c.valid);
        CHECK(std::isfinite(c.value));
        CHECK_FALSE(c.argmax.empty());
        CHECK(swapped.cell(il, ih).value == doctest::Approx(c.value).epsilon(1e-14));
        CHECK(relabeled.cell(ih, il).value == doctest::Approx(c.value + 0.9).epsilon(1e-14));
        CHECK(relabeled.cell(ih, il).argmax == c.argmax);
      }
    const LipschitzFit fit = lipschitz_probe(t, u, v, sys);
    MESSAGE("h ratio " << fit.h_ratio << " grad u " << fit.grad_u << " l ratio " << fit.l_ratio << " grad v " << fit.grad_v);
    CHECK(fit.ok());

    // A larger mask containing the (0,0) argmax keeps the (0,0) maximum.
    const auto wide = shrunken_domain(heisenberg_gauge_oracle(), 0.01, g, true).mask;
    const std::vector<HVector> zero = {HVector::Zero(2)};
    const TranslationTable narrow0 = translation_max_map(u, v, sys, mask, delta, zero, zero);
    const TranslationTable wide0 = translation_max_map(u, v, sys, wide, delta, zero, zero);
    bool inside = true;
    for (std::size_t i : wide0.cell(0, 0).argmax) inside = inside && mask[i];
    if (inside) CHECK(narrow0.cell(0, 0).value == wide0.cell(0, 0).value);
    CHECK(narrow0.cell(0, 0).value <= wide0.cell(0, 0).value);

    CHECK_THROWS_AS(translation_max_map(u, v, sys, mask, 0.01, hs, hs), std::invalid_argument);
    CHECK_THROWS_AS(lipschitz_probe(translation_max_map(u, v, sys, mask, delta, h_lattice(2, 0.02, 2), hs), u, v, sys),
                    DegenerateInputError);
  }
  SUBCASE("boundary gap under translation") {
    // Rim nodes carry u - v = -tau; translated differences stay below -tau + 2 delta (|Xu| + |Xv|).
    const SubSuperPair& p = pnorm_pair();
    const auto sys = heisenberg_system();
    const Grid& g = p.sub.grid();
    const double tau = 0.1, delta = 0.2;
    const double gu = horizontal_gradient_sup(p.sub, sys), gv = horizontal_gradient_sup(p.super, sys);
    const auto hs = h_lattice(2, 0.14, 3);
    int checked = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!g.on_rim(i)) continue;
      std::vector<std::uint8_t> single(g.size(), 0);
      single[i] = 1;
      const TranslationTable t = translation_max_map(p.sub, p.super, sys, single, delta, hs, hs);
      for (std::size_t k = 0; k < hs.size(); ++k) {
        if (!t.cell(k, k).valid) continue;
        CHECK(t.cell(k, k).value <= -tau + 2 * delta * (gu + gv) + 1e-12);
        ++checked;
      }
    }
    CHECK(checked > 0);
  }
}

TEST_CASE("scenario runs") {
  const std::filesystem::path root = SUBLAB_SOURCE_DIR;
  const auto out = std::filesystem::temp_directory_path() / "sublab_test_scenarios";
  std::filesystem::remove_all(out);
  SUBCASE("bundled euclidean identity passes with zero margins") {
    const ScenarioReport r = scenario_run_file((root / "scenarios/euclidean-identity.json").string(), out.string());
    CHECK(r.verdict() == "pass");
    CHECK(r.stage_errors.empty());
    CHECK(r.violations.empty());
    CHECK(r.max_interior_gap == 0.0);
    CHECK(r.max_boundary_gap == 0.0);
    for (const auto& [name, ok] : r.checks) {
      CAPTURE(name);
      CHECK(ok);
    }
    CHECK(std::filesystem::exists(out / "euclidean-identity.report.json"));
  }
  SUBCASE("missing operator is a stage error") {
    nlohmann::json cfg = nlohmann::json::parse(slurp(root / "scenarios/euclidean-identity.json"));
    cfg.erase("operator");
    const ScenarioReport r = scenario_run(cfg);
    REQUIRE_FALSE(r.stage_errors.empty());
    CHECK(r.stage_errors.front().stage == "operator");
    CHECK(r.has_config_error());
    CHECK(r.verdict() == "error");
  }
  SUBCASE("unparsable file is a config error") {
    const auto bad = out / "bad.json";
    std::filesystem::create_directories(out);
    std::ofstream(bad) << "{ not json";
    const ScenarioReport r = scenario_run_file(bad.string());
    REQUIRE_FALSE(r.stage_errors.empty());
    CHECK(r.stage_errors.front().stage == "config");
  }
  SUBCASE("reports are deterministic") {
    const auto a = out / "a", b = out / "b";
    scenario_run_file((root / "scenarios/grushin-graph.json").string(), a.string());
    scenario_run_file((root / "scenarios/grushin-graph.json").string(), b.string());
    for (const auto& entry : std::filesystem::directory_iterator(a)) {
      CAPTURE(entry.path().filename().string());
      CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
    }
  }
  std::filesystem::remove_all(out);
}
