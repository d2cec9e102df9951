// sublab command-line entry point. Exit codes: 0 all asserted checks pass,
// 1 a check failed, 2 bad configuration or input.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sublab/envelope.hpp"
#include "sublab/errors.hpp"
#include "sublab/expression.hpp"
#include "sublab/field_io.hpp"
#include "sublab/harness.hpp"
#include "sublab/metric.hpp"
#include "sublab/operator.hpp"
#include "sublab/probes.hpp"
#include "sublab/scenario.hpp"
#include "sublab/solver.hpp"

using namespace sublab;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kConfig = 2;

Point parse_point(const std::string& text) {
  std::vector<double> v;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("cli", "bad coordinate '" + item + "' in '" + text + "'");
    }
  }
  if (v.empty()) throw ConfigError("cli", "empty point");
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct DomainOpts {
  double lo = -1.0;
  double hi = 1.0;
  int count = 17;
  void add(CLI::App* app) {
    app->add_option("--lo", lo, "Lower corner of the cube domain")->capture_default_str();
    app->add_option("--hi", hi, "Upper corner of the cube domain")->capture_default_str();
    app->add_option("--grid", count, "Nodes per axis")->capture_default_str();
  }
  Grid grid(int n) const {
    if (count < 2) throw ConfigError("domain", "--grid needs at least 2 nodes per axis");
    if (!(hi > lo)) throw ConfigError("domain", "--hi must exceed --lo");
    return Grid::cube(n, lo, hi, count);
  }
};

struct OracleOpts {
  std::string kind = "gauge";
  double step = 0.125;
  void add(CLI::App* app) {
    app->add_option("--oracle", kind, "gauge, euclidean, heisenberg_gauge or graph")->capture_default_str();
    app->add_option("--graph-step", step, "Edge length of the graph oracle")->capture_default_str();
  }
  DistanceOracle build(const VectorFieldSystem& sys, const Box& box) const {
    if (kind == "euclidean") return euclidean_oracle(sys.dim());
    if (kind == "heisenberg_gauge") return heisenberg_gauge_oracle();
    if (kind == "gauge") {
      if (sys.name().rfind("euclidean", 0) == 0) return euclidean_oracle(sys.dim());
      if (sys.name() == "heisenberg1") return heisenberg_gauge_oracle();
      throw ConfigError("oracle", "no closed-form gauge for '" + sys.name() + "'; use --oracle graph");
    }
    if (kind == "graph") return graph_oracle(sys, default_lattice(sys, box, step));
    throw ConfigError("oracle", "unknown oracle '" + kind + "'");
  }
};

void print_report_summary(const ScenarioReport& r) {
  std::cout << "scenario " << r.scenario_id << ": " << r.verdict() << "\n";
  for (const auto& [name, ok] : r.checks) std::cout << "  " << (ok ? "pass " : "FAIL ") << name << "\n";
  for (const auto& [name, value] : r.fitted_constants) std::cout << "  " << name << " = " << value << "\n";
  for (const auto& v : r.violations) {
    std::cerr << "violation " << v.check << " margin " << v.margin;
    if (v.node) std::cerr << " node " << *v.node;
    std::cerr << "\n";
  }
  for (const auto& e : r.stage_errors) std::cerr << "stage " << e.stage << ": " << e.message << "\n";
  std::cout << "  runtime_ms = " << r.runtime_ms << "\n";
}

int report_exit(const ScenarioReport& r) {
  if (r.has_config_error()) return kConfig;
  return r.verdict() == "pass" ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Comparison-principle experiments for Hormander vector fields"};
  app.require_subcommand(1);
  int code = kPass;

  // run
  std::string scenario_path, out_dir;
  auto* run = app.add_subcommand("run", "Run a scenario file");
  run->add_option("scenario", scenario_path, "Scenario file (.json may be omitted)")->required();
  run->add_option("--out", out_dir, "Output directory (default: $SUBLAB_OUT or sublab-out)");
  run->callback([&] {
    std::string path = scenario_path;
    if (!std::filesystem::exists(path) && std::filesystem::exists(path + ".json")) path += ".json";
    const std::string dir = out_dir.empty() ? output_directory() : out_dir;
    const ScenarioReport r = scenario_run_file(path, dir);
    print_report_summary(r);
    code = report_exit(r);
  });

  // solve
  std::string system_name = "heisenberg1", operator_name = "sublaplacian", phi, boundary = "0";
  std::string field_out, csv_out, history_out, method = "implicit";
  double tolerance = 1e-8;
  int max_iterations = 200000;
  DomainOpts domain;
  auto* solve = app.add_subcommand("solve", "Solve the Dirichlet problem L u = 0");
  solve->add_option("--system", system_name, "System preset")->capture_default_str();
  solve->add_option("--operator", operator_name, "Operator preset")->capture_default_str();
  solve->add_option("--phi", phi, "Scaling profile, e.g. power:3");
  solve->add_option("--boundary", boundary, "Boundary data expression, e.g. 'x^2 - y^2'")->capture_default_str();
  solve->add_option("--tolerance", tolerance)->capture_default_str();
  solve->add_option("--max-iterations", max_iterations)->capture_default_str();
  solve->add_option("--method", method, "implicit or explicit")->capture_default_str();
  solve->add_option("--out", field_out, "Binary field output");
  solve->add_option("--csv", csv_out, "CSV field output");
  solve->add_option("--history", history_out, "Convergence history CSV");
  domain.add(solve);
  solve->callback([&] {
    const VectorFieldSystem sys = make_preset_system(system_name);
    const QuasilinearOperator op = make_preset_operator(operator_name, phi);
    const Grid grid = domain.grid(sys.dim());
    const Expression f = Expression::parse_for_dimension(boundary, sys.dim());
    SolverParams params;
    params.tolerance = tolerance;
    params.max_iterations = max_iterations;
    if (method == "explicit") params.method = SolveMethod::Explicit;
    else if (method != "implicit") throw ConfigError("solver", "unknown method '" + method + "'");
    SolveResult r;
    try {
      r = solve_dirichlet(op, sys.with_domain(grid.box()), grid, [&](const Point& x) { return f(x); }, params);
    } catch (const NonconvergenceError& e) {
      std::cerr << e.what() << "\n";
      code = kFail;
      return;
    }
    std::cout << "iterations " << r.iterations << " residual " << r.residual << " degenerate_nodes "
              << r.degenerate_nodes << "\n";
    if (!field_out.empty()) write_field(field_out, r.solution);
    if (!csv_out.empty()) write_field_csv(csv_out, r.solution);
    if (!history_out.empty()) {
      std::ofstream h(history_out);
      h.precision(17);
      h << "iteration,residual\n";
      for (const auto& [it, res] : r.history) h << it << ',' << res << '\n';
    }
  });

  // distance
  std::vector<std::string> points;
  std::string distance_csv;
  OracleOpts oracle_opts;
  auto* distance = app.add_subcommand("distance", "Tabulate oracle distances between points");
  distance->add_option("--system", system_name)->capture_default_str();
  distance->add_option("--point", points, "Point 'a,b,c' (repeat)")->required();
  distance->add_option("--csv", distance_csv, "Write the (x, y, d) table here");
  oracle_opts.add(distance);
  domain.add(distance);
  distance->callback([&] {
    const VectorFieldSystem sys = make_preset_system(system_name);
    std::vector<Point> pts;
    for (const auto& p : points) {
      pts.push_back(parse_point(p));
      if (pts.back().size() != sys.dim()) throw ConfigError("distance", "point '" + p + "' has the wrong dimension");
    }
    const Box box = Box::cube(sys.dim(), domain.lo, domain.hi);
    const DistanceOracle d = oracle_opts.build(sys, box);
    std::cout.precision(12);
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = 0; b < pts.size(); ++b)
        std::cout << points[a] << " -> " << points[b] << " : " << d.value(pts[a].data(), pts[b].data()) << "\n";
    if (!distance_csv.empty()) write_distance_table(distance_csv, d, pts);
  });

  // convolve
  std::string field_in, kind = "sup";
  double epsilon = 0.05;
  auto* convolve = app.add_subcommand("convolve", "Sup- or inf-convolution of a field");
  convolve->add_option("field", field_in, "Input field file")->required();
  convolve->add_option("--system", system_name)->capture_default_str();
  convolve->add_option("--epsilon", epsilon)->capture_default_str();
  convolve->add_option("--kind", kind, "sup or inf")->capture_default_str();
  convolve->add_option("--out", field_out, "Binary field output")->required();
  convolve->add_option("--csv", csv_out, "CSV field output");
  oracle_opts.add(convolve);
  convolve->callback([&] {
    const GridFunction u = read_field(field_in);
    const VectorFieldSystem sys = make_preset_system(system_name);
    if (sys.dim() != u.grid().dim()) throw ConfigError("convolve", "field dimension does not match the system");
    const DistanceOracle d = oracle_opts.build(sys, u.grid().box());
    if (kind != "sup" && kind != "inf") throw ConfigError("convolve", "--kind must be sup or inf");
    const Envelope e = kind == "sup" ? sup_convolution(u, epsilon, d) : inf_convolution(u, epsilon, d);
    write_field(field_out, e.field);
    if (!csv_out.empty()) write_field_csv(csv_out, e.field);
    std::cout << kind << "-convolution eps " << epsilon << " max " << e.field.max() << " min " << e.field.min() << "\n";
  });

  // check-structure
  int samples = 10000, fields = 2;
  std::uint64_t seed = 0;
  auto* structure = app.add_subcommand("check-structure", "Sample the structure conditions of an operator");
  structure->add_option("--operator", operator_name)->capture_default_str();
  structure->add_option("--phi", phi, "Scaling profile, e.g. power:3");
  structure->add_option("--samples", samples)->capture_default_str();
  structure->add_option("--fields", fields, "Number of horizontal fields m")->capture_default_str();
  structure->add_option("--seed", seed)->capture_default_str();
  structure->callback([&] {
    const QuasilinearOperator op = make_preset_operator(operator_name, phi);
    const StructureReport r = check_structure(op, fields, samples, {1.0, 4.0}, {0.1, 10.0}, seed);
    std::cout << op.name << " phi " << op.phi_name << ": " << r.violations.size() << " violations over "
              << r.samples << " samples\n";
    std::cout << "worst diffusion margin " << r.worst_diffusion_margin << ", worst drift margin "
              << r.worst_drift_margin << "\n";
    std::size_t shown = 0;
    for (const auto& v : r.violations) {
      if (++shown > 10) break;
      std::cout << "  " << v.check << " margin " << v.margin << " t " << v.t << " xi " << v.xi.transpose() << "\n";
    }
    code = r.passed() ? kPass : kFail;
  });

  // compare
  std::string field_a, field_b, mask_path;
  double compare_tol = 1e-6;
  auto* compare = app.add_subcommand("compare", "Comparison check between two fields");
  compare->add_option("u", field_a, "Subsolution field")->required();
  compare->add_option("v", field_b, "Supersolution field")->required();
  compare->add_option("--mask", mask_path, "Field whose nonzero values mark the interior");
  compare->add_option("--tolerance", compare_tol)->capture_default_str();
  compare->callback([&] {
    const GridFunction u = read_field(field_a);
    const GridFunction v = read_field(field_b);
    std::vector<std::uint8_t> mask = u.mask();
    if (!mask_path.empty()) {
      const GridFunction m = read_field(mask_path);
      if (!m.grid().same_lattice(u.grid())) throw GridMismatchError("mask lives on a different grid");
      for (std::size_t i = 0; i < m.size(); ++i) mask[i] = m[i] != 0.0;
    }
    const ComparisonResult r = comparison_check(u, v, mask, compare_tol);
    std::cout << "max_interior_gap " << r.max_interior_gap << " max_boundary_gap " << r.max_boundary_gap
              << " argmax_nodes " << r.argmax_nodes.size() << "\n";
    if (!r.pass) {
      const auto idx = u.grid().multi_index(*r.offending_node);
      std::cerr << "comparison failed at node " << *r.offending_node << " (";
      for (std::size_t k = 0; k < idx.size(); ++k) std::cerr << (k ? "," : "") << idx[k];
      std::cerr << ") point " << u.grid().point(*r.offending_node).transpose() << "\n";
    }
    code = r.pass ? kPass : kFail;
  });

  // probe
  std::string probe_name, at_text, u_path, v_path;
  double delta = 0.2, extent = 0.0, radius = 0.3;
  int per_axis = 3, configs = 50;
  auto* probe = app.add_subcommand("probe", "Run a named probe");
  probe->add_option("name", probe_name, "nsw, lipschitz, jensen, chainrule or perturbation")
      ->required()
      ->check(CLI::IsMember({"nsw", "lipschitz", "jensen", "chainrule", "perturbation"}));
  probe->add_option("--system", system_name)->capture_default_str();
  probe->add_option("--operator", operator_name)->capture_default_str();
  probe->add_option("--phi", phi);
  probe->add_option("--seed", seed)->capture_default_str();
  probe->add_option("--samples", samples, "nsw samples / jensen trials")->capture_default_str();
  probe->add_option("--configs", configs, "chainrule/perturbation configurations")->capture_default_str();
  probe->add_option("--at", at_text, "Base point 'a,b,c' (default: domain center)");
  probe->add_option("--u", u_path, "lipschitz: u field; jensen: the field");
  probe->add_option("--v", v_path, "lipschitz: v field");
  probe->add_option("--delta", delta, "lipschitz: shrink radius; jensen: perturbation radius")->capture_default_str();
  probe->add_option("--extent", extent, "lipschitz: translation extent (default delta/(2 sqrt m))");
  probe->add_option("--per-axis", per_axis)->capture_default_str();
  probe->add_option("--radius", radius, "jensen: ball radius")->capture_default_str();
  oracle_opts.add(probe);
  domain.add(probe);
  probe->callback([&] {
    const VectorFieldSystem base = make_preset_system(system_name);
    const Box box = Box::cube(base.dim(), domain.lo, domain.hi);
    const VectorFieldSystem sys = base.with_domain(box);
    const Point at = at_text.empty() ? Point((box.lo + box.hi) / 2.0) : parse_point(at_text);
    if (at.size() != sys.dim()) throw ConfigError("probe", "--at has the wrong dimension");
    if (probe_name == "nsw") {
      const NswResult r = nsw_probe(sys, oracle_opts.build(sys, box), at, samples, seed);
      std::cout << "slope " << r.slope << " c1 " << r.c1 << " c2 " << r.c2 << " step " << r.step << "\n";
      code = r.slope_in_range && r.c1 > 0 && std::isfinite(r.c2) ? kPass : kFail;
    } else if (probe_name == "lipschitz") {
      if (u_path.empty() || v_path.empty()) throw ConfigError("probe", "lipschitz needs --u and --v");
      const GridFunction u = read_field(u_path);
      const GridFunction v = read_field(v_path);
      const VectorFieldSystem fs = base.with_domain(u.grid().box());
      const ShrunkenDomain omega = shrunken_domain(oracle_opts.build(fs, u.grid().box()), delta * delta, u.grid(), true);
      const double ext = extent > 0 ? extent : delta / (2.0 * std::sqrt(double(fs.fields())));
      const auto hs = h_lattice(fs.fields(), ext, per_axis);
      const TranslationTable t = translation_max_map(u, v, fs, omega.mask, delta, hs, hs);
      const LipschitzFit f = lipschitz_probe(t, u, v, fs);
      std::cout << "h_ratio " << f.h_ratio << " (<= " << f.slack << " * " << f.grad_u << ")  l_ratio "
                << f.l_ratio << " (<= " << f.slack << " * " << f.grad_v << ")\n";
      code = f.ok() ? kPass : kFail;
    } else if (probe_name == "jensen") {
      if (u_path.empty()) throw ConfigError("probe", "jensen needs --u");
      const GridFunction w = read_field(u_path);
      const JensenResult r = jensen_probe(w, at, radius, delta, samples, seed);
      std::cout << "success fraction " << r.success_fraction << " (" << r.successes << "/" << r.trials << ")\n";
      code = r.successes > 0 ? kPass : kFail;
    } else {
      const QuasilinearOperator op = make_preset_operator(operator_name, phi);
      const ProbeSuiteResult r = probe_name == "chainrule" ? chain_rule_suite(op, sys, box, configs, seed)
                                                           : perturbation_suite(op, sys, box, configs, seed);
      std::cout << probe_name << ": " << r.failures << " failures over " << r.configurations
                << " configurations, worst margin " << r.worst_margin << "\n";
      code = r.passed() ? kPass : kFail;
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kPass : kConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const GridMismatchError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
  return code;
}
