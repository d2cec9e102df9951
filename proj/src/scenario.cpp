#include "sublab/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "sublab/envelope.hpp"
#include "sublab/errors.hpp"
#include "sublab/expression.hpp"
#include "sublab/field_io.hpp"
#include "sublab/metric.hpp"
#include "sublab/operator.hpp"
#include "sublab/solver.hpp"

namespace sublab {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

bool ScenarioReport::has_config_error() const {
  for (const auto& e : stage_errors)
    if (e.config) return true;
  return false;
}

std::string ScenarioReport::verdict() const {
  if (!stage_errors.empty()) return "error";
  for (const auto& [name, ok] : checks)
    if (!ok) return "fail";
  return "pass";
}

namespace {

ojson number(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }

}  // namespace

ojson ScenarioReport::to_json() const {
  ojson j;
  j["scenario_id"] = scenario_id;
  j["verdict"] = verdict();
  j["max_interior_gap"] = number(max_interior_gap);
  j["max_boundary_gap"] = number(max_boundary_gap);
  j["argmax_nodes"] = argmax_nodes;
  ojson checks_json = ojson::object();
  for (const auto& [name, ok] : checks) checks_json[name] = ok;
  j["checks"] = checks_json;
  ojson fitted = ojson::object();
  for (const auto& [name, value] : fitted_constants) fitted[name] = number(value);
  j["fitted_constants"] = fitted;
  ojson viol = ojson::array();
  for (const auto& v : violations) {
    ojson e;
    e["check"] = v.check;
    e["node"] = v.node ? ojson(*v.node) : ojson(nullptr);
    e["margin"] = number(v.margin);
    viol.push_back(e);
  }
  j["violations"] = viol;
  ojson errs = ojson::array();
  for (const auto& e : stage_errors) errs.push_back({{"stage", e.stage}, {"message", e.message}});
  j["stage_errors"] = errs;
  j["details"] = details;
  return j;
}

ScenarioReport comparison_report(const ComparisonResult& r, std::string scenario_id) {
  ScenarioReport rep;
  rep.scenario_id = std::move(scenario_id);
  rep.max_interior_gap = r.max_interior_gap;
  rep.max_boundary_gap = r.max_boundary_gap;
  rep.argmax_nodes = r.argmax_nodes;
  rep.checks["comparison"] = r.pass;
  if (!r.pass)
    rep.violations.push_back(
        {"comparison", r.offending_node, r.max_boundary_gap - r.max_interior_gap});
  return rep;
}

std::string output_directory(const std::string& fallback) {
  if (const char* env = std::getenv("SUBLAB_OUT"); env && *env) return env;
  return fallback;
}

namespace {

using Table = std::vector<std::vector<double>>;

Table read_table(const json& j, const std::string& stage) {
  if (!j.is_array()) throw ConfigError(stage, "coefficient table must be a list of rows");
  return j.get<Table>();
}

VectorFieldSystem build_system(const json& c) {
  if (c.contains("preset")) return make_preset_system(c.at("preset").get<std::string>());
  if (!c.contains("n") || !c.contains("fields"))
    throw ConfigError("system", "needs either 'preset' or 'n' and 'fields'");
  const int n = c.at("n").get<int>();
  std::vector<PolynomialField> cols;
  for (const auto& f : c.at("fields")) {
    if (!f.is_array() || static_cast<int>(f.size()) != n)
      throw ConfigError("system", "each field needs one coefficient table per coordinate");
    PolynomialField col;
    for (const auto& t : f) col.push_back(Polynomial::from_table(n, read_table(t, "system")));
    cols.push_back(std::move(col));
  }
  if (cols.empty()) throw ConfigError("system", "no fields given");
  auto sys = VectorFieldSystem::from_polynomials(std::move(cols), c.value("name", "custom"));
  if (c.contains("declared_step")) sys = sys.with_declared_step(c.at("declared_step").get<int>());
  return sys;
}

std::vector<double> per_axis(const json& j, int n, const std::string& key) {
  if (j.is_number()) return std::vector<double>(n, j.get<double>());
  auto v = j.get<std::vector<double>>();
  if (static_cast<int>(v.size()) != n) throw ConfigError("domain", "'" + key + "' has the wrong length");
  return v;
}

Grid build_grid(const json& d, int n) {
  for (const char* key : {"lo", "hi", "counts"})
    if (!d.contains(key)) throw ConfigError("domain", std::string("missing '") + key + "'");
  const auto lo = per_axis(d.at("lo"), n, "lo");
  const auto hi = per_axis(d.at("hi"), n, "hi");
  const auto c = per_axis(d.at("counts"), n, "counts");
  Box box{Eigen::Map<const Eigen::VectorXd>(lo.data(), n), Eigen::Map<const Eigen::VectorXd>(hi.data(), n)};
  std::vector<int> counts;
  for (double x : c) counts.push_back(static_cast<int>(x));
  try {
    return Grid(box, counts);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("domain", e.what());
  }
}

DistanceOracle build_oracle(const json& c, const VectorFieldSystem& sys, const Grid& grid) {
  const std::string kind = c.value("kind", "gauge");
  if (kind == "euclidean") return euclidean_oracle(sys.dim());
  if (kind == "heisenberg_gauge") return heisenberg_gauge_oracle();
  if (kind == "gauge") {
    if (sys.name().rfind("euclidean", 0) == 0) return euclidean_oracle(sys.dim());
    if (sys.name() == "heisenberg1") return heisenberg_gauge_oracle();
    throw ConfigError("oracle", "no closed-form gauge for system '" + sys.name() + "'; use kind 'graph'");
  }
  if (kind == "graph") {
    GraphLattice lattice = default_lattice(sys, grid.box(), c.value("step", 0.125));
    lattice.substeps = c.value("substeps", lattice.substeps);
    return graph_oracle(sys, lattice);
  }
  throw ConfigError("oracle", "unknown kind '" + kind + "'");
}

// Ratio of two polynomials in the horizontal variables; denominator 1 when absent.
struct Rational {
  Polynomial num;
  std::optional<Polynomial> den;
  double operator()(const HVector& xi) const {
    const double top = num(xi);
    return den ? top / (*den)(xi) : top;
  }
};

QuasilinearOperator build_operator(const json& c, int m) {
  const std::string phi = c.value("phi", "");
  if (c.contains("preset")) return make_preset_operator(c.at("preset").get<std::string>(), phi);
  if (!c.contains("A")) throw ConfigError("operator", "needs either 'preset' or 'A'");
  std::optional<Polynomial> a_den;
  if (c.contains("A_denominator")) a_den = Polynomial::from_table(m, read_table(c.at("A_denominator"), "operator"));
  std::vector<Rational> entries;
  const auto& rows = c.at("A");
  if (!rows.is_array() || static_cast<int>(rows.size()) != m)
    throw ConfigError("operator", "'A' must have one row per field");
  for (const auto& row : rows) {
    if (!row.is_array() || static_cast<int>(row.size()) != m)
      throw ConfigError("operator", "'A' must be square");
    for (const auto& t : row) entries.push_back({Polynomial::from_table(m, read_table(t, "operator")), a_den});
  }
  Rational h{Polynomial::constant(m, 0.0), std::nullopt};
  if (c.contains("H")) {
    h.num = Polynomial::from_table(m, read_table(c.at("H"), "operator"));
    if (c.contains("H_denominator"))
      h.den = Polynomial::from_table(m, read_table(c.at("H_denominator"), "operator"));
  }
  QuasilinearOperator op;
  op.name = c.value("name", "custom");
  op.A = [entries, m](const HVector& xi) {
    Eigen::MatrixXd a(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) a(i, j) = entries[i * m + j](xi);
    return a;
  };
  op.H = [h](const HVector& xi) { return h(xi); };
  op.phi_name = phi.empty() ? "power:1" : phi;
  op.phi = parse_profile(op.phi_name);
  const std::string rule = c.value("zero_gradient_rule", "none");
  if (rule == "drop") op.zero_gradient_rule = ZeroGradientRule::DropDiffusion;
  else if (rule != "none") throw ConfigError("operator", "zero_gradient_rule must be 'none' or 'drop'");
  return op;
}

SolverParams build_solver_params(const json& c) {
  SolverParams p;
  p.tolerance = c.value("tolerance", p.tolerance);
  p.max_iterations = c.value("max_iterations", p.max_iterations);
  p.tau = c.value("tau", p.tau);
  p.cfl = c.value("cfl", p.cfl);
  const std::string method = c.value("method", "implicit");
  if (method == "explicit") p.method = SolveMethod::Explicit;
  else if (method != "implicit") throw ConfigError("solver", "method must be 'implicit' or 'explicit'");
  return p;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string history_csv(const std::vector<std::pair<int, double>>& sub,
                        const std::vector<std::pair<int, double>>& super) {
  std::ostringstream s;
  s.precision(17);
  s << "field,iteration,residual\n";
  for (const auto& [it, r] : sub) s << "sub," << it << ',' << r << '\n';
  for (const auto& [it, r] : super) s << "super," << it << ',' << r << '\n';
  return s.str();
}

const std::vector<std::string> kAllChecks = {"rank",       "structure", "growth",
                                             "nsw",        "comparison", "nodewise",
                                             "envelope",   "strong_max", "translation"};

class Runner {
 public:
  Runner(const json& config, std::string out_dir) : cfg_(config), out_dir_(std::move(out_dir)) {}

  ScenarioReport run() {
    rep_.scenario_id = cfg_.value("id", "scenario");
    seed_ = cfg_.value("seed", std::uint64_t{0});
    tolerance_ = cfg_.value("tolerance", 1e-6);

    stage("system", [&] {
      if (!cfg_.contains("system")) throw ConfigError("system", "missing section");
      sys_ = build_system(cfg_.at("system"));
      rep_.details["system"] = {{"name", sys_->name()}, {"n", sys_->dim()}, {"m", sys_->fields()}};
    });
    if (sys_) stage("domain", [&] {
      if (!cfg_.contains("domain")) throw ConfigError("domain", "missing section");
      grid_ = build_grid(cfg_.at("domain"), sys_->dim());
      sys_ = sys_->with_domain(grid_->box());
    });
    if (grid_) stage("oracle", [&] {
      oracle_ = build_oracle(cfg_.value("oracle", json::object()), *sys_, *grid_);
      rep_.details["oracle"] = oracle_->name();
    });
    if (sys_) stage("operator", [&] {
      if (!cfg_.contains("operator")) throw ConfigError("operator", "missing section");
      op_ = build_operator(cfg_.at("operator"), sys_->fields());
      rep_.details["operator"] = {{"name", op_->name}, {"phi", op_->phi_name}};
    });
    if (grid_) stage("fields", [&] { build_fields(); });

    std::vector<std::string> checks = kAllChecks;
    if (cfg_.contains("checks")) checks = cfg_.at("checks").get<std::vector<std::string>>();
    for (const auto& name : checks) {
      if (std::find(kAllChecks.begin(), kAllChecks.end(), name) == kAllChecks.end()) {
        rep_.stage_errors.push_back({"checks", "unknown check '" + name + "'", true});
        continue;
      }
      stage(name, [&] { run_check(name); });
    }
    if (!out_dir_.empty()) stage("output", [&] { write_outputs(); });
    return std::move(rep_);
  }

 private:
  template <class F>
  void stage(const std::string& name, F&& f) {
    try {
      f();
    } catch (const ConfigError& e) {
      rep_.stage_errors.push_back({name, e.what(), true});
    } catch (const json::exception& e) {
      rep_.stage_errors.push_back({name, e.what(), true});
    } catch (const std::exception& e) {
      rep_.stage_errors.push_back({name, e.what(), false});
    }
  }

  void build_fields() {
    const int n = sys_->dim();
    if (cfg_.contains("fields")) {
      const auto& f = cfg_.at("fields");
      const Expression eu = Expression::parse_for_dimension(f.at("u").get<std::string>(), n);
      const Expression ev = Expression::parse_for_dimension(f.at("v").get<std::string>(), n);
      u_ = GridFunction::sample(*grid_, [&](const Point& x) { return eu(x); });
      v_ = GridFunction::sample(*grid_, [&](const Point& x) { return ev(x); });
      return;
    }
    if (!cfg_.contains("solver")) return;
    if (!op_) throw ConfigError("fields", "the solver needs an operator");
    const auto& s = cfg_.at("solver");
    const Expression f = Expression::parse_for_dimension(s.at("boundary").get<std::string>(), n);
    const double gap = s.value("gap", 0.1);
    const SolverParams params = build_solver_params(s);
    solver_tolerance_ = params.tolerance;
    SubSuperPair pair = make_sub_super_pair(*op_, *sys_, *grid_, [&](const Point& x) { return f(x); },
                                            gap, params);
    rep_.fitted_constants["solver.sub_max_residual"] = pair.sub_max_residual;
    rep_.fitted_constants["solver.super_min_residual"] = pair.super_min_residual;
    rep_.details["solver"] = {{"sub_iterations", pair.sub_iterations},
                              {"super_iterations", pair.super_iterations},
                              {"gap", gap}};
    history_ = history_csv(pair.sub_history, pair.super_history);
    u_ = std::move(pair.sub);
    v_ = std::move(pair.super);
  }

  void require(bool cond, const std::string& what) {
    if (!cond) throw ConfigError("checks", what);
  }

  void record(const std::string& check, bool ok) {
    auto it = rep_.checks.find(check);
    rep_.checks[check] = it == rep_.checks.end() ? ok : (it->second && ok);
  }

  void run_check(const std::string& name) {
    if (name == "rank") return check_rank();
    if (name == "structure") return check_structure_();
    if (name == "growth") return check_growth();
    if (name == "nsw") return check_nsw();
    if (name == "comparison") return check_comparison();
    if (name == "nodewise") return check_nodewise();
    if (name == "envelope") return check_envelope();
    if (name == "strong_max") return check_strong_max();
    if (name == "translation") return check_translation();
  }

  std::vector<Point> sample_points(int count) const {
    std::mt19937_64 rng(seed_);
    std::vector<Point> pts;
    const Box& b = grid_->box();
    for (int k = 0; k < count; ++k) {
      Point x(b.dim());
      for (int a = 0; a < b.dim(); ++a)
        x[a] = std::uniform_real_distribution<double>(b.lo[a], b.hi[a])(rng);
      pts.push_back(x);
    }
    return pts;
  }

  void check_rank() {
    require(grid_.has_value(), "rank needs a system and a domain");
    int max_step = 0;
    bool ok = true;
    for (const Point& x : sample_points(20)) {
      const RankResult r = hormander_rank(*sys_, x, 6);
      if (!r.step) {
        ok = false;
        rep_.violations.push_back({"rank", grid_->nearest(x), -1.0});
        continue;
      }
      max_step = std::max(max_step, *r.step);
      if (sys_->declared_step() && *r.step > *sys_->declared_step()) {
        ok = false;
        rep_.violations.push_back({"rank", grid_->nearest(x), double(*sys_->declared_step() - *r.step)});
      }
    }
    rep_.fitted_constants["rank.step"] = max_step;
    record("rank", ok);
  }

  void check_structure_() {
    require(op_.has_value(), "structure needs an operator");
    const StructureReport r = check_structure(*op_, sys_->fields(), 1000, {1.0, 4.0}, {0.1, 10.0}, seed_);
    for (const auto& v : r.violations) rep_.violations.push_back({"structure." + v.check, std::nullopt, v.margin});
    rep_.fitted_constants["structure.worst_diffusion_margin"] = r.worst_diffusion_margin;
    rep_.fitted_constants["structure.worst_drift_margin"] = r.worst_drift_margin;
    record("structure", r.passed());
  }

  void check_growth() {
    require(op_.has_value(), "growth needs an operator");
    const int m = sys_->fields();
    std::mt19937_64 rng(seed_);
    std::normal_distribution<double> g;
    bool ok = true;
    for (double theta : {0.5, 1.0, 2.0}) {
      std::vector<HVector> xs;
      for (int k = 0; k < 200; ++k) {
        HVector xi(m);
        for (int a = 0; a < m; ++a) xi[a] = g(rng);
        xi *= theta * std::uniform_real_distribution<double>(1.0, 4.0)(rng) / xi.norm();
        xs.push_back(xi);
      }
      const GrowthReport r = growth_lower_bound(*op_, theta, xs, 512, seed_);
      std::ostringstream key;
      key << "growth.theta_" << theta;
      rep_.fitted_constants[key.str() + ".a_theta"] = r.a_theta;
      rep_.fitted_constants[key.str() + ".worst_margin"] = r.worst_margin;
      if (!r.passed()) {
        ok = false;
        rep_.violations.push_back({"growth", std::nullopt, r.worst_margin});
      }
    }
    record("growth", ok);
  }

  void check_nsw() {
    require(oracle_.has_value(), "nsw needs an oracle");
    const Point center = (grid_->box().lo + grid_->box().hi) / 2.0;
    const auto c = cfg_.value("nsw", json::object());
    const NswResult r = nsw_probe(*sys_, *oracle_, center, c.value("samples", 200), seed_,
                                  c.value("radius", 0.1));
    rep_.fitted_constants["nsw.slope"] = r.slope;
    rep_.fitted_constants["nsw.c1"] = r.c1;
    rep_.fitted_constants["nsw.c2"] = r.c2;
    rep_.fitted_constants["nsw.step"] = r.step;
    const bool ok = r.slope_in_range && r.c1 > 0 && std::isfinite(r.c2);
    if (!ok) rep_.violations.push_back({"nsw", std::nullopt, r.slope});
    record("nsw", ok);
  }

  void check_comparison() {
    require(u_.has_value(), "comparison needs fields (a 'fields' or 'solver' section)");
    const ComparisonResult r = comparison_check(*u_, *v_, default_mask(*grid_), tolerance_);
    rep_.max_interior_gap = r.max_interior_gap;
    rep_.max_boundary_gap = r.max_boundary_gap;
    rep_.argmax_nodes = r.argmax_nodes;
    if (!r.pass)
      rep_.violations.push_back({"comparison", r.offending_node, r.max_boundary_gap + tolerance_ - r.max_interior_gap});
    record("comparison", r.pass);
  }

  void check_nodewise() {
    require(u_.has_value(), "nodewise needs fields");
    double worst = -kInf;
    std::size_t at = 0;
    for (std::size_t i = 0; i < u_->size(); ++i)
      if ((*u_)[i] - (*v_)[i] > worst) {
        worst = (*u_)[i] - (*v_)[i];
        at = i;
      }
    rep_.fitted_constants["nodewise.max_gap"] = worst;
    const bool ok = worst <= tolerance_;
    if (!ok) rep_.violations.push_back({"nodewise", at, tolerance_ - worst});
    record("nodewise", ok);
  }

  void check_envelope() {
    require(u_.has_value() && oracle_.has_value(), "envelope needs fields and an oracle");
    const auto epsilons = cfg_.value("envelope", json::object()).value("epsilons", std::vector<double>{});
    require(!epsilons.empty(), "envelope needs 'envelope.epsilons'");
    const double R = 2.0 * std::max(u_->max_abs(), v_->max_abs());
    std::ostringstream csv;
    csv.precision(17);
    csv << "epsilon,mask_count,max_interior_gap,max_boundary_gap,deviation_u,deviation_v,pass\n";
    ojson rows = ojson::array();
    bool ok = true;
    bool any_mask = false;
    for (double eps : epsilons) {
      const Envelope ue = sup_convolution(*u_, eps, *oracle_);
      const Envelope ve = inf_convolution(*v_, eps, *oracle_);
      // Ordering u <= u^eps and v_eps <= v hold at every node.
      for (std::size_t i = 0; i < u_->size(); ++i) {
        if (ue.field[i] < (*u_)[i]) {
          ok = false;
          rep_.violations.push_back({"envelope.ordering", i, ue.field[i] - (*u_)[i]});
        }
        if (ve.field[i] > (*v_)[i]) {
          ok = false;
          rep_.violations.push_back({"envelope.ordering", i, (*v_)[i] - ve.field[i]});
        }
      }
      const ShrunkenDomain mask = shrunken_domain(*oracle_, (1.0 + 4.0 * R) * eps, *grid_);
      ojson row = {{"epsilon", eps}, {"mask_count", mask.count}};
      if (mask.empty) {
        row["note"] = "empty mask";
        rows.push_back(row);
        csv << eps << ",0,,,,,\n";
        continue;
      }
      any_mask = true;
      const ComparisonResult r = comparison_check(ue.field, ve.field, mask.mask, tolerance_);
      double dev_u = 0.0, dev_v = 0.0;
      for (std::size_t i = 0; i < u_->size(); ++i)
        if (mask.mask[i]) {
          dev_u = std::max(dev_u, ue.field[i] - (*u_)[i]);
          dev_v = std::max(dev_v, (*v_)[i] - ve.field[i]);
        }
      row["max_interior_gap"] = number(r.max_interior_gap);
      row["max_boundary_gap"] = number(r.max_boundary_gap);
      row["deviation_u"] = dev_u;
      row["deviation_v"] = dev_v;
      row["pass"] = r.pass;
      rows.push_back(row);
      csv << eps << ',' << mask.count << ',' << r.max_interior_gap << ',' << r.max_boundary_gap << ','
          << dev_u << ',' << dev_v << ',' << (r.pass ? 1 : 0) << '\n';
      if (!r.pass) {
        ok = false;
        rep_.violations.push_back({"envelope.comparison", r.offending_node,
                                   r.max_boundary_gap + tolerance_ - r.max_interior_gap});
      }
    }
    if (!any_mask) {
      ok = false;
      rep_.violations.push_back({"envelope.mask", std::nullopt, 0.0});
    }
    rep_.details["envelope"] = rows;
    rep_.fitted_constants["envelope.R"] = R;
    side_files_["envelope.csv"] = csv.str();
    record("envelope", ok);
  }

  void check_strong_max() {
    require(u_.has_value() && op_.has_value(), "strong_max needs fields and an operator");
    const StrongMaxResult r = strong_max_probe(*op_, *sys_, *u_, solver_tolerance_);
    rep_.details["strong_max"] = {{"verdict", to_string(r.verdict)},
                                  {"max_residual", number(r.max_residual)},
                                  {"oscillation", number(r.oscillation)}};
    if (!r.consistent()) rep_.violations.push_back({"strong_max", std::nullopt, -r.oscillation});
    record("strong_max", r.consistent());
  }

  void check_translation() {
    require(u_.has_value() && oracle_.has_value(), "translation needs fields and an oracle");
    const auto c = cfg_.value("translation", json::object());
    const int m = sys_->fields();
    const double delta = c.value("delta", 0.2);
    const double extent = c.value("extent", delta / (2.0 * std::sqrt(double(m))));
    const int count = c.value("per_axis", 3);
    const double slack = c.value("lipschitz_slack", 1.2);
    const ShrunkenDomain omega = shrunken_domain(*oracle_, delta * delta, *grid_, true);
    require(!omega.empty, "translation mask is empty; lower 'translation.delta'");
    const auto hs = h_lattice(m, extent, count);
    const TranslationTable t = translation_max_map(*u_, *v_, *sys_, omega.mask, delta, hs, hs);
    const LipschitzFit fit = lipschitz_probe(t, *u_, *v_, *sys_, slack);
    rep_.fitted_constants["translation.h_ratio"] = fit.h_ratio;
    rep_.fitted_constants["translation.l_ratio"] = fit.l_ratio;
    rep_.fitted_constants["translation.grad_u"] = fit.grad_u;
    rep_.fitted_constants["translation.grad_v"] = fit.grad_v;
    std::size_t invalid = 0;
    std::ostringstream csv;
    csv.precision(17);
    for (int k = 0; k < m; ++k) csv << 'h' << k << ',';
    for (int k = 0; k < m; ++k) csv << 'l' << k << ',';
    csv << "M,valid,argmax_count\n";
    for (std::size_t a = 0; a < hs.size(); ++a)
      for (std::size_t b = 0; b < hs.size(); ++b) {
        const auto& cell = t.cell(a, b);
        for (int k = 0; k < m; ++k) csv << hs[a][k] << ',';
        for (int k = 0; k < m; ++k) csv << hs[b][k] << ',';
        if (cell.valid) csv << cell.value << ",1," << cell.argmax.size() << '\n';
        else csv << ",0,0\n";
        invalid += cell.valid ? 0 : 1;
      }
    side_files_["translation.csv"] = csv.str();
    rep_.details["translation"] = {{"delta", delta},   {"extent", extent},       {"per_axis", count},
                                   {"mask_count", omega.count}, {"invalid_cells", invalid}};
    if (!fit.h_ok) rep_.violations.push_back({"translation.h", std::nullopt, slack * fit.grad_u - fit.h_ratio});
    if (!fit.l_ok) rep_.violations.push_back({"translation.l", std::nullopt, slack * fit.grad_v - fit.l_ratio});
    record("translation", fit.ok());
  }

  void write_outputs() {
    namespace fs = std::filesystem;
    const fs::path dir(out_dir_);
    fs::create_directories(dir);
    const std::string id = rep_.scenario_id;
    write_text(dir / (id + ".report.json"), rep_.to_json().dump(2) + "\n");
    for (const auto& [suffix, text] : side_files_) write_text(dir / (id + "." + suffix), text);
    if (!history_.empty()) write_text(dir / (id + ".history.csv"), history_);
    if (u_) {
      write_field((dir / (id + ".u.field")).string(), *u_);
      write_field((dir / (id + ".v.field")).string(), *v_);
    }
  }

  const json& cfg_;
  std::string out_dir_;
  ScenarioReport rep_;
  std::uint64_t seed_ = 0;
  double tolerance_ = 1e-6;
  double solver_tolerance_ = 1e-8;
  std::optional<VectorFieldSystem> sys_;
  std::optional<Grid> grid_;
  std::optional<DistanceOracle> oracle_;
  std::optional<QuasilinearOperator> op_;
  std::optional<GridFunction> u_;
  std::optional<GridFunction> v_;
  std::map<std::string, std::string> side_files_;
  std::string history_;
};

}  // namespace

ScenarioReport scenario_run(const json& config, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioReport rep;
  if (!config.is_object()) {
    rep.scenario_id = "scenario";
    rep.stage_errors.push_back({"config", "scenario must be a JSON object", true});
  } else {
    rep = Runner(config, out_dir).run();
  }
  rep.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

ScenarioReport scenario_run_file(const std::string& path, const std::string& out_dir) {
  std::ifstream in(path);
  if (!in) {
    ScenarioReport rep;
    rep.scenario_id = std::filesystem::path(path).stem().string();
    rep.stage_errors.push_back({"config", "cannot open " + path, true});
    return rep;
  }
  json config;
  try {
    config = json::parse(in);
  } catch (const json::exception& e) {
    ScenarioReport rep;
    rep.scenario_id = std::filesystem::path(path).stem().string();
    rep.stage_errors.push_back({"config", e.what(), true});
    return rep;
  }
  return scenario_run(config, out_dir);
}

}  // namespace sublab
