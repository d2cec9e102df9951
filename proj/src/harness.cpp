#include "sublab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sublab/errors.hpp"
#include "sublab/solver.hpp"

namespace sublab {

std::vector<std::uint8_t> mask_boundary(const Grid& grid, const std::vector<std::uint8_t>& mask) {
  const int n = grid.dim();
  std::vector<std::uint8_t> out(grid.size(), 0);
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!mask[i]) continue;
    grid.multi_index(i, idx.data());
    for (int k = 0; k < n; ++k) {
      const std::size_t s = grid.stride(k);
      if (idx[k] > 0 && !mask[i - s]) out[i - s] = 1;
      if (idx[k] + 1 < grid.count(k) && !mask[i + s]) out[i + s] = 1;
    }
  }
  return out;
}

ComparisonResult comparison_check(const GridFunction& u, const GridFunction& v,
                                  const std::vector<std::uint8_t>& interior_mask, double tolerance) {
  if (!u.grid().same_lattice(v.grid())) throw GridMismatchError("u and v live on different grids");
  if (interior_mask.size() != u.size()) throw GridMismatchError("mask size does not match the grid");
  const auto boundary = mask_boundary(u.grid(), interior_mask);

  ComparisonResult r;
  double interior = -kInf;
  double rim = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double gap = u[i] - v[i];
    if (interior_mask[i]) interior = std::max(interior, gap);
    if (boundary[i]) rim = std::max(rim, gap);
  }
  if (interior == -kInf) throw DegenerateInputError("comparison mask is empty");
  r.max_interior_gap = interior;
  r.max_boundary_gap = rim;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (interior_mask[i] && u[i] - v[i] >= interior - kArgmaxSlack) r.argmax_nodes.push_back(i);
  r.pass = interior <= rim + tolerance;
  if (!r.pass) r.offending_node = r.argmax_nodes.front();
  return r;
}

std::string to_string(StrongMaxVerdict v) {
  switch (v) {
    case StrongMaxVerdict::Constant: return "constant";
    case StrongMaxVerdict::BoundaryAttained: return "boundary-attained";
    case StrongMaxVerdict::Violation: return "violation";
    case StrongMaxVerdict::CertificationFailed: return "certification-failed";
    case StrongMaxVerdict::NotApplicable: return "not-applicable";
  }
  return "unknown";
}

StrongMaxResult strong_max_probe(const QuasilinearOperator& op, const VectorFieldSystem& sys,
                                 const GridFunction& u, double tolerance) {
  StrongMaxResult r;
  const GridFunction res = residual(op, sys, u);
  const Grid& g = u.grid();
  double interior_max = -kInf;
  double interior_min = kInf;
  r.max_residual = -kInf;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.on_rim(i)) continue;
    r.max_residual = std::max(r.max_residual, res[i]);
    interior_max = std::max(interior_max, u[i]);
    interior_min = std::min(interior_min, u[i]);
  }
  r.maximum = u.max();
  r.oscillation = u.max() - u.min();
  r.interior_attained = interior_max >= r.maximum - kArgmaxSlack;
  if (r.max_residual > tolerance) {
    r.verdict = StrongMaxVerdict::CertificationFailed;
  } else if (r.maximum < 0.0) {
    r.verdict = StrongMaxVerdict::NotApplicable;
  } else if (!r.interior_attained) {
    r.verdict = StrongMaxVerdict::BoundaryAttained;
  } else {
    r.verdict = r.oscillation <= 10.0 * tolerance ? StrongMaxVerdict::Constant
                                                  : StrongMaxVerdict::Violation;
  }
  return r;
}

std::vector<HVector> h_lattice(int m, double extent, int per_axis) {
  if (m < 1 || per_axis < 1) throw std::invalid_argument("h_lattice needs m >= 1 and per_axis >= 1");
  std::vector<HVector> out;
  std::vector<int> idx(m, 0);
  while (true) {
    HVector h(m);
    for (int k = 0; k < m; ++k)
      h[k] = per_axis == 1 ? 0.0 : -extent + 2.0 * extent * idx[k] / (per_axis - 1);
    out.push_back(h);
    int k = m - 1;
    while (k >= 0 && ++idx[k] == per_axis) idx[k--] = 0;
    if (k < 0) break;
  }
  return out;
}

namespace {

// Values of f at exp_x(h) for every masked node; nullopt if any flow leaves the grid.
std::optional<std::vector<double>> translated(const GridFunction& f, const VectorFieldSystem& sys,
                                              const std::vector<std::uint8_t>& mask,
                                              const HVector& h, int steps) {
  const Grid& g = f.grid();
  std::vector<double> out(g.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!mask[i]) continue;
    try {
      const Point y = exp_flow(sys, g.point(i), h, steps);
      if (!g.box().contains(y)) return std::nullopt;
      out[i] = f.interpolate(y);
    } catch (const FlowExitError&) {
      return std::nullopt;
    } catch (const std::out_of_range&) {
      return std::nullopt;
    }
  }
  return out;
}

}  // namespace

TranslationTable translation_max_map(const GridFunction& u, const GridFunction& v,
                                     const VectorFieldSystem& sys,
                                     const std::vector<std::uint8_t>& omega_delta, double delta,
                                     const std::vector<HVector>& hs, const std::vector<HVector>& ls,
                                     int flow_steps) {
  if (!u.grid().same_lattice(v.grid())) throw GridMismatchError("u and v live on different grids");
  if (omega_delta.size() != u.size()) throw GridMismatchError("mask size does not match the grid");
  if (std::none_of(omega_delta.begin(), omega_delta.end(), [](std::uint8_t b) { return b != 0; }))
    throw DegenerateInputError("the shrunken domain is empty");
  for (const auto* set : {&hs, &ls})
    for (const HVector& h : *set) {
      if (h.size() != sys.fields()) throw std::invalid_argument("translation has the wrong length");
      if (h.norm() >= delta) throw std::invalid_argument("translation norm must be below delta");
    }

  const VectorFieldSystem bounded = sys.with_domain(u.grid().box());
  std::vector<std::optional<std::vector<double>>> uh, vl;
  for (const HVector& h : hs) uh.push_back(translated(u, bounded, omega_delta, h, flow_steps));
  for (const HVector& l : ls) vl.push_back(translated(v, bounded, omega_delta, l, flow_steps));

  TranslationTable t;
  t.delta = delta;
  t.hs = hs;
  t.ls = ls;
  t.cells.resize(hs.size() * ls.size());
  for (std::size_t a = 0; a < hs.size(); ++a)
    for (std::size_t b = 0; b < ls.size(); ++b) {
      TranslationCell& c = t.cells[a * ls.size() + b];
      if (!uh[a] || !vl[b]) continue;
      const auto& U = *uh[a];
      const auto& V = *vl[b];
      double best = -kInf;
      for (std::size_t i = 0; i < U.size(); ++i)
        if (omega_delta[i]) best = std::max(best, U[i] - V[i]);
      c.valid = true;
      c.value = best;
      for (std::size_t i = 0; i < U.size(); ++i)
        if (omega_delta[i] && U[i] - V[i] >= best - kArgmaxSlack) c.argmax.push_back(i);
    }
  return t;
}

double horizontal_gradient_sup(const GridFunction& u, const VectorFieldSystem& sys) {
  const Grid& g = u.grid();
  const int n = g.dim();
  std::vector<int> idx(n);
  Eigen::VectorXd grad(n);
  double best = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.multi_index(i, idx.data());
    const Eigen::MatrixXd s = sys.sigma(g.point(i));
    // Each adjacent cell gives the interpolant's gradient at this corner.
    for (int signs = 0; signs < (1 << n); ++signs) {
      bool inside = true;
      for (int k = 0; k < n && inside; ++k) {
        const int dir = (signs >> k) & 1 ? 1 : -1;
        const int j = idx[k] + dir;
        if (j < 0 || j >= g.count(k)) {
          inside = false;
          break;
        }
        const std::size_t nb = dir > 0 ? i + g.stride(k) : i - g.stride(k);
        grad[k] = dir * (u[nb] - u[i]) / g.spacing(k);
      }
      if (inside) best = std::max(best, (s.transpose() * grad).norm());
    }
  }
  return best;
}

LipschitzFit lipschitz_probe(const TranslationTable& table, const GridFunction& u,
                             const GridFunction& v, const VectorFieldSystem& sys, double slack) {
  if (table.hs.empty() || table.ls.empty()) throw DegenerateInputError("empty translation table");
  const int m = static_cast<int>(table.hs.front().size());
  auto per_axis_ok = [m](const std::vector<HVector>& set) {
    for (int k = 0; k < m; ++k) {
      std::vector<double> vals;
      for (const HVector& h : set) vals.push_back(h[k]);
      std::sort(vals.begin(), vals.end());
      if (std::unique(vals.begin(), vals.end()) - vals.begin() < 3) return false;
    }
    return true;
  };
  if (!per_axis_ok(table.hs) || !per_axis_ok(table.ls))
    throw DegenerateInputError("the translation table needs at least 3 values per axis");

  LipschitzFit f;
  f.slack = slack;
  for (std::size_t b = 0; b < table.ls.size(); ++b)
    for (std::size_t a = 0; a < table.hs.size(); ++a)
      for (std::size_t a2 = a + 1; a2 < table.hs.size(); ++a2) {
        const auto& c1 = table.cell(a, b);
        const auto& c2 = table.cell(a2, b);
        const double dist = (table.hs[a] - table.hs[a2]).norm();
        if (c1.valid && c2.valid && dist > 0)
          f.h_ratio = std::max(f.h_ratio, std::abs(c1.value - c2.value) / dist);
      }
  for (std::size_t a = 0; a < table.hs.size(); ++a)
    for (std::size_t b = 0; b < table.ls.size(); ++b)
      for (std::size_t b2 = b + 1; b2 < table.ls.size(); ++b2) {
        const auto& c1 = table.cell(a, b);
        const auto& c2 = table.cell(a, b2);
        const double dist = (table.ls[b] - table.ls[b2]).norm();
        if (c1.valid && c2.valid && dist > 0)
          f.l_ratio = std::max(f.l_ratio, std::abs(c1.value - c2.value) / dist);
      }
  f.grad_u = horizontal_gradient_sup(u, sys);
  f.grad_v = horizontal_gradient_sup(v, sys);
  f.h_ok = f.h_ratio <= slack * f.grad_u + 1e-12;
  f.l_ok = f.l_ratio <= slack * f.grad_v + 1e-12;
  return f;
}

}  // namespace sublab
