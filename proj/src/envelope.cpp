#include "sublab/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace sublab {

namespace {

// Node index ranges of the grid covered by a box; false if the box misses the grid.
bool clip_box(const Grid& g, const Box& box, int* lo, int* hi) {
  for (int k = 0; k < g.dim(); ++k) {
    const double a = (box.lo[k] - g.box().lo[k]) / g.spacing(k);
    const double b = (box.hi[k] - g.box().lo[k]) / g.spacing(k);
    lo[k] = static_cast<int>(std::max(0.0, std::ceil(a - 1e-9)));
    hi[k] = static_cast<int>(std::min<double>(g.count(k) - 1, std::floor(b + 1e-9)));
    if (lo[k] > hi[k]) return false;
  }
  return true;
}

// Visits nodes of the index box in increasing node order.
template <class F>
void for_each_in_range(const Grid& g, const int* lo, const int* hi, F&& f) {
  const int n = g.dim();
  int idx[8];
  for (int k = 0; k < n; ++k) idx[k] = lo[k];
  for (;;) {
    f(g.index(idx));
    int k = n - 1;
    for (; k >= 0; --k) {
      if (++idx[k] <= hi[k]) break;
      idx[k] = lo[k];
    }
    if (k < 0) return;
  }
}

// Shared kernel: sign = +1 for the sup-convolution, -1 for the inf-convolution
// (computed as -sup of -v).
Envelope convolve(const GridFunction& u, double epsilon, const DistanceOracle& d, double sign) {
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  const Grid& g = u.grid();
  if (d.dim() != g.dim()) throw std::invalid_argument("oracle and grid dimensions differ");
  const int n = g.dim();
  Envelope env;
  env.epsilon = epsilon;
  env.r0 = 2 * u.max_abs();
  env.field = u;
  env.argmax.assign(g.size(), 0);
  double top = -kInf;
  for (double v : u.values()) top = std::max(top, sign * v);
  const double inv2e = 1.0 / (2 * epsilon);
  std::vector<double> x(n), y(n);
  int lo[8], hi[8];
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double ui = sign * u[i];
    // Only y with d^2 <= 2 eps (max u - u(x)) can beat y = x, and the
    // proof's window d^2 <= 4 R0 eps bounds it as well.
    const double r2 = std::min(4 * env.r0 * epsilon, 2 * epsilon * (top - ui));
    double best = ui;
    std::size_t arg = i;
    if (r2 > 0) {
      g.point(i, x.data());
      std::optional<Box> win = d.window(x.data(), std::sqrt(r2));
      auto visit = [&](std::size_t j) {
        const double uj = sign * u[j];
        if (uj <= best) return;
        g.point(j, y.data());
        const double d2 = d.squared(x.data(), y.data());
        if (d2 > r2) return;
        const double val = uj - d2 * inv2e;
        if (val > best || (val == best && j < arg)) {
          best = val;
          arg = j;
        }
      };
      if (win) {
        if (clip_box(g, *win, lo, hi)) for_each_in_range(g, lo, hi, visit);
      } else {
        for (std::size_t j = 0; j < g.size(); ++j) visit(j);
      }
    }
    env.field[i] = sign * best;
    env.argmax[i] = arg;
  }
  return env;
}

struct Direction {
  int a;
  int b;  // -1 for an axis direction
  std::ptrdiff_t offset;
  double len2;
};

std::vector<Direction> stencil_directions(const Grid& g) {
  std::vector<Direction> dirs;
  const int n = g.dim();
  for (int a = 0; a < n; ++a) {
    const auto sa = static_cast<std::ptrdiff_t>(g.stride(a));
    const double ha = g.spacing(a);
    dirs.push_back({a, -1, sa, ha * ha});
    for (int b = a + 1; b < n; ++b) {
      const auto sb = static_cast<std::ptrdiff_t>(g.stride(b));
      const double hb = g.spacing(b);
      dirs.push_back({a, b, sa + sb, ha * ha + hb * hb});
      dirs.push_back({a, b, sa - sb, ha * ha + hb * hb});
    }
  }
  return dirs;
}

bool direction_fits(const Grid& g, const int* mi, const Direction& d) {
  auto inner = [&](int k) { return mi[k] >= 1 && mi[k] <= g.count(k) - 2; };
  return inner(d.a) && (d.b < 0 || inner(d.b));
}

}  // namespace

Envelope sup_convolution(const GridFunction& u, double epsilon, const DistanceOracle& d) {
  return convolve(u, epsilon, d, 1.0);
}

Envelope inf_convolution(const GridFunction& v, double epsilon, const DistanceOracle& d) {
  return convolve(v, epsilon, d, -1.0);
}

SemiconvexityResult semiconvexity_check(const GridFunction& w, double lambda_cap) {
  const Grid& g = w.grid();
  for (int k = 0; k < g.dim(); ++k)
    if (g.count(k) < 3) throw std::invalid_argument("semiconvexity check needs 3 nodes per axis");
  const auto dirs = stencil_directions(g);
  double lambda = 0.0;
  int mi[8];
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.multi_index(i, mi);
    for (const auto& dir : dirs) {
      if (!direction_fits(g, mi, dir)) continue;
      const double D = w[i + dir.offset] - 2 * w[i] + w[i - dir.offset];
      lambda = std::max(lambda, (-D - 1e-9) / dir.len2);
    }
  }
  return {lambda <= lambda_cap, lambda};
}

double envelope_curvature_constant(const Envelope& env, const DistanceOracle& d) {
  const Grid& g = env.field.grid();
  const int n = g.dim();
  const auto dirs = stencil_directions(g);
  double c = 0.0;
  int mi[8];
  std::vector<double> y(n), xp(n), xm(n), x0(n);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.multi_index(i, mi);
    g.point(env.argmax[i], y.data());
    g.point(i, x0.data());
    const double d0 = d.squared(x0.data(), y.data());
    for (const auto& dir : dirs) {
      if (!direction_fits(g, mi, dir)) continue;
      g.point(i + dir.offset, xp.data());
      g.point(i - dir.offset, xm.data());
      const double D = d.squared(xp.data(), y.data()) + d.squared(xm.data(), y.data()) - 2 * d0;
      c = std::max(c, D / dir.len2);
    }
  }
  return c;
}

std::vector<ConvergenceRow> convergence_report(const GridFunction& u, const DistanceOracle& d,
                                               const std::vector<double>& epsilons) {
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    if (!(epsilons[k] > 0)) throw std::invalid_argument("epsilons must be positive");
    if (k > 0 && !(epsilons[k] < epsilons[k - 1]))
      throw std::invalid_argument("epsilon sequence must be decreasing");
  }
  std::vector<ConvergenceRow> rows;
  const double r0 = 2 * u.max_abs();
  for (double eps : epsilons) {
    Envelope env = sup_convolution(u, eps, d);
    ShrunkenDomain mask = shrunken_domain(d, (1 + 4 * r0) * eps, u.grid());
    ConvergenceRow row;
    row.epsilon = eps;
    row.mask_count = mask.count;
    row.empty_mask = mask.empty;
    for (std::size_t i = 0; i < u.size(); ++i)
      if (mask.mask[i]) row.deviation = std::max(row.deviation, env.field[i] - u[i]);
    rows.push_back(row);
  }
  return rows;
}

JensenResult jensen_probe(const GridFunction& w, const Point& xhat, double r, double delta,
                          int trials, std::uint64_t seed, double curvature_bound) {
  const Grid& g = w.grid();
  const int n = g.dim();
  if (xhat.size() != n) throw std::invalid_argument("xhat dimension mismatch");
  if (!(r > 0) || delta < 0 || trials < 1) throw std::invalid_argument("bad jensen_probe parameters");
  JensenResult res;
  res.curvature_bound =
      curvature_bound > 0 ? curvature_bound
                          : 10 * std::max(1.0, semiconvexity_check(w, kInf).lambda);
  const auto dirs = stencil_directions(g);

  std::vector<std::size_t> ball;
  std::vector<Point> pts;
  Point p(n);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.point(i, p.data());
    if ((p - xhat).norm() < r) {
      ball.push_back(i);
      pts.push_back(p);
    }
  }
  if (ball.empty()) throw std::invalid_argument("ball around xhat contains no grid node");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int count = delta == 0 ? 1 : trials;
  const double hmax = g.spacings().maxCoeff();
  int mi[8];
  for (int t = 0; t < count; ++t) {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
    if (delta > 0) {
      for (int k = 0; k < n; ++k) q[k] = gauss(rng);
      q *= delta * std::pow(u01(rng), 1.0 / n) / q.norm();
      if (q.norm() >= delta) q *= 0.999999;
    }
    double best = -kInf;
    std::size_t arg = 0;
    Point at;
    for (std::size_t k = 0; k < ball.size(); ++k) {
      const double v = w[ball[k]] + q.dot(pts[k]);
      if (v > best) {
        best = v;
        arg = ball[k];
        at = pts[k];
      }
    }
    bool ok = (at - xhat).norm() < r - hmax;
    g.multi_index(arg, mi);
    for (int k = 0; k < n && ok; ++k) ok = mi[k] >= 1 && mi[k] <= g.count(k) - 2;
    for (const auto& dir : dirs) {
      if (!ok) break;
      const double D = w[arg + dir.offset] - 2 * w[arg] + w[arg - dir.offset];
      ok = std::abs(D) / dir.len2 <= res.curvature_bound;
    }
    res.perturbations.push_back(q);
    res.maximizers.push_back(arg);
    res.success.push_back(ok ? 1 : 0);
    res.successes += ok ? 1 : 0;
  }
  res.trials = count;
  res.success_fraction = static_cast<double>(res.successes) / count;
  return res;
}

}  // namespace sublab
