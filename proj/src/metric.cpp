#include "sublab/metric.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>

#include "sublab/errors.hpp"
#include "sublab/stats.hpp"

namespace sublab {

std::optional<Box> DistanceModel::window(const double*, double) const { return std::nullopt; }

DistanceOracle::DistanceOracle(OracleKind kind, std::string name,
                               std::shared_ptr<const DistanceModel> model,
                               std::map<std::string, double> params)
    : kind_(kind), name_(std::move(name)), model_(std::move(model)), params_(std::move(params)) {}

double DistanceOracle::value(const double* x, const double* y) const {
  const double a = model_->raw(x, y);
  if (model_->exactly_symmetric()) return a;
  return 0.5 * (a + model_->raw(y, x));
}

double DistanceOracle::operator()(const Point& x, const Point& y) const {
  if (x.size() != dim() || y.size() != dim()) throw std::invalid_argument("oracle dimension mismatch");
  double d = value(x.data(), y.data());
  if (!std::isfinite(d)) throw UnreachableTargetError("target not reachable by the horizontal graph");
  return d;
}

std::optional<Box> DistanceOracle::window(const Point& x, double r) const {
  return model_->window(x.data(), r);
}

double DistanceOracle::triangle_constant() const {
  auto it = params_.find("triangle_constant");
  return it == params_.end() ? 1.0 : it->second;
}

double heisenberg_gauge(const double* p) {
  const double r2 = p[0] * p[0] + p[1] * p[1];
  return std::sqrt(std::sqrt(r2 * r2 + 16.0 * p[2] * p[2]));
}

double heisenberg_gauge(const Point& p) {
  if (p.size() != 3) throw std::invalid_argument("heisenberg gauge needs a point in R^3");
  return heisenberg_gauge(p.data());
}

double gauge_distance_heisenberg(const double* x, const double* y) {
  // y^{-1} x = (x - y, t_x - t_y + (y_2 x_1 - y_1 x_2) / 2)
  const double p[3] = {x[0] - y[0], x[1] - y[1],
                       x[2] - y[2] + 0.5 * (y[1] * x[0] - y[0] * x[1])};
  return heisenberg_gauge(p);
}

double gauge_distance_heisenberg(const Point& x, const Point& y) {
  if (x.size() != 3 || y.size() != 3) throw std::invalid_argument("heisenberg gauge needs R^3");
  return gauge_distance_heisenberg(x.data(), y.data());
}

namespace {

class EuclideanModel final : public DistanceModel {
 public:
  explicit EuclideanModel(int n) : n_(n) {}
  int dim() const override { return n_; }
  double raw(const double* x, const double* y) const override {
    double s = 0.0;
    for (int k = 0; k < n_; ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
    return std::sqrt(s);
  }
  bool exactly_symmetric() const override { return true; }
  std::optional<Box> window(const double* x, double r) const override {
    Eigen::Map<const Eigen::VectorXd> c(x, n_);
    return Box(c.array() - r, c.array() + r);
  }

 private:
  int n_;
};

class HeisenbergGaugeModel final : public DistanceModel {
 public:
  int dim() const override { return 3; }
  double raw(const double* x, const double* y) const override {
    return gauge_distance_heisenberg(x, y);
  }
  // x^{-1} y = -(y^{-1} x) in exponential coordinates, and N is even.
  bool exactly_symmetric() const override { return true; }
  std::optional<Box> window(const double* x, double r) const override {
    const double rxy = std::hypot(x[0], x[1]);
    const double dt = 0.25 * r * r + 0.5 * r * rxy;
    Eigen::Vector3d lo(x[0] - r, x[1] - r, x[2] - dt);
    Eigen::Vector3d hi(x[0] + r, x[1] + r, x[2] + dt);
    return Box(lo, hi);
  }
};

}  // namespace

DistanceOracle euclidean_oracle(int n) {
  return DistanceOracle(OracleKind::Gauge, "euclidean", std::make_shared<EuclideanModel>(n),
                        {{"triangle_constant", 1.0}});
}

DistanceOracle heisenberg_gauge_oracle() {
  return DistanceOracle(OracleKind::Gauge, "heisenberg-gauge",
                        std::make_shared<HeisenbergGaugeModel>(), {{"triangle_constant", 1.0}});
}

namespace {

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

HVector uniform_in_ball(std::mt19937_64& rng, int m, double radius) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  HVector v(m);
  for (int k = 0; k < m; ++k) v[k] = g(rng);
  const double nv = v.norm();
  if (nv == 0.0) return HVector::Zero(m);
  return v / nv * radius * std::pow(u(rng), 1.0 / m);
}

}  // namespace

NswResult nsw_fit(const VectorFieldSystem& sys, const DistanceOracle& oracle, const Point& x,
                  const std::vector<std::pair<HVector, HVector>>& pairs) {
  NswResult r;
  RankResult rank = hormander_rank(sys, x, 6);
  r.step = rank.step.value_or(sys.declared_step().value_or(1));
  std::vector<double> lx, ly;
  r.c1 = kInf;
  r.c2 = 0.0;
  for (const auto& [h, l] : pairs) {
    const double s = (h - l).norm();
    if (s == 0.0) continue;
    Point a = exp_flow(sys, x, h);
    Point b = exp_flow(sys, x, l);
    const double d = oracle(a, b);
    r.data.push_back({h, l, s, d});
    // An unresolved pair (d = 0) still breaks the lower bound through c1.
    if (d > 0.0) {
      lx.push_back(std::log(s));
      ly.push_back(std::log(d));
    }
    r.c1 = std::min(r.c1, d / s);
    r.c2 = std::max(r.c2, d / std::pow(s, 1.0 / r.step));
  }
  if (r.data.empty()) throw DegenerateInputError("every sample has h == l; no separation to fit");
  r.samples = static_cast<int>(r.data.size());
  if (lx.size() >= 2) r.slope = least_squares_slope(lx, ly);
  r.slope_in_range = r.slope >= 1.0 / r.step - 0.1 && r.slope <= 1.1;
  return r;
}

NswResult nsw_probe(const VectorFieldSystem& sys, const DistanceOracle& oracle, const Point& x,
                    int samples, std::uint64_t seed, double radius) {
  if (samples < 20) throw std::invalid_argument("nsw_probe needs at least 20 samples");
  std::mt19937_64 rng(seed);
  const int m = sys.fields();
  std::vector<std::pair<HVector, HVector>> pairs;
  while (static_cast<int>(pairs.size()) < samples) {
    HVector h = uniform_in_ball(rng, m, radius);
    HVector dir = uniform_in_ball(rng, m, 1.0);
    if (dir.norm() == 0.0) continue;
    dir.normalize();
    const double sep = log_uniform(rng, 1e-2 * radius, radius);
    HVector l = h + sep * dir;
    if (l.norm() > radius) continue;
    pairs.emplace_back(h, l);
  }
  return nsw_fit(sys, oracle, x, pairs);
}

namespace {

// Rim nodes lying in a box, enumerated face by face (edges may repeat).
// f(node, face) with face = 2 * axis + side.
template <class F>
void for_each_rim_node_in(const Grid& grid, const std::optional<Box>& window, F&& f) {
  const int n = grid.dim();
  int lo[8], hi[8];
  for (int k = 0; k < n; ++k) {
    lo[k] = 0;
    hi[k] = grid.count(k) - 1;
    if (window) {
      const double a = (window->lo[k] - grid.box().lo[k]) / grid.spacing(k);
      const double b = (window->hi[k] - grid.box().lo[k]) / grid.spacing(k);
      lo[k] = static_cast<int>(std::max(0.0, std::ceil(a - 1e-9)));
      hi[k] = static_cast<int>(std::min<double>(grid.count(k) - 1, std::floor(b + 1e-9)));
      if (lo[k] > hi[k]) return;
    }
  }
  int idx[8];
  for (int face = 0; face < n; ++face) {
    for (int side : {0, grid.count(face) - 1}) {
      if (side < lo[face] || side > hi[face]) continue;
      for (int k = 0; k < n; ++k) idx[k] = lo[k];
      idx[face] = side;
      for (;;) {
        if (!f(grid.index(idx), 2 * face + (side == 0 ? 0 : 1))) return;
        int k = n - 1;
        for (; k >= 0; --k) {
          if (k == face) continue;
          if (++idx[k] <= hi[k]) break;
          idx[k] = lo[k];
        }
        if (k < 0) break;
      }
    }
  }
}


// Smallest squared distance from x to the boundary face (axis, side) found by a
// compass search over the face's free coordinates, started at `start`.
double face_search(const DistanceOracle& oracle, const Grid& grid, const double* x, int axis,
                   std::vector<double> y, double target) {
  const int n = grid.dim();
  const Box& box = grid.box();
  double best = oracle.squared(x, y.data());
  std::vector<double> step(n);
  for (int k = 0; k < n; ++k) step[k] = grid.spacing(k);
  double scale = 1.0;
  while (scale > 1e-7 && best >= target) {
    bool moved = false;
    for (int k = 0; k < n; ++k) {
      if (k == axis) continue;
      for (double dir : {-1.0, 1.0}) {
        const double old = y[k];
        y[k] = std::clamp(old + dir * scale * step[k], box.lo[k], box.hi[k]);
        const double d2 = oracle.squared(x, y.data());
        if (d2 < best) {
          best = d2;
          moved = true;
        } else {
          y[k] = old;
        }
      }
    }
    if (!moved) scale *= 0.5;
  }
  return best;
}

}  // namespace

ShrunkenDomain shrunken_domain(const DistanceOracle& oracle, double epsilon, const Grid& grid,
                               bool refine_faces) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
  if (oracle.dim() != grid.dim()) throw std::invalid_argument("oracle and grid dimensions differ");
  ShrunkenDomain out;
  out.mask.assign(grid.size(), 0);
  const int n = grid.dim();
  const Box& box = grid.box();
  const double r = std::sqrt(epsilon);
  std::vector<double> x(n), y(n);
  std::vector<double> face_best(2 * n);
  std::vector<std::size_t> face_node(2 * n);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.on_rim(i)) continue;
    bool keep = true;
    if (epsilon > 0.0) {
      grid.point(i, x.data());
      std::optional<Box> win = oracle.window(x.data(), r);
      std::fill(face_best.begin(), face_best.end(), kInf);
      for_each_rim_node_in(grid, win, [&](std::size_t j, int face) {
        grid.point(j, y.data());
        const double d2 = oracle.squared(x.data(), y.data());
        if (d2 < epsilon) {
          keep = false;
          return false;
        }
        if (d2 < face_best[face]) {
          face_best[face] = d2;
          face_node[face] = j;
        }
        return true;
      });
      // Rim nodes sample the boundary coarsely; refine between them on every
      // face the window reaches, from the best node and from the projection of x.
      for (int face = 0; refine_faces && keep && face < 2 * n; ++face) {
        const int axis = face / 2;
        const double plane = face % 2 ? box.hi[axis] : box.lo[axis];
        if (win && (plane < win->lo[axis] || plane > win->hi[axis])) continue;
        std::vector<double> start(x);
        start[axis] = plane;
        if (win)
          for (int k = 0; k < n; ++k)
            if (k != axis) start[k] = std::clamp(start[k], std::max(box.lo[k], win->lo[k]),
                                                 std::min(box.hi[k], win->hi[k]));
        if (face_search(oracle, grid, x.data(), axis, start, epsilon) < epsilon) keep = false;
        if (keep && face_best[face] < kInf) {
          std::vector<double> from_node(n);
          grid.point(face_node[face], from_node.data());
          if (face_search(oracle, grid, x.data(), axis, from_node, epsilon) < epsilon) keep = false;
        }
      }
    }
    if (keep) {
      out.mask[i] = 1;
      ++out.count;
    }
  }
  out.empty = out.count == 0;
  return out;
}

void write_distance_table(const std::string& path, const DistanceOracle& oracle,
                          const std::vector<Point>& points) {
  std::ofstream os(path);
  if (!os) throw ConfigError("output", "cannot write " + path);
  const int n = oracle.dim();
  for (int k = 0; k < n; ++k) os << "x" << k << ",";
  for (int k = 0; k < n; ++k) os << "y" << k << ",";
  os << "d\n" << std::setprecision(17);
  for (const auto& a : points)
    for (const auto& b : points) {
      for (int k = 0; k < n; ++k) os << a[k] << ",";
      for (int k = 0; k < n; ++k) os << b[k] << ",";
      os << oracle.value(a.data(), b.data()) << "\n";
    }
}

}  // namespace sublab
