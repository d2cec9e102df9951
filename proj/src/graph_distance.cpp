#include <algorithm>
#include <cmath>
#include <cstdint>
#include <list>
#include <mutex>
#include <unordered_map>

#include "sublab/errors.hpp"
#include "sublab/metric.hpp"

namespace sublab {

std::vector<int> axis_weights(const VectorFieldSystem& sys, const Point& x, int max_order) {
  std::vector<TowerField> tower = bracket_tower(sys, x, max_order);
  const int n = sys.dim();
  std::vector<int> w(n, 0);
  double scale = 0.0;
  for (const auto& f : tower) scale = std::max(scale, f.at_x.cwiseAbs().maxCoeff());
  const double tol = 1e-10 * std::max(1.0, scale);
  for (const auto& f : tower)
    for (int k = 0; k < n; ++k)
      if (std::abs(f.at_x[k]) > tol && (w[k] == 0 || f.order < w[k])) w[k] = f.order;
  return w;
}

GraphLattice default_lattice(const VectorFieldSystem& sys, const Box& box, double step) {
  if (!(step > 0)) throw std::invalid_argument("graph step must be positive");
  if (!box.bounded()) throw std::invalid_argument("graph lattice needs a bounded box");
  const int n = sys.dim();
  Point center = 0.5 * (box.lo + box.hi);
  std::vector<int> w = axis_weights(sys, center);
  GraphLattice g;
  g.box = box;
  g.step = step;
  g.counts.resize(n);
  for (int k = 0; k < n; ++k) {
    // Higher-weight axes are reached only through bracket motion, which moves
    // by a fraction of a step; refine them by 4 per extra order.
    const int extra = std::max(0, (w[k] == 0 ? 1 : w[k]) - 1);
    const double spacing = step / std::pow(4.0, extra);
    g.counts[k] = std::max(2, static_cast<int>(std::lround(box.edge(k) / spacing)) + 1);
  }
  return g;
}

// Breadth-first shortest paths on the horizontal graph; all edges weigh one step.
class HorizontalGraph {
 public:
  HorizontalGraph(const VectorFieldSystem& sys, const GraphLattice& lattice)
      : sys_(sys.with_domain(lattice.box)),
        grid_(lattice.box, lattice.counts),
        step_(lattice.step),
        substeps_(lattice.substeps),
        arity_(2 * sys.fields()),
        adjacency_(grid_.size() * static_cast<std::size_t>(arity_), kUnknown) {
    if (!(step_ > 0)) throw std::invalid_argument("graph step must be positive");
    if (substeps_ < 1) throw std::invalid_argument("graph substeps must be positive");
    const std::size_t bytes = grid_.size() * sizeof(std::int32_t);
    capacity_ = std::max<std::size_t>(4, (std::size_t{256} << 20) / std::max<std::size_t>(bytes, 1));
  }

  const Grid& grid() const { return grid_; }
  double step() const { return step_; }

  std::size_t snap(const double* x) const {
    Point p = Eigen::Map<const Eigen::VectorXd>(x, grid_.dim());
    if (!grid_.box().contains(p, 1e-12)) return kOutside;
    return grid_.nearest(p);
  }

  // Hop count from src to dst (-1 if unreachable), stopping early.
  std::int64_t hops(std::size_t src, std::size_t dst) const {
    if (src == dst) return 0;
    std::vector<std::int32_t> dist(grid_.size(), -1);
    std::vector<std::size_t> frontier{src}, next;
    dist[src] = 0;
    std::int32_t level = 0;
    while (!frontier.empty()) {
      ++level;
      next.clear();
      for (std::size_t p : frontier)
        for (int e = 0; e < arity_; ++e) {
          std::int64_t q = neighbor(p, e);
          if (q < 0 || dist[q] >= 0) continue;
          dist[q] = level;
          if (static_cast<std::size_t>(q) == dst) return level;
          next.push_back(static_cast<std::size_t>(q));
        }
      std::swap(frontier, next);
    }
    return -1;
  }

  // Hop counts from src to every node (cached).
  std::shared_ptr<const std::vector<std::int32_t>> single_source(std::size_t src) const {
    {
      std::lock_guard<std::mutex> lock(cache_mutex_);
      auto it = cache_.find(src);
      if (it != cache_.end()) {
        lru_.splice(lru_.begin(), lru_, it->second.second);
        return it->second.first;
      }
    }
    auto dist = std::make_shared<std::vector<std::int32_t>>(grid_.size(), -1);
    std::vector<std::size_t> frontier{src}, next;
    (*dist)[src] = 0;
    std::int32_t level = 0;
    while (!frontier.empty()) {
      ++level;
      next.clear();
      for (std::size_t p : frontier)
        for (int e = 0; e < arity_; ++e) {
          std::int64_t q = neighbor(p, e);
          if (q < 0 || (*dist)[q] >= 0) continue;
          (*dist)[q] = level;
          next.push_back(static_cast<std::size_t>(q));
        }
      std::swap(frontier, next);
    }
    std::lock_guard<std::mutex> lock(cache_mutex_);
    lru_.push_front(src);
    cache_[src] = {dist, lru_.begin()};
    while (cache_.size() > capacity_) {
      cache_.erase(lru_.back());
      lru_.pop_back();
    }
    return dist;
  }

  static constexpr std::size_t kOutside = static_cast<std::size_t>(-1);

 private:
  static constexpr std::int64_t kUnknown = -2;
  static constexpr std::int64_t kNone = -1;

  std::int64_t neighbor(std::size_t p, int e) const {
    const std::size_t slot = p * static_cast<std::size_t>(arity_) + static_cast<std::size_t>(e);
    {
      std::lock_guard<std::mutex> lock(adjacency_mutex_);
      if (adjacency_[slot] != kUnknown) return adjacency_[slot];
    }
    HVector h = HVector::Zero(sys_.fields());
    h[e / 2] = (e % 2 == 0 ? 1.0 : -1.0) * step_;
    std::int64_t q = kNone;
    try {
      Point end = exp_flow(sys_, grid_.point(p), h, substeps_);
      std::size_t s = grid_.nearest(end);
      if (s != p) q = static_cast<std::int64_t>(s);
    } catch (const FlowExitError&) {
      q = kNone;
    }
    std::lock_guard<std::mutex> lock(adjacency_mutex_);
    adjacency_[slot] = q;
    return q;
  }

  VectorFieldSystem sys_;
  Grid grid_;
  double step_;
  int substeps_;
  int arity_;
  mutable std::vector<std::int64_t> adjacency_;
  mutable std::mutex adjacency_mutex_;
  mutable std::mutex cache_mutex_;
  mutable std::list<std::size_t> lru_;
  mutable std::unordered_map<std::size_t,
                             std::pair<std::shared_ptr<const std::vector<std::int32_t>>,
                                       std::list<std::size_t>::iterator>>
      cache_;
  std::size_t capacity_ = 4;
};

namespace {

class GraphModel final : public DistanceModel {
 public:
  explicit GraphModel(std::shared_ptr<const HorizontalGraph> g) : g_(std::move(g)) {}
  int dim() const override { return g_->grid().dim(); }
  double raw(const double* x, const double* y) const override {
    std::size_t a = g_->snap(x);
    std::size_t b = g_->snap(y);
    if (a == HorizontalGraph::kOutside || b == HorizontalGraph::kOutside) return kInf;
    if (a == b) return 0.0;
    auto dist = g_->single_source(a);
    std::int32_t hops = (*dist)[b];
    return hops < 0 ? kInf : hops * g_->step();
  }

 private:
  std::shared_ptr<const HorizontalGraph> g_;
};

Box box_around(const Point& x, const Point& y, double step) {
  const double sep = (x - y).cwiseAbs().maxCoeff();
  const double margin = std::max({4 * step, sep, 2 * std::sqrt(sep)});
  Eigen::VectorXd lo = x.cwiseMin(y).array() - margin;
  Eigen::VectorXd hi = x.cwiseMax(y).array() + margin;
  return Box(lo, hi);
}

}  // namespace

DistanceOracle graph_oracle(const VectorFieldSystem& sys, const GraphLattice& lattice) {
  auto g = std::make_shared<const HorizontalGraph>(sys, lattice);
  std::map<std::string, double> params{{"step", lattice.step},
                                       {"substeps", lattice.substeps},
                                       {"nodes", static_cast<double>(g->grid().size())},
                                       {"triangle_constant", 1.0 + 1e-6}};
  return DistanceOracle(OracleKind::Graph, "graph", std::make_shared<GraphModel>(g), params);
}

double cc_distance_graph(const VectorFieldSystem& sys, const GraphLattice& lattice, const Point& x,
                         const Point& y) {
  if (x.size() != sys.dim() || y.size() != sys.dim())
    throw std::invalid_argument("cc_distance_graph dimension mismatch");
  HorizontalGraph g(sys, lattice);
  std::size_t a = g.snap(x.data());
  std::size_t b = g.snap(y.data());
  if (a == HorizontalGraph::kOutside || b == HorizontalGraph::kOutside)
    throw UnreachableTargetError("point outside the graph lattice");
  if (a == b) return 0.0;
  std::int64_t ab = g.hops(a, b);
  std::int64_t ba = g.hops(b, a);
  if (ab < 0 || ba < 0) throw UnreachableTargetError("horizontal graph does not connect the points");
  return 0.5 * static_cast<double>(ab + ba) * g.step();
}

double cc_distance_graph(const VectorFieldSystem& sys, const Point& x, const Point& y,
                         double step) {
  if (!(step > 0)) throw std::invalid_argument("graph step must be positive");
  if (x == y) return 0.0;
  Box box = sys.domain().bounded() ? sys.domain() : box_around(x, y, step);
  return cc_distance_graph(sys, default_lattice(sys, box, step), x, y);
}

}  // namespace sublab
