#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sublab/geometry.hpp"
#include "sublab/grid.hpp"

namespace sublab {

enum class OracleKind { Gauge, Graph };

// Raw (possibly asymmetric) distance; +inf when unreachable.
class DistanceModel {
 public:
  virtual ~DistanceModel() = default;
  virtual int dim() const = 0;
  virtual double raw(const double* x, const double* y) const = 0;
  // True when raw(x, y) == raw(y, x) bitwise, so symmetrization can be skipped.
  virtual bool exactly_symmetric() const { return false; }
  // Euclidean box containing every y with distance(x, y) <= r, if known.
  virtual std::optional<Box> window(const double* x, double r) const;
};

// Symmetric distance: value(x, y) = (raw(x, y) + raw(y, x)) / 2.
class DistanceOracle {
 public:
  DistanceOracle(OracleKind kind, std::string name, std::shared_ptr<const DistanceModel> model,
                 std::map<std::string, double> params = {});

  OracleKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const std::map<std::string, double>& params() const { return params_; }
  int dim() const { return model_->dim(); }

  // Throws UnreachableTargetError if y cannot be reached.
  double operator()(const Point& x, const Point& y) const;
  // Infinite when unreachable; never throws.
  double value(const double* x, const double* y) const;
  double squared(const double* x, const double* y) const {
    double d = value(x, y);
    return d * d;
  }
  std::optional<Box> window(const Point& x, double r) const;
  std::optional<Box> window(const double* x, double r) const { return model_->window(x, r); }

  // Constant K in d(x, z) <= K (d(x, y) + d(y, z)).
  double triangle_constant() const;

 private:
  OracleKind kind_;
  std::string name_;
  std::shared_ptr<const DistanceModel> model_;
  std::map<std::string, double> params_;
};

// Koranyi gauge N(x, y, t) = ((x^2 + y^2)^2 + 16 t^2)^(1/4).
double heisenberg_gauge(const Point& p);
double heisenberg_gauge(const double* p);
// N(y^{-1} x) with the Heisenberg group law of the preset fields.
double gauge_distance_heisenberg(const Point& x, const Point& y);
double gauge_distance_heisenberg(const double* x, const double* y);

DistanceOracle euclidean_oracle(int n);
DistanceOracle heisenberg_gauge_oracle();

// Lattice for the horizontal graph. Edges join p to snap(exp_flow(p, +-step e_i)).
struct GraphLattice {
  Box box;
  std::vector<int> counts;
  double step = 0.0;
  int substeps = 4;
};

// Per-axis homogeneous weights: least bracket order with a nonzero component
// along that axis at x (0 if none up to max_order).
std::vector<int> axis_weights(const VectorFieldSystem& sys, const Point& x, int max_order = 4);
// Lattice over box: axis of weight w gets spacing about step^w scaled by the edge.
GraphLattice default_lattice(const VectorFieldSystem& sys, const Box& box, double step);

class HorizontalGraph;

DistanceOracle graph_oracle(const VectorFieldSystem& sys, const GraphLattice& lattice);

// Symmetrized shortest-path length between the lattice nodes nearest x and y.
// The lattice covers the system domain, or a box around x and y when unbounded.
double cc_distance_graph(const VectorFieldSystem& sys, const Point& x, const Point& y,
                         double step);
double cc_distance_graph(const VectorFieldSystem& sys, const GraphLattice& lattice, const Point& x,
                         const Point& y);

struct NswSample {
  HVector h;
  HVector l;
  double separation = 0.0;  // |h - l|
  double distance = 0.0;    // d(exp_x(h), exp_x(l))
};

struct NswResult {
  double slope = 0.0;
  double c1 = 0.0;  // c1 |h - l| <= d
  double c2 = 0.0;  // d <= c2 |h - l|^(1/r)
  int step = 1;     // r at x
  int samples = 0;
  bool slope_in_range = false;  // slope in [1/r - 0.1, 1.1]
  std::vector<NswSample> data;
};

// Random pairs with |h|, |l| <= radius and log-uniform separations.
NswResult nsw_probe(const VectorFieldSystem& sys, const DistanceOracle& oracle, const Point& x,
                    int samples, std::uint64_t seed = 0, double radius = 0.1);
// Fit on explicit pairs. Throws DegenerateInputError if every pair has h == l.
NswResult nsw_fit(const VectorFieldSystem& sys, const DistanceOracle& oracle, const Point& x,
                  const std::vector<std::pair<HVector, HVector>>& pairs);

struct ShrunkenDomain {
  std::vector<std::uint8_t> mask;
  std::size_t count = 0;
  bool empty = true;
};

// Interior nodes whose squared distance to every rim node is at least epsilon.
// With refine_faces the distance is also minimized continuously over each
// boundary face, so the mask keeps away from the true boundary rather than
// only from the rim nodes (which can be sparse in the oracle's metric).
ShrunkenDomain shrunken_domain(const DistanceOracle& oracle, double epsilon, const Grid& grid,
                               bool refine_faces = false);

// CSV rows (x..., y..., d) for every pair of the given points.
void write_distance_table(const std::string& path, const DistanceOracle& oracle,
                          const std::vector<Point>& points);

}  // namespace sublab
