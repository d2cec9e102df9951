#include "sublab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sublab/errors.hpp"

namespace sublab {

Grid::Grid(Box box, std::vector<int> counts) : box_(std::move(box)), counts_(std::move(counts)) {
  const int n = box_.dim();
  if (static_cast<int>(counts_.size()) != n) throw std::invalid_argument("grid counts length");
  if (!box_.bounded()) throw std::invalid_argument("grid needs a bounded box");
  if (n < 1 || n > 8) throw std::invalid_argument("grid dimension must be in 1..8");
  spacing_.resize(n);
  strides_.assign(n, 1);
  size_ = 1;
  for (int k = 0; k < n; ++k) {
    if (counts_[k] < 2) throw std::invalid_argument("each axis needs at least 2 nodes");
    if (!(box_.hi[k] > box_.lo[k])) throw std::invalid_argument("grid box has zero extent");
    spacing_[k] = (box_.hi[k] - box_.lo[k]) / (counts_[k] - 1);
    size_ *= static_cast<std::size_t>(counts_[k]);
  }
  for (int k = n - 2; k >= 0; --k) strides_[k] = strides_[k + 1] * counts_[k + 1];
}

Grid Grid::cube(int n, double lo, double hi, int count) {
  return Grid(Box::cube(n, lo, hi), std::vector<int>(n, count));
}

std::size_t Grid::index(const int* multi) const {
  std::size_t idx = 0;
  for (int k = 0; k < dim(); ++k) {
    if (multi[k] < 0 || multi[k] >= counts_[k]) throw std::out_of_range("grid multi-index");
    idx += strides_[k] * static_cast<std::size_t>(multi[k]);
  }
  return idx;
}

void Grid::multi_index(std::size_t node, int* out) const {
  if (node >= size_) throw std::out_of_range("grid node index");
  for (int k = 0; k < dim(); ++k) {
    out[k] = static_cast<int>(node / strides_[k]);
    node %= strides_[k];
  }
}

std::vector<int> Grid::multi_index(std::size_t node) const {
  std::vector<int> m(dim());
  multi_index(node, m.data());
  return m;
}

Point Grid::point(std::size_t node) const {
  Point p(dim());
  point(node, p.data());
  return p;
}

void Grid::point(std::size_t node, double* out) const {
  int mi[8];
  multi_index(node, mi);
  for (int k = 0; k < dim(); ++k) out[k] = coord(k, mi[k]);
}

bool Grid::on_rim(std::size_t node) const {
  int mi[8];
  multi_index(node, mi);
  for (int k = 0; k < dim(); ++k)
    if (mi[k] == 0 || mi[k] == counts_[k] - 1) return true;
  return false;
}

std::size_t Grid::nearest(const Point& x) const {
  int mi[8];
  for (int k = 0; k < dim(); ++k) {
    double f = std::round((x[k] - box_.lo[k]) / spacing_[k]);
    mi[k] = static_cast<int>(std::clamp(f, 0.0, static_cast<double>(counts_[k] - 1)));
  }
  return index(mi);
}

bool Grid::same_lattice(const Grid& o) const {
  if (counts_ != o.counts_) return false;
  for (int k = 0; k < dim(); ++k) {
    double tol = 1e-12 * std::max(1.0, std::abs(box_.hi[k]) + std::abs(box_.lo[k]));
    if (std::abs(box_.lo[k] - o.box_.lo[k]) > tol || std::abs(box_.hi[k] - o.box_.hi[k]) > tol)
      return false;
  }
  return true;
}

std::vector<std::uint8_t> default_mask(const Grid& grid) {
  std::vector<std::uint8_t> m(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) m[i] = grid.on_rim(i) ? 0 : 1;
  return m;
}

GridFunction::GridFunction(Grid grid, double fill)
    : grid_(std::move(grid)), values_(grid_.size(), fill), mask_(default_mask(grid_)) {}

GridFunction::GridFunction(Grid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)), mask_(default_mask(grid_)) {
  if (values_.size() != grid_.size()) throw std::invalid_argument("value count does not match grid");
}

GridFunction GridFunction::sample(const Grid& grid, const std::function<double(const Point&)>& f) {
  GridFunction g(grid);
  Point p(grid.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.point(i, p.data());
    g.values_[i] = f(p);
  }
  return g;
}

double GridFunction::at(std::size_t i) const {
  if (i >= values_.size()) throw std::out_of_range("grid node index");
  return values_[i];
}

bool GridFunction::has_default_mask() const { return mask_ == default_mask(grid_); }

int interpolation_stencil(const Grid& grid, const double* x, std::size_t* nodes, double* weights) {
  const int n = grid.dim();
  int base[8];
  double frac[8];
  const Box& box = grid.box();
  for (int k = 0; k < n; ++k) {
    double tol = 1e-12 * grid.spacing(k);
    if (!(x[k] >= box.lo[k] - tol && x[k] <= box.hi[k] + tol))
      throw std::out_of_range("interpolation point outside grid box");
    double f = (x[k] - box.lo[k]) / grid.spacing(k);
    int i = static_cast<int>(std::floor(f));
    i = std::clamp(i, 0, grid.count(k) - 2);
    base[k] = i;
    frac[k] = std::clamp(f - i, 0.0, 1.0);
  }
  int count = 0;
  for (int corner = 0; corner < (1 << n); ++corner) {
    double w = 1.0;
    std::size_t idx = 0;
    for (int k = 0; k < n; ++k) {
      int bit = (corner >> k) & 1;
      w *= bit ? frac[k] : 1.0 - frac[k];
      idx += grid.stride(k) * static_cast<std::size_t>(base[k] + bit);
    }
    if (w == 0.0) continue;
    nodes[count] = idx;
    weights[count] = w;
    ++count;
  }
  return count;
}

double GridFunction::interpolate(const double* x) const {
  std::size_t nodes[256];
  double w[256];
  int c = interpolation_stencil(grid_, x, nodes, w);
  double s = 0.0;
  for (int k = 0; k < c; ++k) s += w[k] * values_[nodes[k]];
  return s;
}

double GridFunction::interpolate(const Point& x) const {
  if (x.size() != grid_.dim()) throw std::invalid_argument("interpolation dimension mismatch");
  return interpolate(x.data());
}

double GridFunction::max() const { return *std::max_element(values_.begin(), values_.end()); }
double GridFunction::min() const { return *std::min_element(values_.begin(), values_.end()); }
double GridFunction::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_difference(const GridFunction& a, const GridFunction& b) {
  if (!a.grid().same_lattice(b.grid())) throw GridMismatchError("fields live on different grids");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace sublab
