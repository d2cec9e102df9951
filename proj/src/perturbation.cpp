#include "sublab/perturbation.hpp"

#include <cmath>
#include <random>

namespace sublab {

std::vector<PerturbationRow> perturbed_operator_convergence(
    const VectorFieldSystem& sys, const QuasilinearOperator& op, const Point& x0,
    const SmoothFunction& f, const std::vector<HVector>& h_sequence, int sample_points,
    double radius) {
  std::vector<Point> pts{x0};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-radius, radius);
  while (static_cast<int>(pts.size()) < sample_points) {
    Point p = x0;
    for (Eigen::Index k = 0; k < p.size(); ++k) p[k] += u(rng);
    pts.push_back(p);
  }
  std::vector<double> base;
  for (const auto& p : pts) base.push_back(evaluate_operator(op, sys, f, p));

  std::vector<PerturbationRow> rows;
  for (const auto& h : h_sequence) {
    VectorFieldSystem pulled = pullback_system(sys, flow_map(sys, h));
    double dev = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k)
      dev = std::max(dev, std::abs(evaluate_operator(op, pulled, f, pts[k]) - base[k]));
    rows.push_back({h.norm(), dev});
  }
  return rows;
}

}  // namespace sublab
