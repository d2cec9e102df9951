#pragma once

#include <vector>

#include "sublab/geometry.hpp"
#include "sublab/operator.hpp"

namespace sublab {

struct PerturbationRow {
  double h_norm = 0.0;
  double deviation = 0.0;  // sup over sample points of |L^h f - L f|
};

// L^h is L built on the fields pulled back by Theta_h(y) = exp_y(h.X).
std::vector<PerturbationRow> perturbed_operator_convergence(
    const VectorFieldSystem& sys, const QuasilinearOperator& op, const Point& x0,
    const SmoothFunction& f, const std::vector<HVector>& h_sequence, int sample_points = 20,
    double radius = 0.05);

}  // namespace sublab
