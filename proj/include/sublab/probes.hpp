#pragma once

#include <cstdint>
#include <vector>

#include "sublab/geometry.hpp"
#include "sublab/operator.hpp"

namespace sublab {

struct ProbeSuiteResult {
  int configurations = 0;
  int failures = 0;
  double worst_margin = kInf;
  std::vector<double> margins;
  bool passed() const { return configurations > 0 && failures == 0; }
};

// Random quadratic omega, profile h with h' >= 1, h'' >= 0 at omega(x0), and x0 in region.
ProbeSuiteResult chain_rule_suite(const QuasilinearOperator& op, const VectorFieldSystem& sys,
                                  const Box& region, int configurations, std::uint64_t seed = 0);
// Random quadratic w, |p| <= 1, and x in region.
ProbeSuiteResult perturbation_suite(const QuasilinearOperator& op, const VectorFieldSystem& sys,
                                    const Box& region, int configurations, std::uint64_t seed = 0);

}  // namespace sublab
