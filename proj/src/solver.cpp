#include "sublab/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sublab/errors.hpp"

namespace sublab {

DiscreteOperator::DiscreteOperator(QuasilinearOperator op, const VectorFieldSystem& sys,
                                   const Grid& grid, double p_regularization)
    : op_(std::move(op)),
      grid_(grid),
      n_(grid.dim()),
      m_(sys.fields()),
      delta_(p_regularization) {
  if (sys.dim() != grid.dim()) throw std::invalid_argument("system and grid dimensions differ");
  sigma_.resize(grid.size());
  v_.resize(grid.size());
  Point x(n_);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.point(i, x.data());
    Eigen::MatrixXd s = sys.sigma(x);
    std::vector<Eigen::MatrixXd> ds = sys.dsigma(x);
    Eigen::MatrixXd v(n_, m_ * m_);
    for (int a = 0; a < m_; ++a)
      for (int b = 0; b < m_; ++b) v.col(a * m_ + b) = 0.5 * (ds[b] * s.col(a) + ds[a] * s.col(b));
    sigma_[i] = std::move(s);
    v_[i] = std::move(v);
  }
}

Eigen::MatrixXd DiscreteOperator::effective_A(const HVector& xi, bool& degenerate) const {
  const bool zero = xi.isZero(0.0);
  switch (op_.family) {
    case QuasilinearOperator::Family::PNorm: {
      if (zero) {
        degenerate = true;
        return std::min(1.0, op_.p - 1.0) * Eigen::MatrixXd::Identity(m_, m_);
      }
      return Eigen::MatrixXd::Identity(m_, m_) +
             (op_.p - 2) * xi * xi.transpose() / (xi.squaredNorm() + delta_ * delta_);
    }
    case QuasilinearOperator::Family::SubLaplacian:
      return op_.A(xi);
    default:
      if (zero && op_.zero_gradient_rule == ZeroGradientRule::DropDiffusion) {
        degenerate = true;
        return Eigen::MatrixXd::Identity(m_, m_);
      }
      return op_.A(xi);
  }
}

void DiscreteOperator::linear_row(std::size_t node, const Eigen::MatrixXd& a,
                                  const Eigen::VectorXd& b, StencilRow& out) const {
  double center = 0.0;
  for (int k = 0; k < n_; ++k) {
    const std::size_t sk = grid_.stride(k);
    const double hk = grid_.spacing(k);
    const double ck = -a(k, k) / (hk * hk);
    const double fk = -b[k] / (2 * hk);
    out.entries.emplace_back(node + sk, ck + fk);
    out.entries.emplace_back(node - sk, ck - fk);
    center -= 2 * ck;
    for (int l = k + 1; l < n_; ++l) {
      const double akl = 0.5 * (a(k, l) + a(l, k));
      if (akl == 0.0) continue;
      const std::size_t sl = grid_.stride(l);
      const double c = -akl / (2 * hk * grid_.spacing(l));
      out.entries.emplace_back(node + sk + sl, c);
      out.entries.emplace_back(node - sk - sl, c);
      out.entries.emplace_back(node + sk - sl, -c);
      out.entries.emplace_back(node - sk + sl, -c);
    }
  }
  out.entries.emplace_back(node, center);
}

void DiscreteOperator::row(const GridFunction& u, std::size_t node, StencilRow& out) const {
  if (node >= grid_.size()) throw std::out_of_range("grid node index");
  if (grid_.on_rim(node)) throw BoundaryStencilError(node);
  out.entries.clear();
  out.constant = 0.0;
  out.degenerate = false;
  Eigen::VectorXd g(n_);
  for (int k = 0; k < n_; ++k) {
    const std::size_t sk = grid_.stride(k);
    g[k] = (u[node + sk] - u[node - sk]) / (2 * grid_.spacing(k));
  }
  const Eigen::MatrixXd& s = sigma_[node];
  const Eigen::MatrixXd& v = v_[node];
  const HVector xi = s.transpose() * g;
  out.constant = op_.H(xi);

  if (op_.family == QuasilinearOperator::Family::Infinity && !xi.isZero(0.0)) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n_);
    for (int a = 0; a < m_; ++a)
      for (int b = 0; b < m_; ++b) c += xi[a] * xi[b] * v.col(a * m_ + b);
    for (int k = 0; k < n_; ++k) {
      const std::size_t sk = grid_.stride(k);
      const double fk = -c[k] / (2 * grid_.spacing(k));
      out.entries.emplace_back(node + sk, fk);
      out.entries.emplace_back(node - sk, -fk);
    }
    const Eigen::VectorXd w = s * xi;
    const double nw = w.norm();
    if (nw > 0) {
      const double eta = grid_.min_spacing();
      const double coef = -w.squaredNorm() / (eta * eta);
      Point x = grid_.point(node);
      std::size_t nodes[256];
      double weights[256];
      for (double sgn : {1.0, -1.0}) {
        Point y = x + sgn * eta / nw * w;
        const int cnt = interpolation_stencil(grid_, y.data(), nodes, weights);
        for (int k = 0; k < cnt; ++k) out.entries.emplace_back(nodes[k], coef * weights[k]);
      }
      out.entries.emplace_back(node, -2 * coef);
    }
    return;
  }

  bool degenerate = false;
  const Eigen::MatrixXd A = effective_A(xi, degenerate);
  out.degenerate = degenerate;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n_);
  for (int a = 0; a < m_; ++a)
    for (int c = 0; c < m_; ++c)
      if (A(a, c) != 0.0) b += A(a, c) * v.col(a * m_ + c);
  linear_row(node, s * A * s.transpose(), b, out);
}

double DiscreteOperator::apply(const GridFunction& u, std::size_t node, bool* degenerate) const {
  StencilRow r;
  row(u, node, r);
  // Rows have zero sum, so differences keep constants exact.
  double val = r.constant;
  for (const auto& [j, c] : r.entries) val += c * (u[j] - u[node]);
  if (degenerate) *degenerate = r.degenerate;
  return val;
}

GridFunction residual(const QuasilinearOperator& op, const VectorFieldSystem& sys,
                      const GridFunction& u, double p_regularization) {
  DiscreteOperator D(op, sys, u.grid(), p_regularization);
  GridFunction r(u.grid(), 0.0);
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!u.grid().on_rim(i)) r[i] = D.apply(u, i);
  return r;
}

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Sweep {
  Eigen::VectorXd residual;  // over interior unknowns
  std::vector<Eigen::Triplet<double>> triplets;
  double max_diagonal = 0.0;
  std::size_t degenerate = 0;
  double norm = 0.0;
};

// Evaluates every interior row at u; optionally collects the frozen matrix.
void sweep(const DiscreteOperator& D, const GridFunction& u, const std::vector<std::size_t>& interior,
           const std::vector<std::ptrdiff_t>& position, bool want_matrix, Sweep& out) {
  const auto N = static_cast<Eigen::Index>(interior.size());
  out.residual.resize(N);
  out.triplets.clear();
  out.max_diagonal = 0.0;
  out.degenerate = 0;
  StencilRow r;
  for (Eigen::Index k = 0; k < N; ++k) {
    const std::size_t i = interior[static_cast<std::size_t>(k)];
    D.row(u, i, r);
    double val = r.constant;
    double diag = 0.0;
    for (const auto& [j, c] : r.entries) {
      val += c * (u[j] - u[i]);
      if (j == i) diag += c;
      if (want_matrix && position[j] >= 0)
        out.triplets.emplace_back(static_cast<int>(k), static_cast<int>(position[j]), c);
    }
    out.residual[k] = val;
    out.max_diagonal = std::max(out.max_diagonal, diag);
    if (r.degenerate) ++out.degenerate;
  }
  out.norm = N > 0 ? out.residual.cwiseAbs().maxCoeff() : 0.0;
}

Eigen::VectorXd linear_solve(const SpMat& K, const Eigen::VectorXd& rhs) {
  Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> it;
  it.preconditioner().setDroptol(1e-4);
  it.preconditioner().setFillfactor(20);
  it.setTolerance(1e-12);
  it.setMaxIterations(2000);
  it.compute(K);
  if (it.info() == Eigen::Success) {
    Eigen::VectorXd x = it.solve(rhs);
    if (it.info() == Eigen::Success && x.allFinite()) return x;
  }
  Eigen::SparseMatrix<double> Kc = K;
  Kc.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(Kc);
  if (lu.info() != Eigen::Success) throw NonconvergenceError(kInf, 0);
  return lu.solve(rhs);
}

}  // namespace

SolveResult solve_dirichlet(const QuasilinearOperator& op, const VectorFieldSystem& sys,
                            const Grid& grid, const std::function<double(const Point&)>& boundary_data,
                            const SolverParams& params, const GridFunction* initial) {
  if (!(params.tolerance > 0) || params.max_iterations < 1)
    throw std::invalid_argument("solver needs a positive tolerance and iteration budget");
  DiscreteOperator D(op, sys, grid, params.p_regularization);
  GridFunction u(grid, 0.0);
  std::vector<std::size_t> interior;
  std::vector<std::ptrdiff_t> position(grid.size(), -1);
  double rim_sum = 0.0, rim_lo = kInf, rim_hi = -kInf;
  std::size_t rim_count = 0;
  Point x(grid.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.on_rim(i)) {
      grid.point(i, x.data());
      u[i] = boundary_data(x);
      if (!std::isfinite(u[i])) throw std::invalid_argument("boundary data is not finite");
      rim_sum += u[i];
      rim_lo = std::min(rim_lo, u[i]);
      rim_hi = std::max(rim_hi, u[i]);
      ++rim_count;
    } else {
      position[i] = static_cast<std::ptrdiff_t>(interior.size());
      interior.push_back(i);
    }
  }
  // Constant data starts at its exact value so that it is a fixed point.
  const double mean = rim_lo == rim_hi ? rim_lo : rim_sum / static_cast<double>(rim_count);
  if (initial && !initial->grid().same_lattice(grid))
    throw GridMismatchError("initial guess lives on a different grid");
  for (std::size_t i : interior) u[i] = initial ? (*initial)[i] : mean;

  SolveResult res;
  Sweep cur;
  const bool implicit = params.method == SolveMethod::Implicit;
  sweep(D, u, interior, position, implicit, cur);
  res.iterations = 1;
  res.history.emplace_back(1, cur.norm);
  const auto N = static_cast<Eigen::Index>(interior.size());

  if (implicit) {
    double tau = params.tau > 0 ? params.tau : 1.0;
    Sweep trial;
    GridFunction v = u;
    while (cur.norm > params.tolerance) {
      if (res.iterations >= params.max_iterations) throw NonconvergenceError(cur.norm, res.iterations);
      SpMat K(N, N);
      K.setFromTriplets(cur.triplets.begin(), cur.triplets.end());
      for (Eigen::Index k = 0; k < N; ++k) K.coeffRef(k, k) += 1.0 / tau;
      K.makeCompressed();
      Eigen::VectorXd step = linear_solve(K, -cur.residual);
      for (Eigen::Index k = 0; k < N; ++k) {
        const std::size_t i = interior[static_cast<std::size_t>(k)];
        v[i] = u[i] + step[k];
      }
      sweep(D, v, interior, position, true, trial);
      ++res.iterations;
      if (!std::isfinite(trial.norm) || trial.norm > 10 * cur.norm) {
        tau = std::max(tau / 10, 1e-12);
        for (std::size_t i : interior) v[i] = u[i];
        continue;
      }
      tau = std::min(1e12, tau * std::clamp(cur.norm / std::max(trial.norm, 1e-300), 0.5, 10.0));
      std::swap(u.values(), v.values());
      std::swap(cur, trial);
      res.history.emplace_back(res.iterations, cur.norm);
    }
  } else {
    while (cur.norm > params.tolerance) {
      if (res.iterations >= params.max_iterations) throw NonconvergenceError(cur.norm, res.iterations);
      const double tau = params.tau > 0 ? params.tau : params.cfl / std::max(cur.max_diagonal, 1e-300);
      for (Eigen::Index k = 0; k < N; ++k) u[interior[static_cast<std::size_t>(k)]] -= tau * cur.residual[k];
      sweep(D, u, interior, position, false, cur);
      ++res.iterations;
      if (!std::isfinite(cur.norm)) throw NonconvergenceError(cur.norm, res.iterations);
      if (res.iterations % 100 == 0 || cur.norm <= params.tolerance)
        res.history.emplace_back(res.iterations, cur.norm);
    }
  }
  res.residual = cur.norm;
  res.degenerate_nodes = cur.degenerate;
  res.solution = std::move(u);
  return res;
}

SubSuperPair make_sub_super_pair(const QuasilinearOperator& op, const VectorFieldSystem& sys,
                                 const Grid& grid,
                                 const std::function<double(const Point&)>& boundary_data,
                                 double gap, const SolverParams& params) {
  if (!(gap >= 0)) throw std::invalid_argument("gap must be nonnegative");
  SolveResult lo = solve_dirichlet(op, sys, grid, [&](const Point& x) { return boundary_data(x) - gap; },
                                   params);
  // Shifted lower solution as the starting guess; still iterated to tolerance.
  GridFunction start = lo.solution;
  for (double& x : start.values()) x += gap;
  SolveResult hi = solve_dirichlet(op, sys, grid, boundary_data, params, &start);
  GridFunction rl = residual(op, sys, lo.solution, params.p_regularization);
  GridFunction rh = residual(op, sys, hi.solution, params.p_regularization);
  SubSuperPair pair;
  pair.sub_max_residual = -kInf;
  pair.super_min_residual = kInf;
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.on_rim(i)) {
      if (lo.solution[i] > hi.solution[i]) bad.push_back(i);
      continue;
    }
    pair.sub_max_residual = std::max(pair.sub_max_residual, rl[i]);
    pair.super_min_residual = std::min(pair.super_min_residual, rh[i]);
    if (rl[i] > params.tolerance || rh[i] < -params.tolerance) bad.push_back(i);
  }
  if (!bad.empty())
    throw CertificationError("sub/super pair failed certification at " + std::to_string(bad.size()) +
                                 " nodes",
                             bad);
  pair.sub = std::move(lo.solution);
  pair.super = std::move(hi.solution);
  pair.sub_iterations = lo.iterations;
  pair.super_iterations = hi.iterations;
  pair.sub_history = std::move(lo.history);
  pair.super_history = std::move(hi.history);
  return pair;
}

}  // namespace sublab
