#pragma once

#include "conflab/prescribe/common.hpp"

namespace conflab::prescribe {

struct LowerOptions {
  double tol = 1e-8;
  double delta = 0.0;
  int max_monotone = 400;
  bool polish = true;  // Newton once the monotone sweep has settled
  double precondition_tol = 1e-6;  // relative slack allowed in R_g >= R'
};

// Sub/supersolution lowering from R_g down to R' <= R_g, starting at the supersolution 1.
inline SolveResult lower_scalar_curvature(const ConformalMetric& g, const Field& Rp, const LowerOptions& opt = {}) {
  const domain::Grid& G = *g.grid;
  const auto nodes = free_nodes(G);
  const double scale = std::max(1.0, std::max(g.R.cwiseAbs().maxCoeff(), Rp.cwiseAbs().maxCoeff()));
  for (Index i : nodes)
    if (g.R(i) < Rp(i) - opt.precondition_tol * scale)
      throw Error(ErrorCode::PreconditionViolated, "lowering needs R_g >= R' (fails at node " + std::to_string(i) + ")");

  SolveResult out;
  out.delta = opt.delta;
  out.tolerance = opt.tol;
  const double N = g.c.N;
  double supR = 0.0, supRp = 0.0;
  for (Index i : nodes) {
    supR = std::max(supR, std::fabs(g.R(i)));
    supRp = std::max(supRp, std::fabs(Rp(i)));
  }
  const double s = supR + (N - 1.0) * supRp + 1e-3 * scale;

  const SpMat K = g.stiffness();
  const Field M = g.volume();
  std::vector<Index> pos(static_cast<size_t>(G.size()), -1);
  for (size_t k = 0; k < nodes.size(); ++k) pos[static_cast<size_t>(nodes[k])] = static_cast<Index>(k);
  const Index n = static_cast<Index>(nodes.size());
  // (A_g + sM) on the free nodes, A_g = K_g - diag(M R).
  std::vector<Eigen::Triplet<double>> t;
  Field coupling = Field::Zero(n);  // column of the Dirichlet node (phi = 1 there)
  for (Index col = 0; col < K.outerSize(); ++col) {
    const Index pc = pos[static_cast<size_t>(col)];
    for (SpMat::InnerIterator e(K, col); e; ++e) {
      const Index pr = pos[static_cast<size_t>(e.row())];
      if (pr < 0) continue;
      if (pc >= 0) t.emplace_back(pr, pc, e.value());
      else coupling(pr) += e.value();
    }
  }
  SpMat A(n, n);
  A.setFromTriplets(t.begin(), t.end());
  for (Index k = 0; k < n; ++k) {
    const Index i = nodes[static_cast<size_t>(k)];
    A.coeffRef(k, k) += M(i) * (s - g.R(i));
  }
  operators::SymmetricSolver solver;
  if (!solver.factor_spd(A)) throw Error(ErrorCode::NoConvergence, "shifted operator is not positive definite");

  Field phi = Field::Ones(G.size());
  bool monotone = true;
  for (int it = 0; it < opt.max_monotone; ++it) {
    Field rhs(n);
    for (Index k = 0; k < n; ++k) {
      const Index i = nodes[static_cast<size_t>(k)];
      rhs(k) = M(i) * (s * phi(i) - g.R(i) * phi(i) + Rp(i) * std::pow(phi(i), N - 1.0)) - coupling(k);
    }
    const Field next = solver.solve(rhs);
    double step = 0.0;
    for (Index k = 0; k < n; ++k) {
      const Index i = nodes[static_cast<size_t>(k)];
      if (next(k) > phi(i) + 1e-12) monotone = false;
      step = std::max(step, std::fabs(next(k) - phi(i)));
      phi(i) = next(k);
    }
    if (phi.minCoeff() <= 0.0)
      throw Error(ErrorCode::LostPositivity, "monotone iterate lost positivity at step " + std::to_string(it));
    const double res = residual_norm(g, Rp, phi, opt.delta);
    out.trace.push_back({"lower", N, it, 0.0, step, res, sup_abs(phi.array() - 1.0), 0.0});
    if (res <= opt.tol || step <= 1e-14) break;
    // Stop sweeping once progress is slow; Newton finishes from inside the order interval.
    if (opt.polish && it >= 20 && step < 1e-3) break;
  }
  if (!monotone) out.notes.push_back("monotone iteration trace was not pointwise nonincreasing");
  if (opt.polish && residual_norm(g, Rp, phi, opt.delta) > opt.tol) {
    NewtonOptions no;
    no.tol = opt.tol;
    no.delta = opt.delta;
    auto nr = newton_critical(g, Rp, N, phi, no, &out.trace, "lower-newton");
    phi = nr.phi;
    if (nr.regularized) out.notes.push_back("Newton used a Tikhonov-regularized Jacobian");
  }
  if (phi.minCoeff() <= 0.0) throw Error(ErrorCode::LostPositivity, "lowered factor is not positive");
  out.phi = phi;
  out.residual = residual_norm(g, Rp, phi, opt.delta);
  out.tolerance = std::max(opt.tol, rounding_floor(g, Rp, phi, opt.delta));
  out.curvature_error = curvature_error(g, Rp, phi, opt.delta);
  out.status = out.residual <= out.tolerance ? Status::Solved : Status::Failed;
  return out;
}

}  // namespace conflab::prescribe
