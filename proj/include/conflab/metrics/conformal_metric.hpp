#pragma once

#include <functional>
#include <string>

#include "conflab/domain/io.hpp"
#include "conflab/metrics/base.hpp"

namespace conflab::metrics {

using io::ordered_json;

// g = psi^{N-2} * base.
struct ConformalMetric {
  GridPtr grid;
  BaseSpec base;
  std::shared_ptr<const BaseOperator> op;
  operators::Constants c{};
  Field psi;
  Field R;           // cached, finite-volume consistent
  double tau = 0.0;  // decay tag, metadata only (0 on the torus)
  std::string name = "custom";
  ordered_json params = ordered_json::object();
  std::function<double(double)> profile;  // analytic psi(r) when known

  // Volume of each node's dual cell in the metric g.
  Field volume() const { return op->vol.cwiseProduct(psi.array().pow(c.N).matrix()); }
  // Quadratic form u -> int a|du|_g^2 + R_g u^2 dV_g, via K_g = D_psi K_base D_psi.
  SpMat stiffness() const {
    SpMat K = psi.asDiagonal() * op->K * psi.asDiagonal();
    K.makeCompressed();
    return K;
  }
};

// R = psi^{1-N}(K_base psi)/vol, the curvature consistent with the covariant stiffness.
inline Field scalar_curvature(const Grid& g, const BaseOperator& op, const Field& psi, const operators::Constants& c) {
  const Field Kpsi = op.K * psi;
  Field R(g.size());
  for (Index i = 0; i < g.size(); ++i) R(i) = Kpsi(i) / (op.vol(i) * std::pow(psi(i), c.N - 1.0));
  if (g.radial()) {
    // The outer Dirichlet node has a one-sided cell; extrapolate quadratically.
    const Index M = g.size();
    const Field& r = g.r();
    const double x0 = r(M - 4), x1 = r(M - 3), x2 = r(M - 2), x = r(M - 1);
    const double l0 = (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2));
    const double l1 = (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2));
    const double l2 = (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
    R(M - 1) = l0 * R(M - 4) + l1 * R(M - 3) + l2 * R(M - 2);
  }
  return R;
}

// Finite-difference curvature psi^{1-N}(-a Delta_base psi + R_base psi); independent route.
inline Field scalar_curvature_fd(const Grid& g, const BaseSpec& base, const BaseOperator& op, const Field& psi,
                                 const operators::Constants& c) {
  const Field lap = base_laplacian_fd(g, base, psi);
  Field R(g.size());
  for (Index i = 0; i < g.size(); ++i)
    R(i) = (-c.a * lap(i) + op.R(i) * psi(i)) / std::pow(psi(i), c.N - 1.0);
  return R;
}

inline Field scalar_curvature_fd(const ConformalMetric& g) {
  return scalar_curvature_fd(*g.grid, g.base, *g.op, g.psi, g.c);
}

struct MetricOptions {
  bool check_decay = true;
  double tau = 0.0;
  std::string name = "custom";
  ordered_json params = ordered_json::object();
  std::function<double(double)> profile;
  std::shared_ptr<const BaseOperator> op;  // reuse a base operator built for the same grid
};

inline void check_factor(const Grid& g, const Field& f, bool check_decay, const char* what) {
  if (f.size() != g.size()) throw Error(ErrorCode::InvalidConfig, std::string(what) + " length does not match grid");
  if (!f.allFinite() || f.minCoeff() <= 0.0)
    throw Error(ErrorCode::NonPositiveFactor, std::string(what) + " must be positive and finite");
  if (check_decay && g.radial()) {
    const Index M = g.size();
    const double h = g.r()(M - 1) - g.r()(M - 2);
    if (std::fabs(f(M - 1) - 1.0) > 10.0 * h)
      throw Error(ErrorCode::BadDecay, std::string(what) + " does not approach 1 at r_max");
  }
}

inline ConformalMetric make_metric(GridPtr grid, BaseSpec base, Field psi, MetricOptions opt = {}) {
  check_factor(*grid, psi, opt.check_decay, "psi");
  ConformalMetric g;
  g.c = operators::constants(grid->dim());
  g.op = opt.op ? opt.op : build_base(*grid, base);
  g.grid = std::move(grid);
  g.base = base;
  g.psi = std::move(psi);
  g.R = scalar_curvature(*g.grid, *g.op, g.psi, g.c);
  g.tau = opt.tau;
  g.name = opt.name;
  g.params = opt.params;
  g.profile = opt.profile;
  return g;
}

// Metric phi^{N-2} g: factor psi*phi, curvature phi^{1-N}(-a Delta_g phi + R_g phi).
inline ConformalMetric conformal_transform(const ConformalMetric& g, const Field& phi, bool check_decay = true) {
  check_factor(*g.grid, phi, check_decay, "phi");
  ConformalMetric out = g;
  out.psi = g.psi.cwiseProduct(phi);
  out.R = scalar_curvature(*g.grid, *g.op, out.psi, g.c);
  out.profile = nullptr;
  out.name = g.name + "*phi";
  return out;
}

}  // namespace conflab::metrics
