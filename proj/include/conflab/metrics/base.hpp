#pragma once

#include <Eigen/Sparse>
#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "conflab/domain/quadrature.hpp"
#include "conflab/operators/constants.hpp"

namespace conflab::metrics {

using domain::Field;
using domain::Grid;
using domain::GridPtr;
using domain::Index;
using SpMat = Eigen::SparseMatrix<double>;

enum class BaseTag { EuclideanAE, FlatTorus, WarpedTorus };

inline const char* to_string(BaseTag t) {
  switch (t) {
    case BaseTag::EuclideanAE: return "EuclideanAE";
    case BaseTag::FlatTorus: return "FlatTorus";
    case BaseTag::WarpedTorus: return "WarpedTorus";
  }
  return "?";
}

inline BaseTag base_from_string(const std::string& s) {
  if (s == "EuclideanAE") return BaseTag::EuclideanAE;
  if (s == "FlatTorus") return BaseTag::FlatTorus;
  if (s == "WarpedTorus") return BaseTag::WarpedTorus;
  throw Error(ErrorCode::UnknownName, "base tag '" + s + "'");
}

struct BaseSpec {
  BaseTag tag = BaseTag::EuclideanAE;
  double warp = 0.0;  // amplitude A of beta for WarpedTorus
};

// Warped torus, n = 3: e^{-2b}(dx^2+dy^2) + e^{2b}dz^2 with b = A(cos kx + cos ky), k = 2pi/L.
struct Warp {
  double A;
  double k;
  double beta(double x, double y) const { return A * (std::cos(k * x) + std::cos(k * y)); }
  double beta_x(double x) const { return -A * k * std::sin(k * x); }
  double beta_y(double y) const { return -A * k * std::sin(k * y); }
  double scalar_curvature(double x, double y) const {
    const double gx = beta_x(x), gy = beta_y(y);
    return -2.0 * std::exp(2.0 * beta(x, y)) * (gx * gx + gy * gy);
  }
};

struct Edge {
  Index i;
  Index j;
  double cond;  // flat-coordinate conductance
};

// Finite-volume discretization of the base metric.
struct BaseOperator {
  BaseSpec spec;
  std::vector<Edge> edges;
  Field vol;  // dV_base per node
  Field R;    // base scalar curvature at nodes
  SpMat K;    // a * sum_e cond (u_i - u_j)^2 + sum vol R u^2, as a matrix on all nodes
};

inline SpMat stiffness_from_edges(Index n_nodes, const std::vector<Edge>& edges, const Field& diag_extra,
                                  double a, const Field* edge_scale = nullptr) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(edges.size() * 4 + static_cast<size_t>(n_nodes));
  for (size_t e = 0; e < edges.size(); ++e) {
    const auto& ed = edges[e];
    const double c = a * ed.cond * (edge_scale ? (*edge_scale)(static_cast<Index>(e)) : 1.0);
    t.emplace_back(ed.i, ed.i, c);
    t.emplace_back(ed.j, ed.j, c);
    t.emplace_back(ed.i, ed.j, -c);
    t.emplace_back(ed.j, ed.i, -c);
  }
  for (Index i = 0; i < n_nodes; ++i) t.emplace_back(i, i, diag_extra(i));
  SpMat K(n_nodes, n_nodes);
  K.setFromTriplets(t.begin(), t.end());
  K.makeCompressed();
  return K;
}

inline std::shared_ptr<const BaseOperator> build_base(const Grid& g, const BaseSpec& spec) {
  auto op = std::make_shared<BaseOperator>();
  op->spec = spec;
  const int n = g.dim();
  const auto c = operators::constants(n);
  if (g.radial()) {
    if (spec.tag != BaseTag::EuclideanAE) throw Error(ErrorCode::InvalidConfig, "radial grids need the EuclideanAE base");
    const double omega = domain::sphere_area(n);
    const auto& f = g.faces();
    for (Index i = 0; i + 1 < g.size(); ++i) {
      const double face = f[static_cast<size_t>(i) + 1];
      op->edges.push_back({i, i + 1, omega * std::pow(face, n - 1) / (g.r()(i + 1) - g.r()(i))});
    }
    op->vol = g.weights();
    op->R = Field::Zero(g.size());
  } else {
    if (spec.tag == BaseTag::EuclideanAE) throw Error(ErrorCode::InvalidConfig, "periodic grids need a torus base");
    const double h = g.spacing();
    const double face = std::pow(h, n - 2);
    op->vol = g.weights();
    op->R = Field::Zero(g.size());
    if (spec.tag == BaseTag::FlatTorus) {
      for (Index i = 0; i < g.size(); ++i)
        for (int k = 0; k < n; ++k) op->edges.push_back({i, g.shift(i, k, 1), face});
    } else {
      if (n != 3) throw Error(ErrorCode::InvalidDimension, "the warped torus is three-dimensional");
      const Warp w{spec.warp, 2.0 * std::numbers::pi / g.box_length()};
      for (Index i = 0; i < g.size(); ++i) {
        const double x = g.coord(i, 0), y = g.coord(i, 1);
        const double b = w.beta(x, y);
        op->edges.push_back({i, g.shift(i, 0, 1), face * std::exp(w.beta(x + 0.5 * h, y))});
        op->edges.push_back({i, g.shift(i, 1, 1), face * std::exp(w.beta(x, y + 0.5 * h))});
        op->edges.push_back({i, g.shift(i, 2, 1), face * std::exp(-3.0 * b)});
        op->vol(i) *= std::exp(-b);
        op->R(i) = w.scalar_curvature(x, y);
      }
    }
  }
  op->K = stiffness_from_edges(g.size(), op->edges, op->vol.cwiseProduct(op->R), c.a);
  return op;
}

// Flat Laplace-Beltrami of the base by finite differences, independent of the edge form.
inline Field base_laplacian_fd(const Grid& g, const BaseSpec& spec, const Field& u) {
  if (spec.tag != BaseTag::WarpedTorus) return domain::fd::laplacian(g, u);
  const Warp w{spec.warp, 2.0 * std::numbers::pi / g.box_length()};
  const double h = g.spacing();
  Field out(g.size());
  for (Index i = 0; i < g.size(); ++i) {
    const double x = g.coord(i, 0), y = g.coord(i, 1);
    const double b = w.beta(x, y);
    double d1[3], d2[3];
    for (int k = 0; k < 3; ++k) {
      const double up = u(g.shift(i, k, 1)), um = u(g.shift(i, k, -1));
      d1[k] = (up - um) / (2.0 * h);
      d2[k] = (up - 2.0 * u(i) + um) / (h * h);
    }
    const double e = std::exp(b);
    out(i) = e * (e * (d2[0] + d2[1] + w.beta_x(x) * d1[0] + w.beta_y(y) * d1[1]) + std::exp(-3.0 * b) * d2[2]);
  }
  return out;
}

}  // namespace conflab::metrics
