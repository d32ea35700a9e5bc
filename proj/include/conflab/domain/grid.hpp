#pragma once

#include <Eigen/Core>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "conflab/core/error.hpp"

namespace conflab::domain {

using Field = Eigen::VectorXd;
using Index = Eigen::Index;

struct RadialSpec {
  double r_max = 100.0;
  int node_count = 4000;
  double stretch = 2.0;
};

struct PeriodicSpec {
  double box_length = 2.0 * std::numbers::pi;
  int nodes_per_axis = 16;
};

struct GridConfig {
  int dim = 3;
  std::variant<RadialSpec, PeriodicSpec> mode = RadialSpec{};
  Index max_nodes = 4'000'000;
};

enum class GridMode { Radial, Periodic };

// Area of the unit sphere S^{n-1}.
inline double sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

class Grid;
using GridPtr = std::shared_ptr<const Grid>;

class Grid {
 public:
  int dim() const { return config_.dim; }
  GridMode mode() const { return mode_; }
  bool radial() const { return mode_ == GridMode::Radial; }
  bool periodic() const { return mode_ == GridMode::Periodic; }
  const GridConfig& config() const { return config_; }
  Index size() const { return weights_.size(); }

  // Quadrature weights: flat volume of each node's dual cell.
  const Field& weights() const { return weights_; }

  // Radial mode: node radii and dual-cell faces (faces.size() == size()+1).
  const Field& r() const { return r_; }
  const std::vector<double>& faces() const { return faces_; }
  double r_max() const { return r_(r_.size() - 1); }
  double spacing_at(Index i) const {
    if (periodic()) return h_;
    if (i + 1 < r_.size()) return r_(i + 1) - r_(i);
    return r_(i) - r_(i - 1);
  }

  // Periodic mode: nodes x_j = j*h on [0, L) per axis, flattened with axis 0 fastest.
  int nodes_per_axis() const { return m_; }
  double spacing() const { return h_; }
  double box_length() const { return m_ * h_; }
  Index stride(int axis) const {
    Index s = 1;
    for (int k = 0; k < axis; ++k) s *= m_;
    return s;
  }
  int axis_index(Index i, int axis) const { return static_cast<int>((i / stride(axis)) % m_); }
  double coord(Index i, int axis) const { return axis_index(i, axis) * h_; }
  Index shift(Index i, int axis, int step) const {
    const int j = axis_index(i, axis);
    const int jn = ((j + step) % m_ + m_) % m_;
    return i + (jn - j) * stride(axis);
  }

  // The Dirichlet node at r_max in radial mode; -1 in periodic mode.
  Index dirichlet_node() const { return radial() ? size() - 1 : -1; }

  friend GridPtr build_grid(const GridConfig& cfg);

 private:
  GridConfig config_;
  GridMode mode_ = GridMode::Radial;
  Field r_;
  std::vector<double> faces_;
  Field weights_;
  int m_ = 0;
  double h_ = 0.0;
};

inline GridPtr build_grid(const GridConfig& cfg) {
  if (cfg.dim < 3) throw Error(ErrorCode::InvalidConfig, "dimension must be >= 3");
  auto g = std::shared_ptr<Grid>(new Grid());
  g->config_ = cfg;
  const int n = cfg.dim;
  if (const auto* rs = std::get_if<RadialSpec>(&cfg.mode)) {
    if (rs->node_count < 16) throw Error(ErrorCode::InvalidConfig, "node_count must be >= 16");
    if (!(rs->r_max > 1.0)) throw Error(ErrorCode::InvalidConfig, "r_max must be > 1");
    if (!(rs->stretch >= 1.0)) throw Error(ErrorCode::InvalidConfig, "stretch must be >= 1");
    if (rs->node_count > cfg.max_nodes) throw Error(ErrorCode::InvalidConfig, "node_count exceeds memory budget");
    const Index M = rs->node_count;
    g->mode_ = GridMode::Radial;
    g->r_.resize(M);
    for (Index i = 0; i < M; ++i) {
      const double xi = static_cast<double>(i) / static_cast<double>(M - 1);
      g->r_(i) = rs->r_max * std::pow(xi, rs->stretch);
    }
    g->r_(M - 1) = rs->r_max;
    g->faces_.assign(M + 1, 0.0);
    for (Index i = 1; i < M; ++i) g->faces_[i] = 0.5 * (g->r_(i - 1) + g->r_(i));
    g->faces_[M] = rs->r_max;
    const double omega = sphere_area(n);
    g->weights_.resize(M);
    for (Index i = 0; i < M; ++i)
      g->weights_(i) = omega / n * (std::pow(g->faces_[i + 1], n) - std::pow(g->faces_[i], n));
  } else {
    const auto& ps = std::get<PeriodicSpec>(cfg.mode);
    if (ps.nodes_per_axis < 4) throw Error(ErrorCode::InvalidConfig, "nodes_per_axis must be >= 4");
    if (!(ps.box_length > 0.0)) throw Error(ErrorCode::InvalidConfig, "box_length must be positive");
    const double total = std::pow(static_cast<double>(ps.nodes_per_axis), n);
    if (total > static_cast<double>(cfg.max_nodes)) throw Error(ErrorCode::InvalidConfig, "grid exceeds memory budget");
    g->mode_ = GridMode::Periodic;
    g->m_ = ps.nodes_per_axis;
    g->h_ = ps.box_length / ps.nodes_per_axis;
    const Index total_nodes = static_cast<Index>(total);
    g->weights_ = Field::Constant(total_nodes, std::pow(g->h_, n));
  }
  return g;
}

// rho = sqrt(1 + r^2) in radial mode, 1 on the torus.
inline Field weight_rho(const Grid& grid) {
  if (grid.periodic()) return Field::Ones(grid.size());
  return (1.0 + grid.r().array().square()).sqrt().matrix();
}

}  // namespace conflab::domain
