#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <numbers>

#include "conflab/core/error.hpp"
#include "conflab/domain/grid.hpp"

namespace testing {

inline conflab::domain::GridPtr radial(double r_max, int nodes, double stretch = 2.0) {
  conflab::domain::GridConfig gc;
  gc.mode = conflab::domain::RadialSpec{r_max, nodes, stretch};
  return conflab::domain::build_grid(gc);
}

inline conflab::domain::GridPtr torus(int m, double L = 2.0 * std::numbers::pi) {
  conflab::domain::GridConfig gc;
  gc.mode = conflab::domain::PeriodicSpec{L, m};
  return conflab::domain::build_grid(gc);
}

// True iff f throws a conflab::Error carrying this code.
template <class F>
bool throws_code(F&& f, conflab::ErrorCode code) {
  try {
    f();
  } catch (const conflab::Error& e) {
    return e.code() == code;
  }
  return false;
}

// Scalar curvature of a metric given by components g_ij(x), from Christoffel symbols
// computed by nested central differences. Independent of the library's discretizations.
using Point = std::array<double, 3>;
using MetricFn = std::function<Eigen::Matrix3d(const Point&)>;

inline Point moved(Point x, int k, double s) {
  x[static_cast<size_t>(k)] += s;
  return x;
}

inline std::array<Eigen::Matrix3d, 3> christoffel(const MetricFn& g, const Point& x, double h) {
  std::array<Eigen::Matrix3d, 3> dg;  // dg[k] = d_k g
  for (int k = 0; k < 3; ++k) dg[k] = (g(moved(x, k, h)) - g(moved(x, k, -h))) / (2.0 * h);
  const Eigen::Matrix3d gi = g(x).inverse();
  std::array<Eigen::Matrix3d, 3> G;  // G[k](i,j) = Gamma^k_ij
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int l = 0; l < 3; ++l) s += gi(k, l) * (dg[i](l, j) + dg[j](l, i) - dg[l](i, j));
        G[k](i, j) = 0.5 * s;
      }
  return G;
}

inline double scalar_curvature(const MetricFn& g, const Point& x, double h = 1e-3) {
  const double hi = 0.5 * h;
  const auto G = christoffel(g, x, hi);
  std::array<std::array<Eigen::Matrix3d, 3>, 3> dG;  // dG[m][k] = d_m Gamma^k
  for (int m = 0; m < 3; ++m) {
    const auto Gp = christoffel(g, moved(x, m, h), hi);
    const auto Gm = christoffel(g, moved(x, m, -h), hi);
    for (int k = 0; k < 3; ++k) dG[m][k] = (Gp[k] - Gm[k]) / (2.0 * h);
  }
  const Eigen::Matrix3d gi = g(x).inverse();
  double R = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double Ric = 0.0;
      for (int k = 0; k < 3; ++k) {
        Ric += dG[k][k](i, j) - dG[j][k](i, k);
        for (int l = 0; l < 3; ++l) Ric += G[k](k, l) * G[l](i, j) - G[k](j, l) * G[l](i, k);
      }
      R += gi(i, j) * Ric;
    }
  return R;
}

}  // namespace testing
