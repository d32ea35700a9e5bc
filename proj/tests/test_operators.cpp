#include <catch_amalgamated.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

#include "conflab/metrics/catalog.hpp"
#include "conflab/operators/forms.hpp"
#include "support.hpp"

using namespace conflab;
using domain::Field;
using domain::Index;
using metrics::SpMat;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using testing::radial;
using testing::torus;

namespace {

Field sample(const domain::Grid& g, const std::function<double(double)>& f) {
  Field out(g.size());
  for (Index i = 0; i < g.size(); ++i) out(i) = f(g.r()(i));
  return out;
}

double gauss(double r) { return std::exp(-r * r); }

}  // namespace

TEST_CASE("stiffness is symmetric and non-negative on the flat background") {
  const auto grid = radial(20.0, 600);
  const auto f = operators::assemble(metrics::catalog("euclidean", grid), 0.0);
  const SpMat K = f.K;
  REQUIRE((SpMat(K.transpose()) - K).norm() == 0.0);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> N01;
  for (int t = 0; t < 20; ++t) {
    Field u(grid->size());
    for (Index i = 0; i < u.size(); ++i) u(i) = N01(rng);
    REQUIRE(f.energy(u) >= 0.0);
  }
  REQUIRE(f.n_active() == grid->size() - 1);
}

TEST_CASE("Dirichlet energy of a Gaussian matches the closed form") {
  // 8 * 4pi * int (2 r e^{-r^2})^2 r^2 dr = 8 * 4pi * 4 * 3 sqrt(pi) / (8 * 2^{5/2})
  const double exact = 8.0 * 4.0 * std::numbers::pi * 4.0 * 3.0 * std::sqrt(std::numbers::pi) / (8.0 * std::pow(2.0, 2.5));
  double prev = 0.0;
  for (int M : {500, 1000, 2000}) {
    const auto grid = radial(10.0, M);
    const auto f = operators::assemble(metrics::catalog("euclidean", grid), 0.0);
    const double err = std::fabs(f.energy(sample(*grid, gauss)) - exact);
    if (prev > 0.0) REQUIRE(prev / err > 3.5);
    prev = err;
  }
  REQUIRE(prev < 1e-4 * exact);
}

TEST_CASE("curved energy agrees with adaptive quadrature of the continuum form") {
  // For psi^4 delta, int a|du|_g^2 + R_g u^2 dV_g = a int |d(psi u)|^2 dx.
  const auto prof = metrics::well_profile(0.8, 3.0, 1.0);
  auto dprof = [&](double r) { return (prof(r + 1e-6) - prof(r - 1e-6)) / 2e-6; };
  auto u = [](double r) { return std::exp(-0.25 * r * r); };
  auto du = [](double r) { return -0.5 * r * std::exp(-0.25 * r * r); };
  const double R = 30.0;
  const double exact = 8.0 * 4.0 * std::numbers::pi *
                       boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                           [&](double r) {
                             const double d = dprof(r) * u(r) + prof(r) * du(r);
                             return d * d * r * r;
                           },
                           0.0, R, 12, 1e-12);
  double prev = 0.0;
  for (int M : {1000, 2000, 4000}) {
    const auto grid = radial(R, M);
    const auto f = operators::assemble(metrics::catalog("negative_well", grid, {{"A", 0.8}, {"r0", 3.0}, {"w", 1.0}}), 0.0);
    const double err = std::fabs(f.energy(sample(*grid, u)) - exact);
    if (prev > 0.0) REQUIRE(prev / err > 3.5);
    prev = err;
  }
  REQUIRE(prev < 1e-4 * exact);
}

TEST_CASE("conformal covariance of the discrete forms") {
  const auto grid = radial(30.0, 1200);
  const auto g = metrics::catalog("schwarzschild", grid, {{"m", 1.3}, {"r0", 1.0}});
  const Field phi = sample(*grid, metrics::well_profile(0.6, 2.0, 0.7));
  const auto h = metrics::conformal_transform(g, phi);
  const auto fg = operators::assemble(g, 0.0);
  const auto fh = operators::assemble(h, 0.0);
  const Field u = sample(*grid, [](double r) { return std::cos(r) / (1.0 + r * r); });
  // E_{phi^{N-2} g}(u) = E_g(phi u)
  REQUIRE_THAT(fh.energy(u), WithinRel(fg.energy(phi.cwiseProduct(u)), 1e-11));
  // L_{phi^{N-2} g} u = phi^{1-N} L_g(phi u)
  const Field lhs = operators::apply_conformal_laplacian(h, u);
  const Field rhs = operators::apply_conformal_laplacian(g, phi.cwiseProduct(u)).cwiseQuotient(phi.array().pow(5.0).matrix());
  REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-9 * rhs.cwiseAbs().maxCoeff());
  // the unweighted volume form scales by phi^N
  REQUIRE((fh.M - fg.M.cwiseProduct(phi.array().pow(6.0).matrix())).cwiseAbs().maxCoeff() <= 1e-12 * fh.M.maxCoeff());
}

TEST_CASE("conformal Laplacian of a Gaussian on flat space") {
  // volume-weighted L^2 error; pointwise the dual-cell stencil is only supraconvergent
  double prev = 0.0;
  for (int M : {800, 1600, 3200}) {
    const auto grid = radial(8.0, M);
    const auto g = metrics::catalog("euclidean", grid);
    const Field L = operators::apply_conformal_laplacian(g, sample(*grid, gauss));
    double err = 0.0;
    for (Index i = 0; i + 1 < grid->size(); ++i) {
      const double r = grid->r()(i);
      const double e = L(i) + 8.0 * (4.0 * r * r - 6.0) * gauss(r);
      err += grid->weights()(i) * e * e;
    }
    err = std::sqrt(err);
    if (prev > 0.0) REQUIRE(prev / err > 3.0);
    prev = err;
  }
}

TEST_CASE("on the warped torus the form evaluated at 1 is the total curvature") {
  const auto grid = torus(12);
  const auto g = metrics::catalog("torus_negative", grid, {{"A", 0.4}});
  const auto f = operators::assemble(g, 0.0);
  const Field one = Field::Ones(grid->size());
  REQUIRE_THAT(f.energy(one), WithinRel(g.R.dot(g.volume()), 1e-12));
  REQUIRE(f.n_active() == grid->size());
  REQUIRE((operators::apply_conformal_laplacian(g, one) - g.R).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(operators::apply_laplacian_part(g, one).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("direct assembly converges to the covariant one") {
  auto gap = [](int M) {
    const auto grid = radial(30.0, M);
    const auto g = metrics::catalog("negative_well", grid, {{"A", 1.0}, {"r0", 3.0}, {"w", 1.0}});
    const Field u = sample(*grid, [](double r) { return std::exp(-0.1 * r * r); });
    const double a = operators::assemble(g, 0.0).energy(u);
    const double b = operators::assemble(g, 0.0, {true}).energy(u);
    return std::fabs(a - b) / std::fabs(a);
  };
  const double e1 = gap(1000), e2 = gap(2000);
  REQUIRE(e1 < 1e-3);
  REQUIRE(std::log2(e1 / e2) > 1.7);
}

TEST_CASE("weights, delta range and restriction") {
  const auto grid = radial(20.0, 400);
  const auto g = metrics::catalog("euclidean", grid);
  REQUIRE(testing::throws_code([&] { operators::assemble(g, -0.5); }, ErrorCode::BadDelta));
  REQUIRE(testing::throws_code([&] { operators::assemble(g, -0.7); }, ErrorCode::BadDelta));
  const auto f = operators::assemble(g, 0.25);
  for (Index i = 0; i < grid->size(); i += 37) {
    const double r = grid->r()(i);
    REQUIRE_THAT(f.M_delta(i), WithinRel(f.M(i) * std::pow(1.0 + r * r, 0.5 * (-0.5 - 3.0)), 1e-13));
  }
  const auto Bf = operators::restrict(f, domain::ball(grid, 2.0));
  for (Index i : Bf.active) REQUIRE(grid->r()(i) <= 2.0);
  REQUIRE(Bf.K_active().rows() == Bf.n_active());
  const Field v = Field::Ones(Bf.n_active());
  REQUIRE(Bf.reduce(Bf.expand(v)) == v);
  REQUIRE(operators::restrict(f, domain::empty_region(grid)).empty());
  const auto other = radial(20.0, 400);
  REQUIRE(testing::throws_code([&] { operators::restrict(f, domain::whole(other)); }, ErrorCode::InvalidConfig));
  // L^q norm of 1 is vol^{1/q}
  REQUIRE_THAT(Bf.lq_norm(Field::Ones(grid->size()), 6.0),
               WithinRel(std::pow(Bf.M(Bf.active).sum(), 1.0 / 6.0), 1e-14));
}

TEST_CASE("coordinate dump lists every stored entry") {
  const auto grid = radial(10.0, 50);
  const auto f = operators::assemble(metrics::catalog("euclidean", grid), 0.0);
  const std::string coo = operators::dump_coo(f.K);
  std::istringstream in(coo);
  Index rows, cols, nnz;
  in >> rows >> cols >> nnz;
  REQUIRE(rows == 50);
  REQUIRE(nnz == f.K.nonZeros());
  Index count = 0, i, j;
  double v;
  while (in >> i >> j >> v) {
    REQUIRE(v == f.K.coeff(i, j));
    ++count;
  }
  REQUIRE(count == nnz);
}
