#pragma once

#include "conflab/metrics/catalog.hpp"
#include "conflab/spectral/lambda.hpp"

namespace conflab::spectral {

struct TuneOptions {
  double A_lo = 0.05;
  double A_hi = 20.0;
  int scan = 12;        // log-spaced amplitudes probed before bisecting
  int bisections = 30;
  double delta = std::numeric_limits<double>::quiet_NaN();  // NaN: delta*/2
  double r0 = 3.0;
  double w = 1.0;
  EigenOptions eigen;
};

struct TuneResult {
  bool found = false;
  double A = 0.0;           // smallest amplitude with lambda < 0 when found, else the argmin
  double lambda = kInf;     // lambda at A
  double min_lambda = kInf;
  std::vector<std::pair<double, double>> probes;  // (A, lambda)
};

// Searches the negative_well family for lambda_delta(M) < 0: log scan, then bisection on the first sign change.
inline TuneResult tune_negative_well(const domain::GridPtr& grid, const TuneOptions& opt = {}) {
  if (!(opt.A_lo > 0.0 && opt.A_hi > opt.A_lo) || opt.scan < 2) throw Error(ErrorCode::InvalidConfig, "bad amplitude range");
  const double delta = std::isfinite(opt.delta) ? opt.delta : 0.25 * (2.0 - grid->dim());
  const auto whole = domain::whole(grid);
  auto lam = [&](double A) {
    const auto g = metrics::catalog("negative_well", grid, {{"A", A}, {"r0", opt.r0}, {"w", opt.w}});
    return lambda_delta(g, whole, delta, opt.eigen).lambda;
  };
  TuneResult out;
  double prev_A = 0.0;
  bool have_prev = false;
  for (int k = 0; k < opt.scan; ++k) {
    const double A = opt.A_lo * std::pow(opt.A_hi / opt.A_lo, static_cast<double>(k) / (opt.scan - 1));
    const double l = lam(A);
    out.probes.emplace_back(A, l);
    if (l < out.min_lambda) {
      out.min_lambda = l;
      out.A = A;
      out.lambda = l;
    }
    if (l < 0.0) {
      double lo = have_prev ? prev_A : A, hi = A;
      double lhi = l;
      for (int b = 0; b < opt.bisections && have_prev; ++b) {
        const double mid = 0.5 * (lo + hi);
        const double lm = lam(mid);
        out.probes.emplace_back(mid, lm);
        if (lm < 0.0) {
          hi = mid;
          lhi = lm;
        } else {
          lo = mid;
        }
      }
      out.found = true;
      out.A = hi;
      out.lambda = lhi;
      out.min_lambda = std::min(out.min_lambda, lhi);
      return out;
    }
    prev_A = A;
    have_prev = true;
  }
  return out;
}

}  // namespace conflab::spectral
