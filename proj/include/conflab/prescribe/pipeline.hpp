#pragma once

#include <algorithm>
#include <limits>

#include "conflab/prescribe/lower.hpp"
#include "conflab/prescribe/subcritical.hpp"
#include "conflab/prescribe/zero_outside.hpp"

namespace conflab::prescribe {

inline std::vector<double> default_q_schedule(double N, int stages = 8) {
  std::vector<double> q;
  for (int j = 0; j < stages; ++j) q.push_back(N - (N - 2.5) * std::pow(2.0, -j));
  return q;
}

struct PipelineOptions {
  std::vector<double> q_schedule;  // empty: default_q_schedule
  std::vector<double> deltas;      // zero-set classification; empty: default_deltas
  double delta = std::numeric_limits<double>::quiet_NaN();  // residual weight; NaN: delta*/2
  double tol = 1e-8;
  double stage_tol = 1e-8;
  int stage_max_iter = 40;
  double blowup_threshold = 1e3;
  double guard = 1e30;
  double truncation_quantile = 0.999;
  double zero_outside_fraction = 0.5;  // of r_max
  double collapse_threshold = 1e-3;    // sup(1 + u_q) below this: the minimizers collapse to 0
  bool pretransform = true;            // compact: move to R < 0 by the first eigenfunction
  bool strict = false;                 // throw InconsistentOutcome instead of flagging
  spectral::ClassifyOptions classify;
};

// Stage-end sup|u| exceeds the threshold and grows strictly over the last three or more stages.
inline bool diverging(const std::vector<StageSummary>& stages, double threshold) {
  if (stages.size() < 3) return false;
  size_t run = 1;
  for (size_t k = stages.size() - 1; k > 0 && stages[k].sup_u > stages[k - 1].sup_u; --k) ++run;
  return run >= 3 && stages.back().sup_u > threshold;
}

inline double truncation_floor(const Field& Rp, double quantile) {
  std::vector<double> mags;
  for (Index i = 0; i < Rp.size(); ++i)
    if (Rp(i) != 0.0) mags.push_back(std::fabs(Rp(i)));
  if (mags.empty()) return 0.0;
  const size_t k = std::min(mags.size() - 1, static_cast<size_t>(std::floor(quantile * static_cast<double>(mags.size() - 1))));
  std::nth_element(mags.begin(), mags.begin() + static_cast<long>(k), mags.end());
  return -mags[k];
}

inline SolveResult prescribe_curvature(const ConformalMetric& g, const CurvatureTarget& target, const PipelineOptions& opt = {}) {
  const domain::Grid& G = *g.grid;
  const double N = g.c.N;
  if (target.Rp.size() != G.size()) throw Error(ErrorCode::InvalidConfig, "target does not match the metric's grid");
  if (target.Rp.maxCoeff() > 0.0) throw Error(ErrorCode::PreconditionViolated, "prescribed curvature must be non-positive");
  SolveResult out;
  out.delta = std::isfinite(opt.delta) ? opt.delta : 0.5 * g.c.delta_star;
  operators::check_delta(g.c, out.delta);
  const Field& Rp = target.Rp;

  // (i) sign of the zero set
  const auto deltas = opt.deltas.empty() ? spectral::default_deltas(G.dim()) : opt.deltas;
  try {
    const auto v = spectral::classify_sign(g, target.Z, deltas, opt.classify);
    out.has_verdict = true;
    out.verdict = v.verdict;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Inconsistent) throw;
    out.notes.push_back(std::string("zero-set classification inconsistent: ") + e.what());
  }

  // (ii) zero scalar curvature near infinity, or the compact pre-transform
  ConformalMetric g1 = g;
  Field phi0 = Field::Ones(G.size());
  if (G.radial()) {
    const auto z = zero_scalar_outside(g, opt.zero_outside_fraction * G.r_max());
    g1 = z.metric;
    phi0 = z.phi;
  } else if (opt.pretransform) {
    const auto forms = operators::assemble(g, 0.0);
    const auto lam = spectral::lambda_delta(forms);
    const double band = spectral::automatic_band(g, {lam}, opt.classify.band_rel);
    if (lam.lambda < -band) {
      phi0 = lam.eigenfunction / lam.eigenfunction.maxCoeff();
      g1 = metrics::conformal_transform(g, phi0, false);
    } else {
      out.notes.push_back("compact metric is not Yamabe negative (lambda = " + io::fmt_double(lam.lambda) +
                          "); pre-transform skipped");
    }
  }

  // (iii) truncate R' from below
  const double floor = truncation_floor(Rp, opt.truncation_quantile);
  const Field Rt = Rp.cwiseMax(floor);

  // (iv) subcritical continuation, then Newton at the critical exponent
  const auto schedule = opt.q_schedule.empty() ? default_q_schedule(N) : opt.q_schedule;
  SubcriticalOptions so;
  so.tol = opt.stage_tol;
  so.delta = out.delta;
  so.max_iter = opt.stage_max_iter;
  so.guard = opt.guard;
  Field u = Field::Zero(G.size());
  bool guard_hit = false;
  for (double q : schedule) {
    const auto st = subcritical_minimize(g1, Rt, q, u, so, &out.trace);
    out.stages.push_back({q, st.F, st.F_zero, st.sup_u, st.norm_2delta, st.el_residual, st.iterations, st.accepted});
    u = st.u;
    if (st.guard_hit) {
      guard_hit = true;
      break;
    }
  }

  auto finish = [&](Status s) {
    out.status = s;
    if (out.has_verdict) {
      if (out.verdict == spectral::Sign::Null) {
        out.notes.push_back(std::string("pipeline outcome ") + to_string(s) + " with a Null zero set; refused");
        out.status = Status::Indeterminate;
      } else if ((s == Status::Solved && out.verdict == spectral::Sign::Negative) ||
                 (s == Status::Diverged && out.verdict == spectral::Sign::Positive)) {
        out.inconsistent = true;
      }
    } else {
      out.status = Status::Indeterminate;
    }
    if (out.inconsistent && opt.strict)
      throw Error(ErrorCode::InconsistentOutcome, std::string(to_string(s)) + " with zero-set verdict " + spectral::to_string(out.verdict));
    return out;
  };

  if (diverging(out.stages, opt.blowup_threshold)) {
    out.phi = phi0.cwiseProduct(Field(u.array() + 1.0));
    out.message = "sup|u_q| grew past the blow-up threshold over the last stages";
    return finish(Status::Diverged);
  }
  if (guard_hit) {
    out.message = "sup|u_q| passed the guard without a monotone trend";
    out.phi = phi0;
    return finish(Status::Failed);
  }

  NewtonOptions no;
  no.tol = opt.tol;
  no.delta = out.delta;
  Field v = u.array() + 1.0;
  if (v.minCoeff() <= 0.0 || v.maxCoeff() < opt.collapse_threshold) {
    out.message = "subcritical limit reached phi = 0; no positive critical solution";
    out.phi = phi0.cwiseProduct(v);
    return finish(Status::Failed);
  }
  const auto nr = newton_critical(g1, Rt, N, v, no, &out.trace, "critical");
  if (nr.regularized) out.notes.push_back("critical Newton used a Tikhonov-regularized Jacobian");
  if (!nr.converged || nr.phi.minCoeff() <= 0.0) {
    out.message = "Newton at the critical exponent did not converge";
    out.phi = phi0.cwiseProduct(nr.phi);
    return finish(Status::Failed);
  }

  // (v) undo the truncation by lowering R_t to R'
  Field phi = phi0.cwiseProduct(nr.phi);
  try {
    if ((Rt - Rp).cwiseAbs().maxCoeff() > 0.0) {
    const ConformalMetric g2 = metrics::conformal_transform(g1, nr.phi, false);
    LowerOptions lo;
    lo.tol = opt.tol;
    lo.delta = out.delta;
    // R_{g2} = R_t + res / phi^{N-1}, so the precondition only holds up to the Newton residual.
    const Field res = equation_residual(g1, Rt, nr.phi);
    const double scale = std::max(1.0, std::max(g2.R.cwiseAbs().maxCoeff(), Rp.cwiseAbs().maxCoeff()));
    double slack = 0.0;
    for (Index i : free_nodes(G)) slack = std::max(slack, std::fabs(res(i)) / std::pow(nr.phi(i), N - 1.0));
    lo.precondition_tol = std::max(lo.precondition_tol, 2.0 * slack / scale);
    const auto low = lower_scalar_curvature(g2, Rp, lo);
    out.trace.insert(out.trace.end(), low.trace.begin(), low.trace.end());
    for (const auto& n : low.notes) out.notes.push_back(n);
    phi = phi.cwiseProduct(low.phi);
    }
  } catch (const Error& e) {
    out.message = e.what();
    out.phi = phi;
    return finish(Status::Failed);
  }

  // The factors were found on transformed metrics; polish once more against the input metric.
  if (residual_norm(g, Rp, phi, out.delta) > opt.tol) {
    const auto fin = newton_critical(g, Rp, N, phi, no, &out.trace, "final");
    if (fin.phi.minCoeff() > 0.0) phi = fin.phi;
  }
  out.phi = phi;
  out.residual = residual_norm(g, Rp, phi, out.delta);
  out.tolerance = std::max(opt.tol, rounding_floor(g, Rp, phi, out.delta));
  out.curvature_error = curvature_error(g, Rp, phi, out.delta);
  if (phi.minCoeff() > 0.0 && out.residual <= out.tolerance) return finish(Status::Solved);
  out.message = "final residual " + io::fmt_double(out.residual) + " above tolerance " + io::fmt_double(out.tolerance);
  return finish(Status::Failed);
}

}  // namespace conflab::prescribe
