#pragma once

#include <string>
#include <vector>

#include "conflab/spectral/yamabe.hpp"

namespace conflab::spectral {

enum class Sign { Positive, Null, Negative };

inline const char* to_string(Sign s) {
  switch (s) {
    case Sign::Positive: return "Positive";
    case Sign::Null: return "Null";
    case Sign::Negative: return "Negative";
  }
  return "?";
}

struct SignVerdict {
  Sign verdict = Sign::Positive;
  std::vector<double> deltas;
  std::vector<SpectralResult> lambdas;
  YamabeEstimate yamabe;
  bool has_yamabe = false;
  double null_band = 0.0;
};

struct ClassifyOptions {
  EigenOptions eigen;
  YamabeOptions yamabe;
  double null_band = 0.0;     // <= 0 selects the automatic band
  double band_rel = 1e-6;
  bool with_yamabe = true;
};

inline std::vector<double> default_deltas(int n) {
  const double ds = 0.5 * (2.0 - n);
  return {ds + 0.1, 0.5 * ds, 0.5};
}

// 1e-6 * max(median |lambda|, a (2 pi / L)^2), L the domain length.
inline double automatic_band(const ConformalMetric& g, const std::vector<SpectralResult>& lams, double rel) {
  std::vector<double> mags;
  for (const auto& r : lams)
    if (!r.infinite) mags.push_back(std::fabs(r.lambda));
  const double L = g.grid->periodic() ? g.grid->box_length() : g.grid->r_max();
  const double floor = g.c.a * std::pow(2.0 * M_PI / L, 2);
  return rel * std::max(detail::median(mags), floor);
}

inline Sign sign_of(double v, double band) {
  if (v > band) return Sign::Positive;
  if (v < -band) return Sign::Negative;
  return Sign::Null;
}

inline SignVerdict classify_sign(const ConformalMetric& g, const Region& V, const std::vector<double>& deltas,
                                 const ClassifyOptions& opt = {}) {
  if (deltas.empty()) throw Error(ErrorCode::InvalidConfig, "classify_sign needs at least one delta");
  for (double d : deltas) operators::check_delta(g.c, d);
  SignVerdict out;
  out.deltas = deltas;
  const FormSet base = operators::assemble(g, deltas.front());
  for (double d : deltas) {
    FormSet f = base;
    f.delta = d;
    f.M_delta = f.M.cwiseProduct(operators::mass_weight(*g.grid, d));
    out.lambdas.push_back(lambda_delta(operators::restrict(f, V), opt.eigen));
  }
  if (out.lambdas.front().infinite) {
    out.verdict = Sign::Positive;
    out.null_band = opt.null_band > 0 ? opt.null_band : 0.0;
    return out;
  }
  out.null_band = opt.null_band > 0 ? opt.null_band : automatic_band(g, out.lambdas, opt.band_rel);

  std::vector<Sign> signs;
  std::string detail_msg;
  for (const auto& r : out.lambdas) {
    signs.push_back(sign_of(r.lambda, out.null_band));
    detail_msg += " lambda(" + io::fmt_double(r.delta) + ")=" + io::fmt_double(r.lambda);
  }
  if (opt.with_yamabe) {
    YamabeOptions yo = opt.yamabe;
    if (!(yo.delta > g.c.delta_star)) yo.delta = deltas.front();
    out.yamabe = yamabe_invariant(g, V, yo);
    out.has_yamabe = true;
    signs.push_back(sign_of(out.yamabe.y_value, out.null_band));
    detail_msg += " y=" + io::fmt_double(out.yamabe.y_value);
  }
  for (Sign s : signs)
    if (s != signs.front())
      throw Error(ErrorCode::Inconsistent, "sign disagreement beyond null_band " + io::fmt_double(out.null_band) + ":" + detail_msg);
  out.verdict = signs.front();
  return out;
}

}  // namespace conflab::spectral
