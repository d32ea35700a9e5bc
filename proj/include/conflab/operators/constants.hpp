#pragma once

#include "conflab/core/error.hpp"

namespace conflab::operators {

// Dimension-dependent constants of the conformal Laplacian.
struct Constants {
  int n;
  double a;           // 4(n-1)/(n-2)
  double N;           // 2n/(n-2), critical Sobolev exponent
  double delta_star;  // (2-n)/2
};

inline Constants constants(int n) {
  if (n < 3) throw Error(ErrorCode::InvalidDimension, "n must be >= 3, got " + std::to_string(n));
  const double nd = n;
  return Constants{n, 4.0 * (nd - 1.0) / (nd - 2.0), 2.0 * nd / (nd - 2.0), (2.0 - nd) / 2.0};
}

}  // namespace conflab::operators
