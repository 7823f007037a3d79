#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "muse/errors.hpp"
#include "muse/signal.hpp"

namespace muse {

using LinearFn = std::function<Vec(const Vec&)>;

/// Largest-singular-value estimate of a linear operator given as an
/// apply/adjoint closure pair, via power iteration on A^H A. The Rayleigh
/// sequence is non-decreasing and never exceeds the true value (up to
/// floating-point error), so the result is a safe lower estimate. Starts
/// from a seeded random vector; exits early once the estimate moves by
/// less than 1e-10 relative.
inline double spectral_norm_estimate(const LinearFn& apply, const LinearFn& adjoint,
                                     int dim, int iters, Rng& rng) {
  if (dim < 1) throw InvalidArgument("spectral_norm_estimate: dim must be >= 1");
  if (iters < 1) throw InvalidArgument("spectral_norm_estimate: iters must be >= 1");

  Vec v = gaussian_vec(rng, dim);
  if (v.norm() == 0.0) v.setOnes();
  v.normalize();

  double est = 0.0;
  for (int it = 0; it < iters; ++it) {
    const Vec u = apply(v);
    const Vec w = adjoint(u);
    if (w.size() != dim) {
      throw InvalidArgument("spectral_norm_estimate: apply/adjoint dimension mismatch");
    }
    const double prev = est;
    est = u.norm();  // ||A v|| with ||v|| = 1
    const double wn = w.norm();
    if (wn == 0.0) return est;  // v in the kernel of A^H A
    v = w / wn;
    if (it > 0 && std::abs(est - prev) < 1e-10 * std::max(1.0, est)) break;
  }
  return est;
}

/// Top singular value of a dense matrix (power iteration).
inline double spectral_norm_matrix(const Mat& w, int iters, Rng& rng) {
  if (w.size() == 0) return 0.0;
  const Mat wt = w.transpose();
  return spectral_norm_estimate([&](const Vec& x) { return Vec(w * x); },
                                [&](const Vec& y) { return Vec(wt * y); },
                                static_cast<int>(w.cols()), iters, rng);
}

}  // namespace muse
