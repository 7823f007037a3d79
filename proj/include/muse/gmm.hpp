#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "muse/errors.hpp"
#include "muse/signal.hpp"

namespace muse {

/// Isotropic Gaussian mixture prior with closed-form smoothed energy and
/// score under Gaussian convolution. Serves as the analytic ground truth for
/// training and solver experiments.
struct GmmPrior {
  std::vector<double> weights;   // pi_k, sums to 1
  std::vector<Vec> means;        // mu_k
  std::vector<double> variances; // s_k^2 (per-component isotropic variance)

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }

  void validate() const {
    if (weights.empty() || weights.size() != means.size() ||
        weights.size() != variances.size()) {
      throw InvalidArgument("gmm: weights/means/variances must be non-empty and aligned");
    }
    double sum = 0.0;
    for (double w : weights) {
      if (w <= 0.0) throw InvalidArgument("gmm: weights must be positive");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw InvalidArgument("gmm: weights must sum to 1");
    for (double v : variances) {
      if (v <= 0.0) throw InvalidArgument("gmm: variances must be positive");
    }
    for (const Vec& m : means) {
      if (m.size() != dim()) throw InvalidArgument("gmm: mean dimensions disagree");
    }
  }

  /// The fixed toy prior used throughout: four clusters at (+-1, +-1),
  /// equal weights, s^2 = 0.01.
  static GmmPrior four_cluster_toy() {
    GmmPrior p;
    for (double sx : {1.0, -1.0}) {
      for (double sy : {1.0, -1.0}) {
        Vec m(2);
        m << sx, sy;
        p.means.push_back(m);
        p.weights.push_back(0.25);
        p.variances.push_back(0.01);
      }
    }
    return p;
  }

  /// Same four-cluster structure embedded in the first two coordinates of a
  /// d-dimensional space (remaining coordinates zero). Used for the
  /// masked-transform toy problems, where signals are longer than 2.
  static GmmPrior four_cluster_embedded(int dim) {
    if (dim < 2) throw InvalidArgument("four_cluster_embedded: dim must be >= 2");
    GmmPrior p = four_cluster_toy();
    for (Vec& m : p.means) {
      Vec e = Vec::Zero(dim);
      e.head(2) = m;
      m = e;
    }
    return p;
  }
};

/// i.i.d. draws: component by categorical(pi), then an isotropic Gaussian.
inline std::vector<Vec> gmm_sample(const GmmPrior& prior, Rng& rng, int n) {
  prior.validate();
  if (n < 1) throw InvalidArgument("gmm_sample: n must be >= 1");
  std::vector<Vec> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    double acc = 0.0;
    int k = prior.components() - 1;
    for (int j = 0; j < prior.components(); ++j) {
      acc += prior.weights[j];
      if (u < acc) {
        k = j;
        break;
      }
    }
    const double s = std::sqrt(prior.variances[k]);
    Vec x = prior.means[k];
    for (int d = 0; d < prior.dim(); ++d) x[d] += s * rng.normal();
    out.push_back(std::move(x));
  }
  return out;
}

namespace detail {

/// Log-density terms log(pi_k N(x; mu_k, (s_k^2 + sigma^2) I)).
inline std::vector<double> gmm_log_terms(const GmmPrior& prior, double sigma, const Vec& x) {
  const int d = prior.dim();
  std::vector<double> a(prior.components());
  for (int k = 0; k < prior.components(); ++k) {
    const double v = prior.variances[k] + sigma * sigma;
    a[k] = std::log(prior.weights[k]) - 0.5 * d * std::log(2.0 * std::numbers::pi * v) -
           (x - prior.means[k]).squaredNorm() / (2.0 * v);
  }
  return a;
}

}  // namespace detail

/// -log p_sigma(x), where p_sigma = p_data * N(0, sigma^2 I). Closed form: a
/// mixture with variances s_k^2 + sigma^2; evaluated with log-sum-exp and the
/// full normalization constants, so values are comparable across sigma.
inline double smoothed_energy(const GmmPrior& prior, double sigma, const Vec& x) {
  prior.validate();
  if (sigma < 0.0) throw InvalidArgument("smoothed_energy: sigma must be >= 0");
  if (x.size() != prior.dim()) throw InvalidArgument("smoothed_energy: dimension mismatch");
  const std::vector<double> a = detail::gmm_log_terms(prior, sigma, x);
  double m = a[0];
  for (double t : a) m = std::max(m, t);
  double s = 0.0;
  for (double t : a) s += std::exp(t - m);
  return -(m + std::log(s));
}

/// Gradient of smoothed_energy: sum_k w_k(x) (x - mu_k) / (s_k^2 + sigma^2)
/// with posterior responsibilities w_k(x). This is -grad log p_sigma.
inline Vec smoothed_score(const GmmPrior& prior, double sigma, const Vec& x) {
  prior.validate();
  if (sigma < 0.0) throw InvalidArgument("smoothed_score: sigma must be >= 0");
  if (x.size() != prior.dim()) throw InvalidArgument("smoothed_score: dimension mismatch");
  const std::vector<double> a = detail::gmm_log_terms(prior, sigma, x);
  double m = a[0];
  for (double t : a) m = std::max(m, t);
  double z = 0.0;
  for (double t : a) z += std::exp(t - m);
  Vec g = Vec::Zero(x.size());
  for (int k = 0; k < prior.components(); ++k) {
    const double w = std::exp(a[k] - m) / z;
    const double v = prior.variances[k] + sigma * sigma;
    g += (w / v) * (x - prior.means[k]);
  }
  return g;
}

/// Certified spectral-norm bound on the Hessian of -log p_sigma for
/// equal-variance mixtures:
///   hess = I/v - Cov_w(mu)/v^2,  v = s^2 + sigma^2,
/// and ||Cov_w(mu)|| <= D^2/4 with D the mean-set diameter, so
///   ||hess|| <= max(1/v, D^2/(4 v^2) - 1/v).
inline double smoothed_hessian_bound(const GmmPrior& prior, double sigma) {
  prior.validate();
  const double v0 = prior.variances[0];
  for (double v : prior.variances) {
    if (std::abs(v - v0) > 1e-12 * std::max(1.0, v0)) {
      throw InvalidArgument("smoothed_hessian_bound: requires equal component variances");
    }
  }
  const double v = v0 + sigma * sigma;
  double diam2 = 0.0;
  for (std::size_t i = 0; i < prior.means.size(); ++i) {
    for (std::size_t j = i + 1; j < prior.means.size(); ++j) {
      diam2 = std::max(diam2, (prior.means[i] - prior.means[j]).squaredNorm());
    }
  }
  return std::max(1.0 / v, diam2 / (4.0 * v * v) - 1.0 / v);
}

}  // namespace muse
