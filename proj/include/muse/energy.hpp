#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "muse/errors.hpp"
#include "muse/mlp.hpp"

namespace muse {

/// Wire/tag values are fixed by the checkpoint format; do not reorder.
enum class ModelVariant : std::uint8_t {
  E1 = 0,      // E(x) = 1/2 ||x - psi(x)||^2
  E2 = 1,      // E(x) = phi(x)
  E3 = 2,      // E(x) = 1/2 ||x||^2 - phi(x)
  ScoreU = 3,  // unconstrained direct score network
  ScoreC = 4,  // contractive (spectrally normalized) score network
};

inline bool is_energy_variant(ModelVariant v) {
  return v == ModelVariant::E1 || v == ModelVariant::E2 || v == ModelVariant::E3;
}

inline const char* variant_name(ModelVariant v) {
  switch (v) {
    case ModelVariant::E1: return "e1";
    case ModelVariant::E2: return "e2";
    case ModelVariant::E3: return "e3";
    case ModelVariant::ScoreU: return "score-u";
    case ModelVariant::ScoreC: return "score-c";
  }
  return "?";
}

inline ModelVariant variant_from_name(const std::string& s) {
  if (s == "e1") return ModelVariant::E1;
  if (s == "e2") return ModelVariant::E2;
  if (s == "e3") return ModelVariant::E3;
  if (s == "score-u") return ModelVariant::ScoreU;
  if (s == "score-c") return ModelVariant::ScoreC;
  throw InvalidArgument("unknown model variant: " + s);
}

/// Scalar energy network. The stored energy is the raw E(x); the 1/sigma^2
/// factor belongs to the MAP objective, not the model.
struct EnergyModel {
  ModelVariant variant = ModelVariant::E1;
  Mlp net;
  double sigma = 1.0;  // noise scale the model was (or will be) trained at

  void validate() const {
    net.validate();
    if (sigma <= 0.0) throw InvalidArgument("energy model: sigma must be > 0");
    if (!is_energy_variant(variant)) {
      throw InvalidArgument("energy model: variant must be one of e1/e2/e3");
    }
    if (variant == ModelVariant::E1) {
      if (net.scalar_head) throw InvalidArgument("e1: net must not have a scalar head");
      if (net.input_dim() != net.stack_output_dim()) {
        throw InvalidArgument("e1: net must map x to an x-shaped residual");
      }
    } else {
      if (!net.scalar_head) throw InvalidArgument("e2/e3: net needs a scalar head");
    }
  }

  int dim() const { return net.input_dim(); }
};

/// Direct score network baseline: no energy exists, the field is just the
/// network output.
struct ScoreBaseline {
  ModelVariant variant = ModelVariant::ScoreU;
  Mlp net;
  double sigma = 1.0;

  void validate() const {
    net.validate();
    if (sigma <= 0.0) throw InvalidArgument("score baseline: sigma must be > 0");
    if (variant != ModelVariant::ScoreU && variant != ModelVariant::ScoreC) {
      throw InvalidArgument("score baseline: variant must be score-u or score-c");
    }
    if (net.scalar_head) throw InvalidArgument("score baseline: no scalar head allowed");
    if (net.input_dim() != net.stack_output_dim()) {
      throw InvalidArgument("score baseline: net must be dimension-preserving");
    }
  }

  int dim() const { return net.input_dim(); }
};

namespace detail {

/// J_stack^T v through the recorded masks, layer by layer from the top.
/// When `masked_out` is given it receives the post-mask intermediates
/// (needed for backprop through the score itself).
inline Mat mirror_transpose_apply(const Mlp& p, const ForwardCache& cache, Mat v,
                                  std::vector<Mat>* masked_out = nullptr) {
  if (masked_out) masked_out->resize(p.layers.size());
  for (int k = static_cast<int>(p.layers.size()) - 1; k >= 0; --k) {
    const DenseLayer& l = p.layers[k];
    if (l.activation == Activation::Relu) v = (v.array() * cache.masks[k]).matrix();
    if (masked_out) (*masked_out)[k] = v;
    v = l.weight.transpose() * v;
  }
  return v;
}

}  // namespace detail

/// Intermediates of a batched score evaluation, kept so DSM training can
/// backpropagate through the score computation.
struct ScoreCache {
  ForwardCache fwd;
  std::vector<Mat> mirror_masked;  // post-mask mirror values, one per layer
  Mat residual;                    // E1 only: r = x - psi(x)
  Mat score;
};

/// Energy of the model at x (columns of `x` are independent samples for the
/// batched variant below).
inline double energy_eval(const EnergyModel& m, const Vec& x) {
  m.validate();
  if (x.size() != m.dim()) throw InvalidArgument("energy_eval: dimension mismatch");
  switch (m.variant) {
    case ModelVariant::E1: {
      const Mat y = mlp_forward_batch(m.net, x);
      return 0.5 * (x - y.col(0)).squaredNorm();
    }
    case ModelVariant::E2: {
      const Mat y = mlp_forward_batch(m.net, x);
      return y(0, 0);
    }
    case ModelVariant::E3: {
      const Mat y = mlp_forward_batch(m.net, x);
      return 0.5 * x.squaredNorm() - y(0, 0);
    }
    default:
      throw InvalidArgument("energy_eval: not an energy variant");
  }
}

/// Exact gradient of energy_eval, realized as forward pass + mirror pass:
///   e1: H(x) = r - J_psi(x)^T r with r = x - psi(x)
///   e2: H(x) = grad phi(x)
///   e3: H(x) = x - grad phi(x)
inline Mat score_eval_batch(const EnergyModel& m, const Mat& x, ScoreCache* cache = nullptr) {
  m.validate();
  if (x.rows() != m.dim()) throw InvalidArgument("score_eval: dimension mismatch");
  ScoreCache local;
  ScoreCache& c = cache ? *cache : local;
  std::vector<Mat>* masked = cache ? &c.mirror_masked : nullptr;
  const int batch = static_cast<int>(x.cols());

  if (m.variant == ModelVariant::E1) {
    const Mat psi = mlp_forward_batch(m.net, x, &c.fwd);
    c.residual = x - psi;
    c.score = c.residual - detail::mirror_transpose_apply(m.net, c.fwd, c.residual, masked);
  } else {
    mlp_forward_batch(m.net, x, &c.fwd);  // only the masks are needed
    const Mat seed = m.net.scalar_head->weight.transpose().replicate(1, batch);
    Mat g = detail::mirror_transpose_apply(m.net, c.fwd, seed, masked);
    c.score = (m.variant == ModelVariant::E2) ? g : Mat(x - g);
  }
  return c.score;
}

inline Vec score_eval(const EnergyModel& m, const Vec& x) {
  return Vec(score_eval_batch(m, x).col(0));
}

/// Plain forward pass of a baseline score network; no gradient structure.
inline Mat score_eval_baseline_batch(const ScoreBaseline& m, const Mat& x,
                                     ForwardCache* cache = nullptr) {
  m.validate();
  if (x.rows() != m.dim()) throw InvalidArgument("score_eval_baseline: dimension mismatch");
  return mlp_forward_batch(m.net, x, cache);
}

inline Vec score_eval_baseline(const ScoreBaseline& m, const Vec& x) {
  return Vec(score_eval_baseline_batch(m, x).col(0));
}

using FieldFn = std::function<Vec(const Vec&)>;

/// Composite-midpoint quadrature of the field along a polyline; steps are
/// split across segments proportionally to length. For conservative fields
/// this equals the potential difference between the endpoints up to
/// O(steps^-2) quadrature error.
inline double line_integral(const FieldFn& field, const std::vector<Vec>& path, int steps) {
  if (path.size() < 2) throw InvalidArgument("line_integral: path needs at least two points");
  if (steps < 10) throw InvalidArgument("line_integral: steps must be >= 10");
  double total_len = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) total_len += (path[i + 1] - path[i]).norm();
  if (total_len == 0.0) return 0.0;

  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec& a = path[i];
    const Vec d = path[i + 1] - a;
    const double len = d.norm();
    if (len == 0.0) continue;
    const int n = std::max(1, static_cast<int>(std::lround(steps * len / total_len)));
    for (int j = 0; j < n; ++j) {
      const double t = (j + 0.5) / n;
      acc += field(a + t * d).dot(d) / n;
    }
  }
  return acc;
}

/// Line integral of the model's score field; for an energy model this
/// recovers energy differences (fundamental theorem of line integrals).
inline double line_integral_energy(const EnergyModel& m, const std::vector<Vec>& path,
                                   int steps) {
  return line_integral([&](const Vec& z) { return score_eval(m, z); }, path, steps);
}

enum class LipschitzMethod { PairwiseEmpirical, LayerProduct };

/// Max finite-difference ratio over all pairs of the given points; a lower
/// bound on the true Lipschitz constant of the field.
inline double lipschitz_pairwise(const FieldFn& field, const std::vector<Vec>& points) {
  if (points.size() < 2) throw InvalidArgument("lipschitz_pairwise: need >= 2 points");
  std::vector<Vec> values;
  values.reserve(points.size());
  for (const Vec& p : points) values.push_back(field(p));
  double best = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double dx = (points[i] - points[j]).norm();
      if (dx < 1e-12) continue;
      best = std::max(best, (values[i] - values[j]).norm() / dx);
    }
  }
  return best;
}

/// Product of per-layer top singular values of the network's unrolled
/// linear maps (scalar head included when present).
inline double layer_norm_product(const Mlp& p, int iters, Rng& rng) {
  double prod = 1.0;
  for (const DenseLayer& l : p.layers) prod *= spectral_norm_matrix(l.weight, iters, rng);
  if (p.scalar_head) prod *= spectral_norm_matrix(p.scalar_head->weight, iters, rng);
  return prod;
}

namespace detail {

inline std::vector<Vec> standard_normal_points(Rng& rng, int dim, int n) {
  std::vector<Vec> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) pts.push_back(gaussian_vec(rng, dim));
  return pts;
}

}  // namespace detail

/// Score-field Lipschitz estimate. The pairwise method samples standard
/// normal points and is a lower bound (the CLIP-style approximate constant);
/// callers with domain knowledge should prefer lipschitz_pairwise on points
/// from their own distribution. The layer-product method is an upper bound
/// built from per-layer spectral norms; the mirror structure contributes its
/// own factor: (1 + B)^2 for e1, B for e2, 1 + B for e3, with B the product
/// over the score path.
inline double lipschitz_estimate(const EnergyModel& m, LipschitzMethod method, Rng& rng,
                                 int samples) {
  m.validate();
  if (method == LipschitzMethod::PairwiseEmpirical) {
    if (samples < 2) throw InvalidArgument("lipschitz_estimate: samples must be >= 2");
    return lipschitz_pairwise([&](const Vec& x) { return score_eval(m, x); },
                              detail::standard_normal_points(rng, m.dim(), samples));
  }
  const double b = layer_norm_product(m.net, 200, rng);
  switch (m.variant) {
    case ModelVariant::E1: return (1.0 + b) * (1.0 + b);
    case ModelVariant::E2: return b;
    default: return 1.0 + b;  // e3
  }
}

inline double lipschitz_estimate(const ScoreBaseline& m, LipschitzMethod method, Rng& rng,
                                 int samples) {
  m.validate();
  if (method == LipschitzMethod::PairwiseEmpirical) {
    if (samples < 2) throw InvalidArgument("lipschitz_estimate: samples must be >= 2");
    return lipschitz_pairwise([&](const Vec& x) { return score_eval_baseline(m, x); },
                              detail::standard_normal_points(rng, m.dim(), samples));
  }
  return layer_norm_product(m.net, 200, rng);
}

/// True when every layer of the net has spectral norm <= 1 + tol.
inline bool is_contractive(const Mlp& p, double tol, Rng& rng) {
  for (const DenseLayer& l : p.layers) {
    if (spectral_norm_matrix(l.weight, 300, rng) > 1.0 + tol) return false;
  }
  if (p.scalar_head && spectral_norm_matrix(p.scalar_head->weight, 300, rng) > 1.0 + tol) {
    return false;
  }
  return true;
}

}  // namespace muse
