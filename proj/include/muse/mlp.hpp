#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "muse/errors.hpp"
#include "muse/signal.hpp"
#include "muse/spectral.hpp"

namespace muse {

enum class Activation : std::uint8_t { None = 0, Relu = 1 };

struct DenseLayer {
  Mat weight;  // out x in
  Vec bias;    // out
  Activation activation = Activation::None;
};

/// Fully-connected network: a stack of affine+activation layers, plus an
/// optional final linear map to a single real (the scalar head) used by
/// potential-style networks.
struct Mlp {
  std::vector<DenseLayer> layers;
  std::optional<DenseLayer> scalar_head;

  int input_dim() const {
    return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols());
  }
  int stack_output_dim() const {
    return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows());
  }
  int output_dim() const { return scalar_head ? 1 : stack_output_dim(); }

  void validate() const {
    if (layers.empty()) throw InvalidArgument("mlp: needs at least one layer");
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const DenseLayer& l = layers[k];
      if (l.weight.rows() != l.bias.size()) {
        throw InvalidArgument("mlp: bias length does not match layer rows");
      }
      if (k > 0 && layers[k - 1].weight.rows() != l.weight.cols()) {
        throw InvalidArgument("mlp: consecutive layer dimensions do not chain");
      }
    }
    if (scalar_head) {
      if (scalar_head->weight.rows() != 1 || scalar_head->bias.size() != 1) {
        throw InvalidArgument("mlp: scalar head must map to a single real");
      }
      if (scalar_head->weight.cols() != stack_output_dim()) {
        throw InvalidArgument("mlp: scalar head input does not chain");
      }
    }
  }
};

/// He-style init: weights N(0, 2/fan_in), zero biases. ReLU on all stack
/// layers except the last; the scalar head is linear.
inline Mlp make_mlp(const std::vector<int>& dims, bool with_scalar_head, Rng& rng) {
  if (dims.size() < 2) throw InvalidArgument("make_mlp: need at least input and output dims");
  Mlp p;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    DenseLayer l;
    const int in = dims[k], out = dims[k + 1];
    if (in < 1 || out < 1) throw InvalidArgument("make_mlp: dims must be >= 1");
    const double std_dev = std::sqrt(2.0 / in);
    l.weight = std_dev * gaussian_mat(rng, out, in);
    l.bias = Vec::Zero(out);
    l.activation = (k + 2 < dims.size()) ? Activation::Relu : Activation::None;
    p.layers.push_back(std::move(l));
  }
  if (with_scalar_head) {
    DenseLayer h;
    const int in = dims.back();
    h.weight = std::sqrt(2.0 / in) * gaussian_mat(rng, 1, in);
    h.bias = Vec::Zero(1);
    h.activation = Activation::None;
    p.scalar_head = std::move(h);
  }
  return p;
}

/// Everything recorded during a forward pass that the reverse pass needs.
/// Columns are batch samples. ReLU masks use the left derivative at zero
/// (mask = 1 iff pre-activation > 0).
struct ForwardCache {
  const Mlp* source = nullptr;
  std::vector<Mat> layer_inputs;  // u_{k-1} for layer k
  std::vector<Arr> masks;         // empty Arr for linear layers
  Mat stack_output;               // output of the layer stack (pre-head)
  int batch = 0;

  void check_matches(const Mlp& p) const {
    if (source != &p || layer_inputs.size() != p.layers.size()) {
      throw InvalidState("forward cache does not match these parameters");
    }
  }
};

/// Batched forward pass. Returns the head output (1 x B) when a scalar head
/// is present, otherwise the stack output (out x B).
inline Mat mlp_forward_batch(const Mlp& p, const Mat& x, ForwardCache* cache = nullptr) {
  p.validate();
  if (x.rows() != p.input_dim()) {
    throw InvalidArgument("mlp_forward: input dimension mismatch");
  }
  if (cache) {
    cache->source = &p;
    cache->layer_inputs.clear();
    cache->masks.clear();
    cache->batch = static_cast<int>(x.cols());
  }
  Mat u = x;
  for (const DenseLayer& l : p.layers) {
    if (cache) cache->layer_inputs.push_back(u);
    Mat a = (l.weight * u).colwise() + l.bias;
    if (l.activation == Activation::Relu) {
      Arr mask = (a.array() > 0.0).cast<double>();
      u = (a.array() * mask).matrix();
      if (cache) cache->masks.push_back(std::move(mask));
    } else {
      u = std::move(a);
      if (cache) cache->masks.push_back(Arr());
    }
  }
  if (cache) cache->stack_output = u;
  if (p.scalar_head) {
    return (p.scalar_head->weight * u).colwise() + p.scalar_head->bias;
  }
  return u;
}

/// Parameter-shaped gradient accumulator.
struct MlpGrads {
  std::vector<Mat> weight;
  std::vector<Vec> bias;
  Mat head_weight;  // 0x0 when the net has no scalar head
  Vec head_bias;

  static MlpGrads zeros_like(const Mlp& p) {
    MlpGrads g;
    for (const DenseLayer& l : p.layers) {
      g.weight.push_back(Mat::Zero(l.weight.rows(), l.weight.cols()));
      g.bias.push_back(Vec::Zero(l.bias.size()));
    }
    if (p.scalar_head) {
      g.head_weight = Mat::Zero(1, p.scalar_head->weight.cols());
      g.head_bias = Vec::Zero(1);
    }
    return g;
  }

  bool all_finite() const {
    for (const Mat& w : weight)
      if (!w.allFinite()) return false;
    for (const Vec& b : bias)
      if (!b.allFinite()) return false;
    if (head_weight.size() > 0 && !head_weight.allFinite()) return false;
    if (head_bias.size() > 0 && !head_bias.allFinite()) return false;
    return true;
  }
};

/// Batched vector-Jacobian product. Given v (one column per sample, rows =
/// network output dim), returns J^T v w.r.t. the input and, when `grads` is
/// non-null, accumulates the exact reverse-mode parameter gradients of
/// sum_b <y_b, v_b>. ReLU masks come frozen from the cache.
inline Mat mlp_vjp_batch(const Mlp& p, const ForwardCache& cache, const Mat& v,
                         MlpGrads* grads = nullptr) {
  cache.check_matches(p);
  if (v.rows() != p.output_dim() || v.cols() != cache.batch) {
    throw InvalidArgument("mlp_vjp: v shape mismatch");
  }
  Mat g;
  if (p.scalar_head) {
    if (grads) {
      grads->head_weight += v * cache.stack_output.transpose();
      grads->head_bias[0] += v.sum();
    }
    g = p.scalar_head->weight.transpose() * v;
  } else {
    g = v;
  }
  for (int k = static_cast<int>(p.layers.size()) - 1; k >= 0; --k) {
    const DenseLayer& l = p.layers[k];
    Mat ga = (l.activation == Activation::Relu) ? Mat((g.array() * cache.masks[k]).matrix())
                                                : std::move(g);
    if (grads) {
      grads->weight[k] += ga * cache.layer_inputs[k].transpose();
      grads->bias[k] += ga.rowwise().sum();
    }
    g = l.weight.transpose() * ga;
  }
  return g;
}

// Single-sample wrappers over the batched kernels.

inline std::pair<Signal, ForwardCache> forward(const Mlp& p, const Signal& x) {
  ForwardCache cache;
  Mat y = mlp_forward_batch(p, x.data, &cache);
  return {Signal::from_flat(Vec(y.col(0))), std::move(cache)};
}

inline std::pair<Vec, MlpGrads> vjp(const Mlp& p, const ForwardCache& cache, const Vec& v) {
  MlpGrads grads = MlpGrads::zeros_like(p);
  Mat gx = mlp_vjp_batch(p, cache, v, &grads);
  return {Vec(gx.col(0)), std::move(grads)};
}

/// Divides every weight matrix (scalar head included) by its estimated top
/// singular value; all-zero matrices are left unchanged. Idempotent up to
/// power-iteration tolerance.
inline Mlp spectral_normalize(Mlp p, int iters, Rng& rng) {
  if (iters < 1) throw InvalidArgument("spectral_normalize: iters must be >= 1");
  auto normalize = [&](Mat& w) {
    const double s = spectral_norm_matrix(w, iters, rng);
    if (s > 0.0) w /= s;
  };
  for (DenseLayer& l : p.layers) normalize(l.weight);
  if (p.scalar_head) normalize(p.scalar_head->weight);
  return p;
}

}  // namespace muse
