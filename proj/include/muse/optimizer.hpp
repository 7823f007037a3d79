#pragma once

#include <cmath>

#include "muse/errors.hpp"
#include "muse/mlp.hpp"

namespace muse {

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment optimizer state; accumulator shapes mirror the parameters.
struct OptimizerState {
  OptimizerConfig config;
  long step = 0;
  MlpGrads m;  // first moments
  MlpGrads v;  // second moments
};

inline OptimizerState make_optimizer(const Mlp& params, OptimizerConfig config = {}) {
  OptimizerState st;
  st.config = config;
  st.m = MlpGrads::zeros_like(params);
  st.v = MlpGrads::zeros_like(params);
  return st;
}

namespace detail {

template <class T>
void adam_update(T& param, T& m, T& v, const T& g, const OptimizerConfig& c,
                 double bc1, double bc2) {
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = (c.beta2 * v.array() + (1.0 - c.beta2) * g.array().square()).matrix();
  param.array() -= c.learning_rate * (m.array() / bc1) /
                   ((v.array() / bc2).sqrt() + c.epsilon);
}

}  // namespace detail

/// One bias-corrected adaptive-moment step; the first step moves each
/// coordinate by about learning_rate * sign(gradient).
inline void optimizer_step(OptimizerState& st, Mlp& params, const MlpGrads& g) {
  if (!g.all_finite()) throw TrainingDiverged("optimizer_step: non-finite gradient");
  ++st.step;
  const double bc1 = 1.0 - std::pow(st.config.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(st.config.beta2, static_cast<double>(st.step));
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    detail::adam_update(params.layers[k].weight, st.m.weight[k], st.v.weight[k],
                        g.weight[k], st.config, bc1, bc2);
    detail::adam_update(params.layers[k].bias, st.m.bias[k], st.v.bias[k], g.bias[k],
                        st.config, bc1, bc2);
  }
  if (params.scalar_head) {
    detail::adam_update(params.scalar_head->weight, st.m.head_weight, st.v.head_weight,
                        g.head_weight, st.config, bc1, bc2);
    detail::adam_update(params.scalar_head->bias, st.m.head_bias, st.v.head_bias,
                        g.head_bias, st.config, bc1, bc2);
  }
}

}  // namespace muse
