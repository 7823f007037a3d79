#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "muse/errors.hpp"
#include "muse/rng.hpp"

namespace muse {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Arr = Eigen::ArrayXXd;

/// Dense real signal with shape metadata. Complex-valued signals are stored
/// as two interleaved real channels (re, im, re, im, ...) in row-major
/// element order, so the plain real dot product of two interleaved vectors
/// equals Re(u^H v).
struct Signal {
  Vec data;                 // flat, length = channels * prod(shape)
  std::vector<int> shape;   // all entries >= 1
  int channels = 1;         // 1 = real, 2 = complex interleaved

  int flat_size() const { return static_cast<int>(data.size()); }

  static int element_count(const std::vector<int>& shape) {
    int n = 1;
    for (int d : shape) n *= d;
    return n;
  }

  static Signal zeros(std::vector<int> shape, int channels = 1) {
    Signal s;
    s.shape = std::move(shape);
    s.channels = channels;
    s.validate_meta();
    s.data = Vec::Zero(static_cast<Eigen::Index>(channels) * element_count(s.shape));
    return s;
  }

  static Signal from_vec(Vec v, std::vector<int> shape, int channels = 1) {
    Signal s;
    s.data = std::move(v);
    s.shape = std::move(shape);
    s.channels = channels;
    s.validate();
    return s;
  }

  /// Flat real vector wrapped as a 1-D single-channel signal.
  static Signal from_flat(Vec v) {
    Signal s;
    s.shape = {static_cast<int>(v.size())};
    s.channels = 1;
    s.data = std::move(v);
    return s;
  }

  void validate_meta() const {
    if (shape.empty()) throw InvalidArgument("signal shape must be non-empty");
    for (int d : shape) {
      if (d < 1) throw InvalidArgument("signal dimensions must be >= 1");
    }
    if (channels != 1 && channels != 2) {
      throw InvalidArgument("signal channels must be 1 or 2");
    }
  }

  void validate() const {
    validate_meta();
    if (data.size() != static_cast<Eigen::Index>(channels) * element_count(shape)) {
      throw InvalidArgument("signal data length does not match shape metadata");
    }
  }

  bool all_finite() const { return data.allFinite(); }

  bool same_layout(const Signal& o) const {
    return channels == o.channels && shape == o.shape;
  }
};

/// i.i.d. standard-normal signal; advances the generator deterministically.
inline Signal gaussian_sample(Rng& rng, const std::vector<int>& shape, int channels = 1) {
  Signal s = Signal::zeros(shape, channels);
  for (Eigen::Index i = 0; i < s.data.size(); ++i) s.data[i] = rng.normal();
  return s;
}

inline Vec gaussian_vec(Rng& rng, int dim) {
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.normal();
  return v;
}

inline Mat gaussian_mat(Rng& rng, int rows, int cols) {
  Mat m(rows, cols);
  // Column-major fill order, fixed so streams are reproducible.
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = rng.normal();
  return m;
}

}  // namespace muse
