#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "fieldprune/core/errors.hpp"
#include "fieldprune/geometry/camera.hpp"

namespace fieldprune {

inline constexpr double kPi = 3.14159265358979323846;

inline int encoded_dim(int frequencies) { return 3 + 6 * frequencies; }

/// Sinusoidal features: (x, sin(2^k pi x), cos(2^k pi x)) for k = 0..L-1,
/// applied componentwise.
inline void encode_into(const Vec3& x, int frequencies, double* out) {
  out[0] = x[0];
  out[1] = x[1];
  out[2] = x[2];
  double scale = kPi;
  int o = 3;
  for (int k = 0; k < frequencies; ++k) {
    for (int c = 0; c < 3; ++c) out[o + c] = std::sin(scale * x[c]);
    for (int c = 0; c < 3; ++c) out[o + 3 + c] = std::cos(scale * x[c]);
    o += 6;
    scale *= 2.0;
  }
}

inline Eigen::VectorXd encode(const Vec3& x, int frequencies) {
  if (frequencies < 0) throw ConfigError("encode: negative frequency count");
  Eigen::VectorXd out(encoded_dim(frequencies));
  encode_into(x, frequencies, out.data());
  return out;
}

}  // namespace fieldprune
