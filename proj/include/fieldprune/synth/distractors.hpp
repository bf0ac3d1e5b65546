#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "fieldprune/core/errors.hpp"
#include "fieldprune/core/image.hpp"
#include "fieldprune/core/rng.hpp"

namespace fieldprune {

/// View-inconsistent content sprayed onto individual views: opaque shapes of
/// random saturated color at random positions, with exact masks.
struct DistractorSpec {
  double per_view_probability = 0.5;
  int count_min = 1;
  int count_max = 2;
  enum class Shape { Disk, Rectangle };
  Shape shape = Shape::Disk;
  double size_min_frac = 0.10;  // of the image diagonal
  double size_max_frac = 0.16;
  std::uint64_t seed = 0;

  void validate() const {
    if (per_view_probability < 0 || per_view_probability > 1)
      throw ConfigError("distractors: probability outside [0,1]");
    if (count_min < 0 || count_max < count_min)
      throw ConfigError("distractors: bad count range");
    if (size_min_frac <= 0 || size_max_frac < size_min_frac || size_max_frac > 1)
      throw ConfigError("distractors: bad size range");
  }
};

struct Contamination {
  Image3d image;
  Image8 mask;  // 255 exactly on composited pixels
};

namespace detail {

inline Vec3 saturated_color(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double h = uni(rng) * 6.0;
  const int i = static_cast<int>(h) % 6;
  const double f = h - std::floor(h);
  switch (i) {
    case 0: return {1, f, 0};
    case 1: return {1 - f, 1, 0};
    case 2: return {0, 1, f};
    case 3: return {0, 1 - f, 1};
    case 4: return {f, 0, 1};
    default: return {1, 0, 1 - f};
  }
}

inline void stamp_disk(Contamination& out, double cx, double cy, double radius,
                       const Vec3& color) {
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius - 1)));
  const int x1 = std::min(out.image.width() - 1,
                          static_cast<int>(std::ceil(cx + radius + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius - 1)));
  const int y1 = std::min(out.image.height() - 1,
                          static_cast<int>(std::ceil(cy + radius + 1)));
  const double r2 = radius * radius;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - cx, dy = y - cy;
      if (dx * dx + dy * dy <= r2) {
        for (int c = 0; c < 3; ++c) out.image.at(x, y, c) = color[c];
        out.mask.at(x, y) = 255;
      }
    }
}

inline void stamp_rect(Contamination& out, double cx, double cy, double half_w,
                       double half_h, const Vec3& color) {
  const int x0 = std::max(0, static_cast<int>(std::ceil(cx - half_w)));
  const int x1 = std::min(out.image.width() - 1,
                          static_cast<int>(std::floor(cx + half_w)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(cy - half_h)));
  const int y1 = std::min(out.image.height() - 1,
                          static_cast<int>(std::floor(cy + half_h)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      for (int c = 0; c < 3; ++c) out.image.at(x, y, c) = color[c];
      out.mask.at(x, y) = 255;
    }
}

}  // namespace detail

/// Deterministic in rng_seed: the same seed yields bit-identical output.
inline Contamination inject_distractors(const Image3d& image,
                                        const DistractorSpec& spec,
                                        std::uint64_t rng_seed) {
  if (image.empty()) throw ConfigError("inject_distractors: empty image");
  spec.validate();
  Contamination out{image, Image8(image.width(), image.height(), 0)};
  auto rng = make_rng(rng_seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  if (uni(rng) >= spec.per_view_probability) return out;

  std::uniform_int_distribution<int> count_dist(spec.count_min, spec.count_max);
  const int count = count_dist(rng);
  const double diag = std::hypot(image.width(), image.height());
  for (int k = 0; k < count; ++k) {
    const double cx = uni(rng) * image.width();
    const double cy = uni(rng) * image.height();
    const double frac =
        spec.size_min_frac + uni(rng) * (spec.size_max_frac - spec.size_min_frac);
    const Vec3 color = detail::saturated_color(rng);
    if (spec.shape == DistractorSpec::Shape::Disk) {
      detail::stamp_disk(out, cx, cy, 0.5 * frac * diag, color);
    } else {
      const double aspect = 0.5 + uni(rng);
      const double half_w = 0.5 * frac * diag;
      detail::stamp_rect(out, cx, cy, half_w, half_w * aspect, color);
    }
  }
  return out;
}

inline nlohmann::json distractor_spec_to_json(const DistractorSpec& s) {
  return {{"per_view_probability", s.per_view_probability},
          {"count_min", s.count_min},
          {"count_max", s.count_max},
          {"shape", s.shape == DistractorSpec::Shape::Disk ? "disk" : "rectangle"},
          {"size_min_frac", s.size_min_frac},
          {"size_max_frac", s.size_max_frac},
          {"seed", s.seed}};
}

inline DistractorSpec distractor_spec_from_json(const nlohmann::json& j) {
  DistractorSpec s;
  s.per_view_probability = j.value("per_view_probability", s.per_view_probability);
  s.count_min = j.value("count_min", s.count_min);
  s.count_max = j.value("count_max", s.count_max);
  const std::string shape = j.value("shape", "disk");
  if (shape == "disk")
    s.shape = DistractorSpec::Shape::Disk;
  else if (shape == "rectangle")
    s.shape = DistractorSpec::Shape::Rectangle;
  else
    throw ConfigError("distractors: unknown shape '" + shape + "'");
  s.size_min_frac = j.value("size_min_frac", s.size_min_frac);
  s.size_max_frac = j.value("size_max_frac", s.size_max_frac);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

}  // namespace fieldprune
