#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "fieldprune/core/errors.hpp"
#include "fieldprune/field/mlp.hpp"
#include "fieldprune/geometry/camera.hpp"

namespace fieldprune {

enum class LossKind { L2, Charbonnier };

inline std::string loss_kind_name(LossKind k) {
  return k == LossKind::L2 ? "l2" : "charbonnier";
}
inline LossKind loss_kind_from_name(const std::string& s) {
  if (s == "l2") return LossKind::L2;
  if (s == "charbonnier") return LossKind::Charbonnier;
  throw ConfigError("unknown loss kind '" + s + "'");
}

struct RenderConfig {
  double t_near = 2.0;
  double t_far = 6.0;
  int n_samples = 64;
  Vec3 background = Vec3::Zero();
  bool stratified = false;  // midpoint rule when false

  void validate() const {
    if (!(t_near > 0) || !(t_far > t_near))
      throw ConfigError("render: need 0 < t_near < t_far");
    if (n_samples < 2) throw ConfigError("render: n_samples must be >= 2");
  }

  nlohmann::json to_json() const {
    return {{"t_near", t_near},
            {"t_far", t_far},
            {"n_samples", n_samples},
            {"background", {background.x(), background.y(), background.z()}},
            {"stratified", stratified}};
  }
  static RenderConfig from_json(const nlohmann::json& j) {
    RenderConfig c;
    c.t_near = j.value("t_near", c.t_near);
    c.t_far = j.value("t_far", c.t_far);
    c.n_samples = j.value("n_samples", c.n_samples);
    if (j.contains("background")) {
      auto b = j.at("background").get<std::vector<double>>();
      if (b.size() != 3) throw ConfigError("render: background must be rgb");
      c.background = Vec3(b[0], b[1], b[2]);
    }
    c.stratified = j.value("stratified", c.stratified);
    c.validate();
    return c;
  }
};

struct RenderedRay {
  Vec3 color = Vec3::Zero();
  double depth = 0;                 // expected termination depth
  double final_transmittance = 1;   // T_N
  Eigen::VectorXd weights;          // per-sample compositing weights
};

/// One sample per equal-width segment of [t_near, t_far]; midpoint when rng
/// is null, uniform jitter within the segment otherwise. deltas follow
/// delta_i = t_{i+1} - t_i with the final delta reaching t_far.
inline void sample_ray_ts(const RenderConfig& cfg, std::mt19937_64* rng,
                          Eigen::VectorXd& ts, Eigen::VectorXd& deltas) {
  const int n = cfg.n_samples;
  const double seg = (cfg.t_far - cfg.t_near) / n;
  ts.resize(n);
  deltas.resize(n);
  if (rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int i = 0; i < n; ++i) ts[i] = cfg.t_near + (i + uni(*rng)) * seg;
  } else {
    for (int i = 0; i < n; ++i) ts[i] = cfg.t_near + (i + 0.5) * seg;
  }
  for (int i = 0; i + 1 < n; ++i) deltas[i] = ts[i + 1] - ts[i];
  deltas[n - 1] = cfg.t_far - ts[n - 1];
}

struct CompositeCache {
  Eigen::VectorXd alpha;  // 1 - exp(-sigma * delta)
  Eigen::VectorXd trans;  // T_i before sample i
  Eigen::VectorXd ts, deltas;
};

/// Discrete quadrature of the transmittance integral. w_i = T_i * alpha_i
/// telescopes so sum(w) + T_N = 1 up to roundoff.
inline RenderedRay composite(const Eigen::MatrixXd& sigma,
                             const Eigen::MatrixXd& rgb,
                             const Eigen::VectorXd& ts,
                             const Eigen::VectorXd& deltas, const Vec3& background,
                             double t_far, CompositeCache* cache = nullptr) {
  const int n = static_cast<int>(ts.size());
  RenderedRay out;
  out.weights.resize(n);
  Eigen::VectorXd alpha(n), trans(n);
  double t_run = 1.0;
  Vec3 color = Vec3::Zero();
  double depth = 0.0;
  for (int i = 0; i < n; ++i) {
    const double att = std::exp(-sigma(0, i) * deltas[i]);
    alpha[i] = 1.0 - att;
    trans[i] = t_run;
    const double w = t_run * alpha[i];
    out.weights[i] = w;
    color += w * rgb.col(i);
    depth += w * ts[i];
    t_run *= att;
  }
  out.final_transmittance = t_run;
  out.color = color + t_run * background;
  out.depth = depth + t_run * t_far;
  if (cache) {
    cache->alpha = std::move(alpha);
    cache->trans = std::move(trans);
    cache->ts = ts;
    cache->deltas = deltas;
  }
  return out;
}

inline Eigen::Matrix3Xd ray_sample_points(const Ray& ray, const Eigen::VectorXd& ts) {
  Eigen::Matrix3Xd pts(3, ts.size());
  for (int i = 0; i < ts.size(); ++i)
    pts.col(i) = ray.origin + ts[i] * ray.direction;
  return pts;
}

/// Renders one ray through the field. Deterministic (midpoint samples)
/// unless cfg.stratified and an rng is supplied.
inline RenderedRay render_ray(const FieldParams& params, const Ray& ray,
                              const RenderConfig& cfg,
                              std::mt19937_64* rng = nullptr) {
  cfg.validate();
  Eigen::VectorXd ts, deltas;
  sample_ray_ts(cfg, cfg.stratified ? rng : nullptr, ts, deltas);
  FieldEvaluator eval(params);
  eval.forward(ray_sample_points(ray, ts), ray.direction);
  return composite(eval.sigma(), eval.rgb(), ts, deltas, cfg.background, cfg.t_far);
}

inline double loss_per_ray(const Vec3& rendered, const Vec3& target, LossKind kind,
                           double charbonnier_eps = 1e-3) {
  const Vec3 r = rendered - target;
  if (kind == LossKind::L2) return r.squaredNorm();
  double sum = 0;
  for (int c = 0; c < 3; ++c)
    sum += std::sqrt(r[c] * r[c] + charbonnier_eps * charbonnier_eps);
  return sum;
}

inline Vec3 loss_per_ray_grad(const Vec3& rendered, const Vec3& target,
                              LossKind kind, double charbonnier_eps = 1e-3) {
  const Vec3 r = rendered - target;
  if (kind == LossKind::L2) return 2.0 * r;
  Vec3 g;
  for (int c = 0; c < 3; ++c)
    g[c] = r[c] / std::sqrt(r[c] * r[c] + charbonnier_eps * charbonnier_eps);
  return g;
}

}  // namespace fieldprune
