#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "fieldprune/core/errors.hpp"
#include "fieldprune/core/image.hpp"
#include "fieldprune/geometry/camera.hpp"

namespace fieldprune {

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  Vec3 albedo = Vec3(0.5, 0.5, 0.5);
};

struct AxisBox {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Ones();
  Vec3 albedo = Vec3(0.5, 0.5, 0.5);
};

/// Analytically ray-traced scene; the exact-ground-truth stand-in for a
/// captured multi-view dataset.
struct AnalyticScene {
  std::vector<Sphere> spheres;
  std::vector<AxisBox> boxes;
  Vec3 background = Vec3(1, 1, 1);
  double ambient = 0.2;
  double near = 0.1;
  double far = 10.0;

  void validate() const {
    auto color_ok = [](const Vec3& c) {
      return c.minCoeff() >= 0.0 && c.maxCoeff() <= 1.0;
    };
    for (const auto& s : spheres) {
      if (s.radius <= 0) throw ConfigError("scene: sphere radius must be positive");
      if (!color_ok(s.albedo)) throw ConfigError("scene: sphere albedo outside [0,1]");
    }
    for (const auto& b : boxes) {
      if ((b.max - b.min).minCoeff() <= 0)
        throw ConfigError("scene: box min must be strictly below max");
      if (!color_ok(b.albedo)) throw ConfigError("scene: box albedo outside [0,1]");
    }
    if (!color_ok(background)) throw ConfigError("scene: background outside [0,1]");
    if (ambient <= 0 || ambient > 1) throw ConfigError("scene: ambient outside (0,1]");
    if (!(near > 0) || !(far > near)) throw ConfigError("scene: bad depth bounds");
  }
};

struct SceneHit {
  double t = 0;
  Vec3 normal = Vec3::UnitZ();
  Vec3 albedo = Vec3::Zero();
};

inline std::optional<double> intersect_sphere(const Sphere& s, const Vec3& o,
                                              const Vec3& d, double t_min) {
  const Vec3 oc = o - s.center;
  const double b = oc.dot(d);
  const double c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - c;
  if (disc < 0) return std::nullopt;
  const double sq = std::sqrt(disc);
  double t = -b - sq;
  if (t <= t_min) t = -b + sq;
  if (t <= t_min) return std::nullopt;
  return t;
}

inline std::optional<double> intersect_box(const AxisBox& box, const Vec3& o,
                                           const Vec3& d, double t_min,
                                           int* face_axis = nullptr,
                                           int* face_sign = nullptr) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  int axis0 = -1, sign0 = 0;
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < box.min[a] || o[a] > box.max[a]) return std::nullopt;
      continue;
    }
    double lo = (box.min[a] - o[a]) / d[a];
    double hi = (box.max[a] - o[a]) / d[a];
    int sign = -1;  // entering through min face
    if (lo > hi) {
      std::swap(lo, hi);
      sign = 1;
    }
    if (lo > t0) {
      t0 = lo;
      axis0 = a;
      sign0 = sign;
    }
    t1 = std::min(t1, hi);
    if (t0 > t1) return std::nullopt;
  }
  double t = t0;
  if (t <= t_min) {
    // inside the box; exit face
    t = t1;
    if (t <= t_min) return std::nullopt;
    axis0 = -1;
  }
  if (face_axis) *face_axis = axis0;
  if (face_sign) *face_sign = sign0;
  return t;
}

/// Nearest primitive hit along o + t*d with t > t_min, up to t_max.
inline std::optional<SceneHit> intersect_scene(const AnalyticScene& scene,
                                               const Vec3& o, const Vec3& d,
                                               double t_min, double t_max) {
  std::optional<SceneHit> best;
  for (const auto& s : scene.spheres) {
    auto t = intersect_sphere(s, o, d, t_min);
    if (t && *t < t_max && (!best || *t < best->t)) {
      SceneHit hit;
      hit.t = *t;
      hit.normal = ((o + *t * d) - s.center).normalized();
      hit.albedo = s.albedo;
      best = hit;
    }
  }
  for (const auto& b : scene.boxes) {
    int axis = -1, sign = 0;
    auto t = intersect_box(b, o, d, t_min, &axis, &sign);
    if (t && *t < t_max && (!best || *t < best->t)) {
      SceneHit hit;
      hit.t = *t;
      hit.normal = Vec3::Zero();
      if (axis >= 0)
        hit.normal[axis] = static_cast<double>(sign);
      else
        hit.normal = -d;  // hit from inside; face the ray
      hit.albedo = b.albedo;
      best = hit;
    }
  }
  return best;
}

struct CleanRender {
  Image3d image;
  Image1d depth;  // ray parameter t of the hit; far where no hit
};

/// Lambertian shading under one fixed directional light; exactly
/// view-consistent geometry with trivially known depth.
inline CleanRender render_clean(const AnalyticScene& scene, const Camera& cam) {
  scene.validate();
  cam.validate();
  const Vec3 light = Vec3(1, 1, 1).normalized();
  CleanRender out{Image3d(cam.width, cam.height), Image1d(cam.width, cam.height)};
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Ray ray = ray_for_pixel(cam, x, y);
      auto hit = intersect_scene(scene, ray.origin, ray.direction, 1e-9,
                                 std::numeric_limits<double>::infinity());
      Vec3 color = scene.background;
      double depth = scene.far;
      if (hit) {
        const double diffuse = std::max(0.0, hit->normal.dot(light));
        color = hit->albedo * (scene.ambient + (1.0 - scene.ambient) * diffuse);
        depth = hit->t;
      }
      for (int c = 0; c < 3; ++c) out.image.at(x, y, c) = color[c];
      out.depth.at(x, y) = depth;
    }
  }
  return out;
}

/// Visibility oracle: true when the segment from point to the camera center
/// is unobstructed (the point's own surface is excused via surface_eps).
inline bool point_visible(const AnalyticScene& scene, const Vec3& point,
                          const Camera& cam, double surface_eps = 1e-6) {
  const Vec3 origin = cam.center();
  const Vec3 to_point = point - origin;
  const double dist = to_point.norm();
  if (dist < surface_eps) return true;
  const Vec3 dir = to_point / dist;
  auto hit = intersect_scene(scene, origin, dir, 1e-9, dist - surface_eps);
  return !hit.has_value();
}

inline nlohmann::json scene_to_json(const AnalyticScene& scene) {
  nlohmann::json j;
  auto vec = [](const Vec3& v) { return std::vector<double>{v.x(), v.y(), v.z()}; };
  j["spheres"] = nlohmann::json::array();
  for (const auto& s : scene.spheres)
    j["spheres"].push_back({{"center", vec(s.center)},
                            {"radius", s.radius},
                            {"albedo", vec(s.albedo)}});
  j["boxes"] = nlohmann::json::array();
  for (const auto& b : scene.boxes)
    j["boxes"].push_back(
        {{"min", vec(b.min)}, {"max", vec(b.max)}, {"albedo", vec(b.albedo)}});
  j["background"] = vec(scene.background);
  j["ambient"] = scene.ambient;
  j["near"] = scene.near;
  j["far"] = scene.far;
  return j;
}

inline AnalyticScene scene_from_json(const nlohmann::json& j) {
  AnalyticScene scene;
  auto vec = [](const nlohmann::json& a) {
    auto v = a.get<std::vector<double>>();
    if (v.size() != 3) throw DataError("scene: expected 3-vector");
    return Vec3(v[0], v[1], v[2]);
  };
  try {
    for (const auto& s : j.value("spheres", nlohmann::json::array()))
      scene.spheres.push_back(
          {vec(s.at("center")), s.at("radius").get<double>(), vec(s.at("albedo"))});
    for (const auto& b : j.value("boxes", nlohmann::json::array()))
      scene.boxes.push_back({vec(b.at("min")), vec(b.at("max")), vec(b.at("albedo"))});
    if (j.contains("background")) scene.background = vec(j.at("background"));
    scene.ambient = j.value("ambient", scene.ambient);
    scene.near = j.value("near", scene.near);
    scene.far = j.value("far", scene.far);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed scene description: ") + e.what());
  }
  scene.validate();
  return scene;
}

}  // namespace fieldprune
