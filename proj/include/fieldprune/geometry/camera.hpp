#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fieldprune/core/errors.hpp"
#include "fieldprune/core/fs.hpp"

namespace fieldprune {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Pinhole camera with a world-to-camera rigid pose.
struct Camera {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;
  Mat3 rotation = Mat3::Identity();  // world-to-camera
  Vec3 translation = Vec3::Zero();
  int view_id = 0;

  Vec3 center() const { return -(rotation.transpose() * translation); }

  void validate() const {
    if (fx <= 0 || fy <= 0)
      throw ConfigError("camera " + std::to_string(view_id) +
                        ": focal lengths must be positive");
    if (width <= 0 || height <= 0)
      throw ConfigError("camera " + std::to_string(view_id) +
                        ": image size must be positive");
    if (cx < 0 || cx >= width || cy < 0 || cy >= height)
      throw ConfigError("camera " + std::to_string(view_id) +
                        ": principal point outside image");
    const double ortho =
        (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (ortho > 1e-9)
      throw ConfigError("camera " + std::to_string(view_id) +
                        ": rotation is not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > 1e-9)
      throw ConfigError("camera " + std::to_string(view_id) +
                        ": rotation determinant is not +1");
  }
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();  // unit norm
  int px = 0, py = 0;
  int view_id = 0;
};

/// Ray through the center of pixel (px, py); centers sit at half-integer
/// offsets so rendering and reprojection share one convention.
inline Ray ray_for_pixel(const Camera& cam, int px, int py) {
  if (px < 0 || px >= cam.width || py < 0 || py >= cam.height)
    throw ConfigError("pixel (" + std::to_string(px) + ", " + std::to_string(py) +
                      ") outside image of view " + std::to_string(cam.view_id));
  Vec3 d_cam((px + 0.5 - cam.cx) / cam.fx, (py + 0.5 - cam.cy) / cam.fy, 1.0);
  Ray ray;
  ray.origin = cam.center();
  ray.direction = (cam.rotation.transpose() * d_cam).normalized();
  ray.px = px;
  ray.py = py;
  ray.view_id = cam.view_id;
  return ray;
}

struct PixelProjection {
  double px_f = 0;  // continuous pixel coordinates; pixel centers at +0.5
  double py_f = 0;
  double depth = 0;  // camera-frame z
};

/// World point to continuous pixel coordinates; absent when behind the
/// camera or outside the image.
inline std::optional<PixelProjection> project_point(const Camera& cam,
                                                    const Vec3& point) {
  const Vec3 x_cam = cam.rotation * point + cam.translation;
  if (x_cam.z() <= 1e-9) return std::nullopt;
  PixelProjection p;
  p.px_f = cam.fx * x_cam.x() / x_cam.z() + cam.cx;
  p.py_f = cam.fy * x_cam.y() / x_cam.z() + cam.cy;
  p.depth = x_cam.z();
  if (p.px_f < 0 || p.px_f >= cam.width || p.py_f < 0 || p.py_f >= cam.height)
    return std::nullopt;
  return p;
}

/// Integer pixel owning the projected location, per the +0.5-center
/// convention (nearest integer of coordinate - 0.5).
inline void projection_to_pixel(const Camera& cam, const PixelProjection& p,
                                int& px, int& py) {
  px = static_cast<int>(std::lround(p.px_f - 0.5));
  py = static_cast<int>(std::lround(p.py_f - 0.5));
  px = std::clamp(px, 0, cam.width - 1);
  py = std::clamp(py, 0, cam.height - 1);
}

inline nlohmann::json camera_to_json(const Camera& cam) {
  nlohmann::json j;
  j["view_id"] = cam.view_id;
  j["fx"] = cam.fx;
  j["fy"] = cam.fy;
  j["cx"] = cam.cx;
  j["cy"] = cam.cy;
  j["width"] = cam.width;
  j["height"] = cam.height;
  std::vector<double> rot(9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot[r * 3 + c] = cam.rotation(r, c);
  j["rotation"] = rot;
  j["translation"] = std::vector<double>{cam.translation.x(),
                                         cam.translation.y(),
                                         cam.translation.z()};
  return j;
}

inline Camera camera_from_json(const nlohmann::json& j) {
  Camera cam;
  try {
    cam.view_id = j.at("view_id").get<int>();
    cam.fx = j.at("fx").get<double>();
    cam.fy = j.at("fy").get<double>();
    cam.cx = j.at("cx").get<double>();
    cam.cy = j.at("cy").get<double>();
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
    auto rot = j.at("rotation").get<std::vector<double>>();
    auto tr = j.at("translation").get<std::vector<double>>();
    if (rot.size() != 9 || tr.size() != 3)
      throw DataError("camera record: rotation must have 9 entries, translation 3");
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) cam.rotation(r, c) = rot[r * 3 + c];
    cam.translation = Vec3(tr[0], tr[1], tr[2]);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed camera record: ") + e.what());
  }
  cam.validate();
  return cam;
}

inline void save_cameras(const std::string& path,
                         const std::vector<Camera>& cameras) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& cam : cameras) arr.push_back(camera_to_json(cam));
  atomic_write_file(path, arr.dump(2) + "\n");
}

inline std::vector<Camera> load_cameras(const std::string& path) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed cameras file " + path + ": " + e.what());
  }
  if (!arr.is_array()) throw DataError("cameras file must hold an array: " + path);
  std::vector<Camera> cameras;
  cameras.reserve(arr.size());
  for (const auto& j : arr) cameras.push_back(camera_from_json(j));
  return cameras;
}

}  // namespace fieldprune
