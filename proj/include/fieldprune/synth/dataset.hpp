#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fieldprune/core/errors.hpp"
#include "fieldprune/core/fs.hpp"
#include "fieldprune/core/hash.hpp"
#include "fieldprune/core/image.hpp"
#include "fieldprune/geometry/camera.hpp"
#include "fieldprune/io/png_io.hpp"
#include "fieldprune/synth/distractors.hpp"
#include "fieldprune/synth/scene.hpp"

namespace fieldprune {

struct DatasetManifest {
  std::string root;
  int view_count = 0;
  int width = 0, height = 0;
  std::vector<std::string> views;     // contaminated training views
  std::vector<std::string> clean;     // matching clean renders
  std::vector<std::string> gt_masks;  // ground-truth distractor masks
  std::vector<std::string> test_views;  // held-out clean views
  std::string camera_file = "cameras.json";
  std::uint64_t seed = 0;
  std::string scene_hash;

  nlohmann::json to_json() const {
    return {{"view_count", view_count}, {"width", width},
            {"height", height},         {"views", views},
            {"clean", clean},           {"gt_masks", gt_masks},
            {"test_views", test_views}, {"cameras", camera_file},
            {"seed", seed},             {"scene_hash", scene_hash}};
  }

  static DatasetManifest from_json(const nlohmann::json& j,
                                   const std::string& root) {
    DatasetManifest m;
    m.root = root;
    try {
      m.view_count = j.at("view_count").get<int>();
      m.width = j.at("width").get<int>();
      m.height = j.at("height").get<int>();
      m.views = j.at("views").get<std::vector<std::string>>();
      m.clean = j.value("clean", std::vector<std::string>{});
      m.gt_masks = j.value("gt_masks", std::vector<std::string>{});
      m.test_views = j.value("test_views", std::vector<std::string>{});
      m.camera_file = j.value("cameras", std::string("cameras.json"));
      m.seed = j.value("seed", std::uint64_t{0});
      m.scene_hash = j.value("scene_hash", std::string{});
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed manifest: ") + e.what());
    }
    return m;
  }
};

/// In-memory dataset: contaminated training views plus optional ground truth.
struct Dataset {
  DatasetManifest manifest;
  std::vector<Camera> cameras;       // training cameras, index-aligned to views
  std::vector<Image3d> views;        // contaminated, values in [0,1]
  std::vector<Image3d> clean;        // optional (empty when absent)
  std::vector<Image8> gt_masks;      // optional
  std::vector<Camera> test_cameras;  // held-out split, may be empty
  std::vector<Image3d> test_views;

  int width() const { return manifest.width; }
  int height() const { return manifest.height; }
  int view_count() const { return static_cast<int>(views.size()); }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(manifest.width) * manifest.height *
           views.size();
  }
  bool has_gt() const { return !gt_masks.empty(); }
};

namespace detail {

inline std::string view_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "view_%04d.png", i);
  return buf;
}

}  // namespace detail

/// Renders every camera against the scene, contaminates training views per
/// the spec, and writes the on-disk layout:
///   root/{views,clean,gt_masks,test}/view_%04d.png + cameras.json + manifest.json
/// Test cameras are rendered clean and never contaminated.
inline DatasetManifest generate_dataset(const AnalyticScene& scene,
                                        const std::vector<Camera>& cameras,
                                        const std::vector<Camera>& test_cameras,
                                        const DistractorSpec& spec,
                                        const std::string& out_dir) {
  scene.validate();
  spec.validate();
  if (cameras.empty()) throw ConfigError("generate_dataset: no cameras");

  DatasetManifest m;
  m.root = out_dir;
  m.view_count = static_cast<int>(cameras.size());
  m.width = cameras.front().width;
  m.height = cameras.front().height;
  m.seed = spec.seed;
  m.scene_hash = hash_hex(fnv1a64(scene_to_json(scene).dump()));

  ensure_dir(fs::path(out_dir) / "views");
  ensure_dir(fs::path(out_dir) / "clean");
  ensure_dir(fs::path(out_dir) / "gt_masks");

  for (int i = 0; i < static_cast<int>(cameras.size()); ++i) {
    const Camera& cam = cameras[i];
    if (cam.width != m.width || cam.height != m.height)
      throw ConfigError("generate_dataset: cameras disagree on image size");
    CleanRender clean = render_clean(scene, cam);
    Contamination cont =
        inject_distractors(clean.image, spec, derive_seed(spec.seed, cam.view_id));
    const std::string name = detail::view_name(i);
    write_png_rgb((fs::path(out_dir) / "views" / name).string(), cont.image);
    write_png_rgb((fs::path(out_dir) / "clean" / name).string(), clean.image);
    write_png_gray8((fs::path(out_dir) / "gt_masks" / name).string(), cont.mask);
    m.views.push_back("views/" + name);
    m.clean.push_back("clean/" + name);
    m.gt_masks.push_back("gt_masks/" + name);
  }

  if (!test_cameras.empty()) ensure_dir(fs::path(out_dir) / "test");
  for (int i = 0; i < static_cast<int>(test_cameras.size()); ++i) {
    CleanRender clean = render_clean(scene, test_cameras[i]);
    const std::string name = detail::view_name(i);
    write_png_rgb((fs::path(out_dir) / "test" / name).string(), clean.image);
    m.test_views.push_back("test/" + name);
  }

  std::vector<Camera> all_cams = cameras;
  all_cams.insert(all_cams.end(), test_cameras.begin(), test_cameras.end());
  save_cameras((fs::path(out_dir) / m.camera_file).string(), all_cams);
  atomic_write_file((fs::path(out_dir) / "manifest.json").string(),
                    m.to_json().dump(2) + "\n");
  return m;
}

/// Loads a dataset directory. Clean views and masks are optional; anything
/// the manifest does list must exist and match the declared dimensions.
inline Dataset load_dataset(const std::string& root) {
  const fs::path root_path(root);
  const fs::path manifest_path = root_path / "manifest.json";
  if (!fs::exists(manifest_path))
    throw DataError("dataset manifest not found: " + manifest_path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }

  Dataset ds;
  ds.manifest = DatasetManifest::from_json(j, root);

  auto cams = load_cameras((root_path / ds.manifest.camera_file).string());
  if (cams.size() < ds.manifest.views.size())
    throw DataError("cameras.json lists fewer cameras than training views");

  auto check_dims = [&](int w, int h, const std::string& path) {
    if (w != ds.manifest.width || h != ds.manifest.height)
      throw DataError("image size mismatch against manifest: " + path);
  };

  for (std::size_t i = 0; i < ds.manifest.views.size(); ++i) {
    const std::string path = (root_path / ds.manifest.views[i]).string();
    if (!fs::exists(path)) throw DataError("missing view image: " + path);
    ds.views.push_back(read_png_rgb(path));
    check_dims(ds.views.back().width(), ds.views.back().height(), path);
    ds.cameras.push_back(cams[i]);
  }
  for (const auto& rel : ds.manifest.clean) {
    const std::string path = (root_path / rel).string();
    if (!fs::exists(path)) throw DataError("missing clean image: " + path);
    ds.clean.push_back(read_png_rgb(path));
    check_dims(ds.clean.back().width(), ds.clean.back().height(), path);
  }
  for (const auto& rel : ds.manifest.gt_masks) {
    const std::string path = (root_path / rel).string();
    if (!fs::exists(path)) throw DataError("missing mask image: " + path);
    ds.gt_masks.push_back(read_png_gray8(path));
    check_dims(ds.gt_masks.back().width(), ds.gt_masks.back().height(), path);
  }
  for (std::size_t i = 0; i < ds.manifest.test_views.size(); ++i) {
    const std::string path = (root_path / ds.manifest.test_views[i]).string();
    if (!fs::exists(path)) throw DataError("missing test image: " + path);
    ds.test_views.push_back(read_png_rgb(path));
    check_dims(ds.test_views.back().width(), ds.test_views.back().height(), path);
    const std::size_t ci = ds.manifest.views.size() + i;
    if (ci >= cams.size())
      throw DataError("cameras.json lists no camera for test view " + path);
    ds.test_cameras.push_back(cams[ci]);
  }
  return ds;
}

}  // namespace fieldprune
