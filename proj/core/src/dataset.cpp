#include "lane3d/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace lane3d {

namespace {

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw_error(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorCode::IoError, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw_error(ErrorCode::IoError, path + ": " + e.what());
  }
  return j;
}

}  // namespace

int Dataset::prev_index(int idx) const {
  if (idx <= 0 || idx >= static_cast<int>(scenes.size())) return -1;
  const SceneData& cur = scenes[idx];
  const SceneData& prev = scenes[idx - 1];
  if (cur.frame_idx > 0 && prev.seq_id == cur.seq_id && prev.frame_idx == cur.frame_idx - 1) {
    return idx - 1;
  }
  return -1;
}

std::string scene_dir_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%04d", index);
  return buf;
}

void write_scene(const std::string& scene_dir, const SceneData& scene, const YSampling& ys) {
  fs::create_directories(scene_dir);

  nlohmann::json cam;
  to_json(cam, scene.rig);
  write_json_file(scene_dir + "/camera.json", cam);

  LaneFile lanes;
  lanes.ys = ys;
  for (const Lane3D& gt : scene.gts) {
    Proposal p;
    p.lane = gt;
    p.score = 1.0;
    lanes.lanes.push_back(std::move(p));
  }
  write_lane_file(scene_dir + "/lanes.json", lanes);

  write_feature_map(scene_dir + "/features.a3lf", scene.fm);

  if (scene.pose_to_prev.has_value()) {
    nlohmann::json pose;
    to_json(pose, *scene.pose_to_prev);
    write_json_file(scene_dir + "/pose.json", pose);
  }
}

void write_dataset(const std::string& dir, const Dataset& data) {
  fs::create_directories(dir);

  nlohmann::json manifest;
  manifest["schema_version"] = 1;
  manifest["y_samples"] = data.ys.values();
  manifest["num_categories"] = data.num_categories;
  auto scenes = nlohmann::json::array();
  for (size_t i = 0; i < data.scenes.size(); ++i) {
    const SceneData& scene = data.scenes[i];
    scenes.push_back({{"dir", scene_dir_name(static_cast<int>(i))},
                      {"seq_id", scene.seq_id},
                      {"frame_idx", scene.frame_idx},
                      {"has_pose", scene.pose_to_prev.has_value()}});
  }
  manifest["scenes"] = scenes;
  write_json_file(dir + "/manifest.json", manifest);

  for (size_t i = 0; i < data.scenes.size(); ++i) {
    write_scene(dir + "/" + scene_dir_name(static_cast<int>(i)), data.scenes[i], data.ys);
  }
}

Dataset load_dataset(const std::string& dir) {
  const nlohmann::json manifest = read_json_file(dir + "/manifest.json");
  Dataset data;
  data.ys = YSampling(manifest.at("y_samples").get<std::vector<double>>());
  data.num_categories = manifest.at("num_categories").get<int>();

  for (const auto& entry : manifest.at("scenes")) {
    const std::string scene_dir = dir + "/" + entry.at("dir").get<std::string>();
    SceneData scene;
    scene.seq_id = entry.at("seq_id").get<int>();
    scene.frame_idx = entry.at("frame_idx").get<int>();

    from_json(read_json_file(scene_dir + "/camera.json"), scene.rig);
    const LaneFile lanes = read_lane_file(scene_dir + "/lanes.json");
    if (!(lanes.ys == data.ys)) {
      throw_error(ErrorCode::IoError, scene_dir + ": y-sampling differs from manifest");
    }
    for (const Proposal& p : lanes.lanes) scene.gts.push_back(p.lane);
    scene.fm = read_feature_map(scene_dir + "/features.a3lf");

    if (entry.at("has_pose").get<bool>()) {
      RigidTransform pose;
      from_json(read_json_file(scene_dir + "/pose.json"), pose);
      scene.pose_to_prev = pose;
    }
    data.scenes.push_back(std::move(scene));
  }
  return data;
}

void split_dataset(const Dataset& data, double val_fraction, std::vector<int>* train_indices,
                   std::vector<int>* val_indices) {
  train_indices->clear();
  val_indices->clear();
  if (val_fraction <= 0.0) {
    for (size_t i = 0; i < data.scenes.size(); ++i) train_indices->push_back(static_cast<int>(i));
    return;
  }
  const int stride = std::max(2, static_cast<int>(std::lround(1.0 / val_fraction)));
  for (size_t i = 0; i < data.scenes.size(); ++i) {
    const bool val = data.scenes[i].seq_id % stride == stride - 1;
    (val ? val_indices : train_indices)->push_back(static_cast<int>(i));
  }
}

}  // namespace lane3d
