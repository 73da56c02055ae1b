#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lane3d/synth.hpp"

namespace lane3d {

/// One stored scene: scene_%04d/{camera.json, lanes.json, features.a3lf,
/// pose.json}. pose.json is present only on frames with a predecessor.
struct SceneData {
  CameraRig rig;
  std::vector<Lane3D> gts;
  FeatureMap fm;
  std::optional<RigidTransform> pose_to_prev;
  int seq_id = 0;
  int frame_idx = 0;
};

struct Dataset {
  YSampling ys;
  int num_categories = 2;
  std::vector<SceneData> scenes;

  /// Index of the previous frame of the same sequence, -1 when none.
  int prev_index(int idx) const;
};

std::string scene_dir_name(int index);

/// Writes manifest.json plus one directory per scene.
void write_dataset(const std::string& dir, const Dataset& data);

/// Writes a single scene directory (used for scene-parallel generation).
void write_scene(const std::string& scene_dir, const SceneData& scene, const YSampling& ys);

Dataset load_dataset(const std::string& dir);

/// Deterministic train/val split on sequence ids: every
/// round(1/val_fraction)-th sequence goes to validation.
void split_dataset(const Dataset& data, double val_fraction, std::vector<int>* train_indices,
                   std::vector<int>* val_indices);

}  // namespace lane3d
