#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lane3d/geometry.hpp"
#include "lane3d/lane.hpp"
#include "lane3d/sampling.hpp"

namespace lane3d {

enum class GroundKind { Flat, Uphill, Downhill, Hill };

/// Parametric ground surface z = g(y). Grades are rise over run; hills are
/// a sine of the given amplitude and wavelength.
struct GroundProfile {
  GroundKind kind = GroundKind::Flat;
  double grade = 0.0;
  double amplitude = 0.0;
  double wavelength = 80.0;

  double height(double y) const;
};

struct OcclusionSpan {
  double y_min = 0.0;
  double y_max = 0.0;
};

/// A fully specified synthetic scene: lanes at x = offset_i + curvature y^2
/// on the ground surface, viewed by a forward camera at camera_height with
/// camera_pitch down.
struct SceneSpec {
  int num_lanes = 3;
  double lane_spacing = 3.5;
  double curvature = 0.0;  // 1/m, quadratic lateral coefficient
  GroundProfile ground;
  double camera_height = 1.5;
  double camera_pitch_deg = 2.0;
  std::vector<int> categories;  // per-lane; missing entries default to 1
  std::vector<std::vector<OcclusionSpan>> occlusion_spans;  // per-lane, local y
  bool zero_occluded_features = false;

  double focal = 400.0;
  ImageDims dims{360, 480, 45, 60};
  int channels = 5;
  YSampling ys = YSampling::apollo10();
};

struct Scene {
  CameraRig rig;
  std::vector<Lane3D> gt;
  FeatureMap feature_map;
  std::optional<RigidTransform> pose_to_prev;
};

// Feature channels (C = 5): signed lateral distance to the nearest lane
// (clamped to +-5 m), lane presence within 0.25 m, sin/cos of the local lane
// heading, local ground height. Cells whose back-projected ray misses the
// ground carry the sentinel (+5, 0, 0, 0, 0).
inline constexpr double kLateralClamp = 5.0;
inline constexpr double kPresenceWidth = 0.25;

/// Deterministic per (spec, seed). Ground-truth visibility is 0 inside
/// occlusion spans and wherever the point projects outside the usable
/// feature grid; lanes with fewer than 3 visible points are dropped.
Scene generate_scene(const SceneSpec& spec, uint64_t seed);

/// The analytic stand-in for a learned front-view feature extractor: every
/// feature cell back-projects to the ground surface and encodes the channels
/// described above.
FeatureMap render_feature_map(const SceneSpec& spec, const CameraRig& rig, double ego_y,
                              double ego_yaw_rad, double ego_z);

/// Ego advances ego_speed meters of forward progress per frame along the
/// road center. Each frame re-expresses the lanes in its own ground frame;
/// pose_to_prev is the exact rigid transform into the previous frame.
std::vector<Scene> generate_sequence(const SceneSpec& spec, int frames, double ego_speed,
                                     uint64_t seed);

/// Randomized dataset recipe; every scene draws its parameters from the
/// seeded generator.
struct DatasetOptions {
  int num_scenes = 200;
  int frames_per_scene = 1;
  double ego_speed = 5.0;
  int min_lanes = 2;
  int max_lanes = 4;
  double min_spacing = 3.2;
  double max_spacing = 3.9;
  double curve_fraction = 0.5;  // fraction of scenes with a curved road
  double min_abs_curvature = 2e-4;
  double max_abs_curvature = 6e-4;
  std::string ground = "flat";  // flat | slope | hill | mixed
  double min_grade = 0.02;
  double max_grade = 0.08;
  bool occlusions = false;       // adds feature-zeroed spans
  int num_categories = 2;        // L, including background
  SceneSpec base;                // camera/feature geometry shared by scenes
};

SceneSpec sample_scene_spec(const DatasetOptions& opts, std::mt19937_64& rng);

void to_json(nlohmann::json& j, const DatasetOptions& opts);
void from_json(const nlohmann::json& j, DatasetOptions& opts);

}  // namespace lane3d
