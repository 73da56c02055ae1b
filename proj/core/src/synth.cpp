#include "lane3d/synth.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace lane3d {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {  // inclusive
  return lo + static_cast<int>(uniform01(rng) * (hi - lo + 1));
}

/// Ego pose along the road center at world y = ego_y: yaw follows the road
/// tangent, the frame origin sits on the ground surface, z stays world-up.
struct EgoFrame {
  double psi = 0.0;             // yaw, radians
  Eigen::Vector3d origin;       // world coordinates
  RigidTransform world_to_frame;
};

double lane_center_x(const SceneSpec& spec, double y) { return spec.curvature * y * y; }

double lane_offset(const SceneSpec& spec, int lane_idx) {
  return (lane_idx - (spec.num_lanes - 1) / 2.0) * spec.lane_spacing;
}

double lane_x(const SceneSpec& spec, int lane_idx, double y) {
  return lane_offset(spec, lane_idx) + spec.curvature * y * y;
}

EgoFrame ego_frame_at(const SceneSpec& spec, double ego_y) {
  EgoFrame f;
  f.psi = std::atan(2.0 * spec.curvature * ego_y);
  f.origin = {lane_center_x(spec, ego_y), ego_y, spec.ground.height(ego_y)};
  const double c = std::cos(f.psi), s = std::sin(f.psi);
  Eigen::Matrix3d r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;  // rows: frame x/y/z axes in world coords
  f.world_to_frame = RigidTransform(r, -(r * f.origin));
  return f;
}

CameraRig make_rig(const SceneSpec& spec) {
  CameraRig rig;
  rig.intrinsics = CameraIntrinsics(spec.focal, spec.focal, spec.dims.w / 2.0, spec.dims.h / 2.0);
  Eigen::Matrix3d base;
  base << 1, 0, 0, 0, 0, -1, 0, 1, 0;  // ground (x,y,z) -> camera (x, h-z, y)
  const RigidTransform to_cam(base, Eigen::Vector3d(0, spec.camera_height, 0));
  rig.ground_to_camera = compose(RigidTransform::rotation_x(spec.camera_pitch_deg), to_cam);
  rig.dims = spec.dims;
  return rig;
}

bool in_feature_grid(const FeaturePoint& fp, const ImageDims& dims) {
  return fp.d > kMinDepth && fp.u >= 0.0 && fp.u <= dims.w_f - 1.0 && fp.v >= 0.0 &&
         fp.v <= dims.h_f - 1.0;
}

bool in_span(const std::vector<OcclusionSpan>& spans, double y) {
  for (const OcclusionSpan& s : spans) {
    if (y >= s.y_min && y <= s.y_max) return true;
  }
  return false;
}

const std::vector<OcclusionSpan>& spans_for_lane(const SceneSpec& spec, int lane_idx) {
  static const std::vector<OcclusionSpan> empty;
  if (lane_idx < static_cast<int>(spec.occlusion_spans.size())) {
    return spec.occlusion_spans[lane_idx];
  }
  return empty;
}

/// World y of the lane point whose frame-local y equals target. The local-y
/// function is strictly increasing in world y for the supported curvatures.
double solve_world_y(const SceneSpec& spec, int lane_idx, const EgoFrame& frame, double target) {
  const double s = std::sin(frame.psi), c = std::cos(frame.psi);
  auto local_y = [&](double wy) {
    return s * (lane_x(spec, lane_idx, wy) - frame.origin.x()) + c * (wy - frame.origin.y());
  };
  double lo = frame.origin.y() - 20.0;
  double hi = frame.origin.y() + 300.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (local_y(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Scene make_frame(const SceneSpec& spec, double ego_y, const EgoFrame* prev_frame,
                 const EgoFrame& frame) {
  Scene scene;
  scene.rig = make_rig(spec);

  const double s = std::sin(frame.psi), c = std::cos(frame.psi);
  for (int i = 0; i < spec.num_lanes; ++i) {
    Lane3D lane;
    lane.ys = spec.ys;
    lane.category = i < static_cast<int>(spec.categories.size()) ? spec.categories[i] : 1;
    const auto& spans = spans_for_lane(spec, i);

    int visible = 0;
    for (int k = 0; k < spec.ys.size(); ++k) {
      const double wy = solve_world_y(spec, i, frame, spec.ys[k]);
      const double wx = lane_x(spec, i, wy);
      const double lx = c * (wx - frame.origin.x()) - s * (wy - frame.origin.y());
      const double lz = spec.ground.height(wy) - frame.origin.z();
      lane.xs.push_back(lx);
      lane.zs.push_back(lz);

      double vis = 1.0;
      if (in_span(spans, spec.ys[k])) vis = 0.0;
      const FeaturePoint fp = project_ground_to_feature_unchecked(
          {lx, spec.ys[k], lz}, scene.rig.intrinsics, scene.rig.ground_to_camera, scene.rig.dims);
      if (!in_feature_grid(fp, scene.rig.dims)) vis = 0.0;
      lane.vis.push_back(vis);
      if (vis > 0.0) ++visible;
    }
    if (visible >= 3) scene.gt.push_back(std::move(lane));
  }

  scene.feature_map = render_feature_map(spec, scene.rig, ego_y, frame.psi, frame.origin.z());

  if (prev_frame != nullptr) {
    scene.pose_to_prev =
        compose(prev_frame->world_to_frame, inverse(frame.world_to_frame));
  }
  return scene;
}

}  // namespace

double GroundProfile::height(double y) const {
  switch (kind) {
    case GroundKind::Flat: return 0.0;
    case GroundKind::Uphill: return grade * y;
    case GroundKind::Downhill: return -grade * y;
    case GroundKind::Hill: return amplitude * std::sin(2.0 * M_PI * y / wavelength);
  }
  return 0.0;
}

FeatureMap render_feature_map(const SceneSpec& spec, const CameraRig& rig, double ego_y,
                              double ego_yaw_rad, double ego_z) {
  if (spec.channels < 5) throw_error(ErrorCode::InvalidArgument, "need at least 5 channels");
  FeatureMap fm(spec.dims.h_f, spec.dims.w_f, spec.channels);

  const Eigen::Matrix3d k_inv = rig.intrinsics.k.inverse();
  const RigidTransform cam_to_ground = inverse(rig.ground_to_camera);
  const double psi = ego_yaw_rad;
  const double c = std::cos(psi), s = std::sin(psi);
  const double origin_x = lane_center_x(spec, ego_y);

  // Frame -> world rotation (z-up frames, yaw only).
  Eigen::Matrix3d frame_to_world;
  frame_to_world << c, s, 0, -s, c, 0, 0, 0, 1;
  const Eigen::Vector3d world_origin(origin_x, ego_y, spec.ground.height(ego_y));

  const Eigen::Vector3d cam_center_frame = cam_to_ground.t;
  const Eigen::Vector3d ray_origin = frame_to_world * cam_center_frame + world_origin;

  auto f_of = [&](const Eigen::Vector3d& dir, double t) {
    const double y = ray_origin.y() + t * dir.y();
    return ray_origin.z() + t * dir.z() - spec.ground.height(y);
  };

  for (int vf = 0; vf < spec.dims.h_f; ++vf) {
    for (int uf = 0; uf < spec.dims.w_f; ++uf) {
      const double u_px = static_cast<double>(uf) * spec.dims.w / spec.dims.w_f;
      const double v_px = static_cast<double>(vf) * spec.dims.h / spec.dims.h_f;
      const Eigen::Vector3d dir_cam = k_inv * Eigen::Vector3d(u_px, v_px, 1.0);
      const Eigen::Vector3d dir = frame_to_world * (cam_to_ground.r * dir_cam);

      // Intersect the ray with z = g(y).
      double t_hit = -1.0;
      if (spec.ground.kind == GroundKind::Hill) {
        double t_prev = 0.0;
        double f_prev = f_of(dir, 0.0);
        for (double t = 2.0; t <= 400.0; t += 2.0) {
          const double f = f_of(dir, t);
          if (f_prev > 0.0 && f <= 0.0) {
            double lo = t_prev, hi = t;
            for (int it = 0; it < 60; ++it) {
              const double mid = 0.5 * (lo + hi);
              (f_of(dir, mid) > 0.0 ? lo : hi) = mid;
            }
            t_hit = 0.5 * (lo + hi);
            break;
          }
          t_prev = t;
          f_prev = f;
        }
      } else {
        double slope = 0.0;
        if (spec.ground.kind == GroundKind::Uphill) slope = spec.ground.grade;
        if (spec.ground.kind == GroundKind::Downhill) slope = -spec.ground.grade;
        const double denom = dir.z() - slope * dir.y();
        if (std::abs(denom) > 1e-12) {
          const double t = (slope * ray_origin.y() - ray_origin.z()) / denom;
          if (t > 1e-6 && t < 2000.0) t_hit = t;
        }
      }

      float* cell = &fm.at(vf, uf, 0);
      if (t_hit <= 0.0) {
        cell[0] = static_cast<float>(kLateralClamp);  // sentinel: sky / no ground
        continue;
      }

      const Eigen::Vector3d hit = ray_origin + t_hit * dir;
      const double wy = hit.y();
      int nearest = 0;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < spec.num_lanes; ++i) {
        const double d = std::abs(hit.x() - lane_x(spec, i, wy));
        if (d < best) {
          best = d;
          nearest = i;
        }
      }
      const double signed_d = hit.x() - lane_x(spec, nearest, wy);

      if (spec.zero_occluded_features && std::abs(signed_d) <= 0.5 * spec.lane_spacing) {
        const double local_y = s * (hit.x() - origin_x) + c * (wy - ego_y);
        if (in_span(spans_for_lane(spec, nearest), local_y)) {
          continue;  // all channels stay zero
        }
      }

      const double heading = std::atan(2.0 * spec.curvature * wy) - psi;
      cell[0] = static_cast<float>(std::clamp(signed_d, -kLateralClamp, kLateralClamp));
      cell[1] = std::abs(signed_d) <= kPresenceWidth ? 1.0f : 0.0f;
      cell[2] = static_cast<float>(std::sin(heading));
      cell[3] = static_cast<float>(std::cos(heading));
      cell[4] = static_cast<float>(hit.z() - ego_z);
    }
  }
  return fm;
}

Scene generate_scene(const SceneSpec& spec, uint64_t seed) {
  (void)seed;  // generation is fully specified; the seed names the scene
  if (spec.num_lanes < 1 || spec.lane_spacing <= 0.0) {
    throw_error(ErrorCode::InvalidArgument, "bad scene spec");
  }
  const EgoFrame frame = ego_frame_at(spec, 0.0);
  return make_frame(spec, 0.0, nullptr, frame);
}

std::vector<Scene> generate_sequence(const SceneSpec& spec, int frames, double ego_speed,
                                     uint64_t seed) {
  (void)seed;
  if (frames < 2) throw_error(ErrorCode::InvalidArgument, "sequence needs >= 2 frames");
  std::vector<Scene> out;
  out.reserve(frames);
  EgoFrame prev;
  for (int f = 0; f < frames; ++f) {
    const double ego_y = f * ego_speed;
    const EgoFrame frame = ego_frame_at(spec, ego_y);
    out.push_back(make_frame(spec, ego_y, f > 0 ? &prev : nullptr, frame));
    prev = frame;
  }
  return out;
}

SceneSpec sample_scene_spec(const DatasetOptions& opts, std::mt19937_64& rng) {
  SceneSpec spec = opts.base;
  spec.num_lanes = uniform_int(rng, opts.min_lanes, opts.max_lanes);
  spec.lane_spacing = uniform(rng, opts.min_spacing, opts.max_spacing);

  spec.curvature = 0.0;
  if (uniform01(rng) < opts.curve_fraction) {
    const double mag = uniform(rng, opts.min_abs_curvature, opts.max_abs_curvature);
    spec.curvature = uniform01(rng) < 0.5 ? mag : -mag;
  }

  std::string ground = opts.ground;
  if (ground == "mixed") {
    const int pick = uniform_int(rng, 0, 2);
    ground = pick == 0 ? "flat" : (pick == 1 ? "slope" : "hill");
  }
  if (ground == "flat") {
    spec.ground = {};
  } else if (ground == "slope") {
    spec.ground.kind = uniform01(rng) < 0.5 ? GroundKind::Uphill : GroundKind::Downhill;
    spec.ground.grade = uniform(rng, opts.min_grade, opts.max_grade);
  } else if (ground == "hill") {
    spec.ground.kind = GroundKind::Hill;
    spec.ground.amplitude = uniform(rng, 0.5, 1.5);
    spec.ground.wavelength = uniform(rng, 60.0, 100.0);
  } else {
    throw_error(ErrorCode::ConfigError, "unknown ground mode: " + ground);
  }

  spec.categories.clear();
  for (int i = 0; i < spec.num_lanes; ++i) {
    spec.categories.push_back(opts.num_categories <= 2 ? 1 : 1 + i % (opts.num_categories - 1));
  }

  spec.occlusion_spans.assign(spec.num_lanes, {});
  spec.zero_occluded_features = false;
  if (opts.occlusions) {
    spec.zero_occluded_features = true;
    const int n_occluded = uniform_int(rng, 1, std::min(2, spec.num_lanes));
    for (int j = 0; j < n_occluded; ++j) {
      const int lane = uniform_int(rng, 0, spec.num_lanes - 1);
      const double y0 = uniform(rng, 15.0, 45.0);
      spec.occlusion_spans[lane].push_back({y0, y0 + uniform(rng, 10.0, 25.0)});
    }
  }
  return spec;
}

void to_json(nlohmann::json& j, const DatasetOptions& opts) {
  j["num_scenes"] = opts.num_scenes;
  j["frames_per_scene"] = opts.frames_per_scene;
  j["ego_speed"] = opts.ego_speed;
  j["lanes"] = {opts.min_lanes, opts.max_lanes};
  j["spacing"] = {opts.min_spacing, opts.max_spacing};
  j["curve_fraction"] = opts.curve_fraction;
  j["curvature"] = {opts.min_abs_curvature, opts.max_abs_curvature};
  j["ground"] = opts.ground;
  j["grade"] = {opts.min_grade, opts.max_grade};
  j["occlusions"] = opts.occlusions;
  j["num_categories"] = opts.num_categories;
  j["camera_height"] = opts.base.camera_height;
  j["camera_pitch_deg"] = opts.base.camera_pitch_deg;
  j["focal"] = opts.base.focal;
  to_json(j["dims"], opts.base.dims);
  j["channels"] = opts.base.channels;
  j["y_samples"] = opts.base.ys.values();
}

void from_json(const nlohmann::json& j, DatasetOptions& opts) {
  opts = DatasetOptions{};
  if (j.contains("num_scenes")) opts.num_scenes = j.at("num_scenes").get<int>();
  if (j.contains("frames_per_scene")) opts.frames_per_scene = j.at("frames_per_scene").get<int>();
  if (j.contains("ego_speed")) opts.ego_speed = j.at("ego_speed").get<double>();
  if (j.contains("lanes")) {
    opts.min_lanes = j.at("lanes").at(0).get<int>();
    opts.max_lanes = j.at("lanes").at(1).get<int>();
  }
  if (j.contains("spacing")) {
    opts.min_spacing = j.at("spacing").at(0).get<double>();
    opts.max_spacing = j.at("spacing").at(1).get<double>();
  }
  if (j.contains("curve_fraction")) opts.curve_fraction = j.at("curve_fraction").get<double>();
  if (j.contains("curvature")) {
    opts.min_abs_curvature = j.at("curvature").at(0).get<double>();
    opts.max_abs_curvature = j.at("curvature").at(1).get<double>();
  }
  if (j.contains("ground")) opts.ground = j.at("ground").get<std::string>();
  if (j.contains("grade")) {
    opts.min_grade = j.at("grade").at(0).get<double>();
    opts.max_grade = j.at("grade").at(1).get<double>();
  }
  if (j.contains("occlusions")) opts.occlusions = j.at("occlusions").get<bool>();
  if (j.contains("num_categories")) opts.num_categories = j.at("num_categories").get<int>();
  if (j.contains("camera_height")) opts.base.camera_height = j.at("camera_height").get<double>();
  if (j.contains("camera_pitch_deg")) {
    opts.base.camera_pitch_deg = j.at("camera_pitch_deg").get<double>();
  }
  if (j.contains("focal")) opts.base.focal = j.at("focal").get<double>();
  if (j.contains("dims")) from_json(j.at("dims"), opts.base.dims);
  if (j.contains("channels")) opts.base.channels = j.at("channels").get<int>();
  if (j.contains("y_samples")) {
    opts.base.ys = YSampling(j.at("y_samples").get<std::vector<double>>());
  }
}

}  // namespace lane3d
