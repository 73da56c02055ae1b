#pragma once

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "lane3d/errors.hpp"

namespace lane3d {

/// Ground coordinate system: origin below the camera, x right, y forward,
/// z up. All distances in meters.
struct GroundPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Eigen::Vector3d vec() const { return {x, y, z}; }
  static GroundPoint from_vec(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
};

/// Pinhole intrinsics K. Validated: positive focal lengths, K(2,2) == 1.
struct CameraIntrinsics {
  Eigen::Matrix3d k = Eigen::Matrix3d::Identity();

  CameraIntrinsics() = default;
  explicit CameraIntrinsics(const Eigen::Matrix3d& m);
  CameraIntrinsics(double fx, double fy, double cx, double cy);
};

/// Rigid transform p' = r * p + t. The constructor rejects matrices that are
/// not orthonormal with det +1 (tolerance 1e-9), so a RigidTransform can
/// never silently shear.
struct RigidTransform {
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  RigidTransform() = default;
  RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform translation(double x, double y, double z);
  /// Rotation of `degrees` about the named axis (right-handed), zero translation.
  static RigidTransform rotation_x(double degrees);
  static RigidTransform rotation_y(double degrees);
  static RigidTransform rotation_z(double degrees);
};

/// Image pixel dimensions together with the feature-grid shape they map to.
struct ImageDims {
  int h = 0;
  int w = 0;
  int h_f = 0;
  int w_f = 0;

  ImageDims() = default;
  ImageDims(int h_, int w_, int h_f_, int w_f_);
};

/// A point in feature-grid coordinates: column u, row v, depth d (meters, as
/// computed; callers mask d <= kMinDepth).
struct FeaturePoint {
  double u = 0.0;
  double v = 0.0;
  double d = 0.0;
};

/// Everything needed to project ground points into one camera's feature grid.
struct CameraRig {
  CameraIntrinsics intrinsics;
  RigidTransform ground_to_camera;
  ImageDims dims;
};

/// Depth at or below this is treated as behind the camera plane.
inline constexpr double kMinDepth = 1e-6;

GroundPoint transform_point(const GroundPoint& p, const RigidTransform& t);
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform inverse(const RigidTransform& t);

/// Pinhole projection rescaled to the feature grid:
///   [u~, v~, d]^T = K (R p + t),  u = (w_f / w) u~ / d,  v = (h_f / h) v~ / d.
/// Throws DepthNonPositive when d <= kMinDepth.
FeaturePoint project_ground_to_feature(const GroundPoint& p, const CameraIntrinsics& k,
                                       const RigidTransform& ground_to_camera,
                                       const ImageDims& dims);

/// Same as project_ground_to_feature but never throws; d is returned as
/// computed and u, v are NaN when |d| <= kMinDepth. Used by feature sampling,
/// which masks instead of failing.
FeaturePoint project_ground_to_feature_unchecked(const GroundPoint& p, const CameraIntrinsics& k,
                                                 const RigidTransform& ground_to_camera,
                                                 const ImageDims& dims);

/// Inverse of project_ground_to_feature for d > 0.
GroundPoint unproject_feature_point(const FeaturePoint& fp, const CameraIntrinsics& k,
                                    const RigidTransform& ground_to_camera, const ImageDims& dims);

// JSON schema: K = 9 reals row-major, T = 12 reals row-major 3x4 [R|t],
// dims under H/W/Hf/Wf. CameraRig serializes as the flat union of the three.
void to_json(nlohmann::json& j, const CameraIntrinsics& k);
void from_json(const nlohmann::json& j, CameraIntrinsics& k);
void to_json(nlohmann::json& j, const RigidTransform& t);
void from_json(const nlohmann::json& j, RigidTransform& t);
void to_json(nlohmann::json& j, const ImageDims& d);
void from_json(const nlohmann::json& j, ImageDims& d);
void to_json(nlohmann::json& j, const CameraRig& rig);
void from_json(const nlohmann::json& j, CameraRig& rig);

}  // namespace lane3d
