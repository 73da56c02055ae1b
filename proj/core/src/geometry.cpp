#include "lane3d/geometry.hpp"

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

namespace lane3d {

namespace {

constexpr double kDegToRad = M_PI / 180.0;
constexpr double kOrthoTol = 1e-9;

void check_rotation(const Eigen::Matrix3d& r) {
  const Eigen::Matrix3d gram = r.transpose() * r;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > kOrthoTol) {
    throw_error(ErrorCode::InvalidArgument, "rotation matrix is not orthonormal");
  }
  if (std::abs(r.determinant() - 1.0) > kOrthoTol) {
    throw_error(ErrorCode::InvalidArgument, "rotation matrix determinant is not +1");
  }
}

Eigen::Matrix3d axis_rotation(int axis, double degrees) {
  const double a = degrees * kDegToRad;
  return Eigen::AngleAxisd(a, Eigen::Vector3d::Unit(axis)).toRotationMatrix();
}

}  // namespace

CameraIntrinsics::CameraIntrinsics(const Eigen::Matrix3d& m) : k(m) {
  if (k(2, 2) != 1.0) throw_error(ErrorCode::InvalidArgument, "K(2,2) must be 1");
  if (k(0, 0) <= 0.0 || k(1, 1) <= 0.0) {
    throw_error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  }
}

CameraIntrinsics::CameraIntrinsics(double fx, double fy, double cx, double cy) {
  if (fx <= 0.0 || fy <= 0.0) {
    throw_error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  }
  k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
}

RigidTransform::RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : r(rotation), t(translation) {
  check_rotation(r);
}

RigidTransform RigidTransform::translation(double x, double y, double z) {
  return {Eigen::Matrix3d::Identity(), Eigen::Vector3d(x, y, z)};
}

RigidTransform RigidTransform::rotation_x(double degrees) {
  return {axis_rotation(0, degrees), Eigen::Vector3d::Zero()};
}

RigidTransform RigidTransform::rotation_y(double degrees) {
  return {axis_rotation(1, degrees), Eigen::Vector3d::Zero()};
}

RigidTransform RigidTransform::rotation_z(double degrees) {
  return {axis_rotation(2, degrees), Eigen::Vector3d::Zero()};
}

ImageDims::ImageDims(int h_, int w_, int h_f_, int w_f_) : h(h_), w(w_), h_f(h_f_), w_f(w_f_) {
  if (h <= 0 || w <= 0 || h_f <= 0 || w_f <= 0) {
    throw_error(ErrorCode::InvalidArgument, "image dims must be positive");
  }
  if (h_f > h || w_f > w) {
    throw_error(ErrorCode::InvalidArgument, "feature grid must not exceed image size");
  }
}

GroundPoint transform_point(const GroundPoint& p, const RigidTransform& t) {
  return GroundPoint::from_vec(t.r * p.vec() + t.t);
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.r = a.r * b.r;
  out.t = a.r * b.t + a.t;
  return out;
}

RigidTransform inverse(const RigidTransform& t) {
  RigidTransform out;
  out.r = t.r.transpose();
  out.t = -(out.r * t.t);
  return out;
}

FeaturePoint project_ground_to_feature_unchecked(const GroundPoint& p, const CameraIntrinsics& k,
                                                 const RigidTransform& ground_to_camera,
                                                 const ImageDims& dims) {
  const Eigen::Vector3d cam = ground_to_camera.r * p.vec() + ground_to_camera.t;
  const Eigen::Vector3d uvd = k.k * cam;
  FeaturePoint fp;
  fp.d = uvd.z();
  if (std::abs(fp.d) <= kMinDepth) {
    fp.u = std::numeric_limits<double>::quiet_NaN();
    fp.v = std::numeric_limits<double>::quiet_NaN();
    return fp;
  }
  fp.u = static_cast<double>(dims.w_f) / dims.w * uvd.x() / fp.d;
  fp.v = static_cast<double>(dims.h_f) / dims.h * uvd.y() / fp.d;
  return fp;
}

FeaturePoint project_ground_to_feature(const GroundPoint& p, const CameraIntrinsics& k,
                                       const RigidTransform& ground_to_camera,
                                       const ImageDims& dims) {
  FeaturePoint fp = project_ground_to_feature_unchecked(p, k, ground_to_camera, dims);
  if (fp.d <= kMinDepth) {
    throw_error(ErrorCode::DepthNonPositive, "point at or behind the camera plane");
  }
  return fp;
}

GroundPoint unproject_feature_point(const FeaturePoint& fp, const CameraIntrinsics& k,
                                    const RigidTransform& ground_to_camera,
                                    const ImageDims& dims) {
  if (fp.d <= kMinDepth) {
    throw_error(ErrorCode::DepthNonPositive, "cannot unproject non-positive depth");
  }
  const Eigen::Vector3d uvd(fp.u * dims.w / dims.w_f * fp.d, fp.v * dims.h / dims.h_f * fp.d,
                            fp.d);
  const Eigen::Vector3d cam = k.k.inverse() * uvd;
  const RigidTransform inv = inverse(ground_to_camera);
  return GroundPoint::from_vec(inv.r * cam + inv.t);
}

void to_json(nlohmann::json& j, const CameraIntrinsics& k) {
  std::vector<double> flat(9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) flat[r * 3 + c] = k.k(r, c);
  j["K"] = flat;
}

void from_json(const nlohmann::json& j, CameraIntrinsics& k) {
  const auto flat = j.at("K").get<std::vector<double>>();
  if (flat.size() != 9) throw_error(ErrorCode::ConfigError, "K must hold 9 reals");
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = flat[r * 3 + c];
  k = CameraIntrinsics(m);
}

void to_json(nlohmann::json& j, const RigidTransform& t) {
  std::vector<double> flat(12);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) flat[r * 4 + c] = t.r(r, c);
    flat[r * 4 + 3] = t.t(r);
  }
  j["T"] = flat;
}

void from_json(const nlohmann::json& j, RigidTransform& t) {
  const auto flat = j.at("T").get<std::vector<double>>();
  if (flat.size() != 12) throw_error(ErrorCode::ConfigError, "T must hold 12 reals");
  Eigen::Matrix3d r;
  Eigen::Vector3d tr;
  for (int row = 0; row < 3; ++row) {
    for (int c = 0; c < 3; ++c) r(row, c) = flat[row * 4 + c];
    tr(row) = flat[row * 4 + 3];
  }
  t = RigidTransform(r, tr);
}

void to_json(nlohmann::json& j, const ImageDims& d) {
  j["H"] = d.h;
  j["W"] = d.w;
  j["Hf"] = d.h_f;
  j["Wf"] = d.w_f;
}

void from_json(const nlohmann::json& j, ImageDims& d) {
  d = ImageDims(j.at("H").get<int>(), j.at("W").get<int>(), j.at("Hf").get<int>(),
                j.at("Wf").get<int>());
}

void to_json(nlohmann::json& j, const CameraRig& rig) {
  to_json(j, rig.intrinsics);
  to_json(j, rig.ground_to_camera);
  to_json(j, rig.dims);
}

void from_json(const nlohmann::json& j, CameraRig& rig) {
  from_json(j, rig.intrinsics);
  from_json(j, rig.ground_to_camera);
  from_json(j, rig.dims);
}

}  // namespace lane3d
