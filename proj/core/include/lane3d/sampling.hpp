#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lane3d/anchor.hpp"
#include "lane3d/geometry.hpp"

namespace lane3d {

/// Dense h_f x w_f x c feature grid, row-major, float32 storage (matches the
/// on-disk format bit for bit). Cell (0,0) has its center at (u,v) = (0,0).
struct FeatureMap {
  int h_f = 0;
  int w_f = 0;
  int c = 0;
  std::vector<float> data;

  FeatureMap() = default;
  FeatureMap(int h_f_, int w_f_, int c_)
      : h_f(h_f_), w_f(w_f_), c(c_), data(static_cast<size_t>(h_f_) * w_f_ * c_, 0.0f) {}

  float& at(int v, int u, int ch) { return data[(static_cast<size_t>(v) * w_f + u) * c + ch]; }
  float at(int v, int u, int ch) const {
    return data[(static_cast<size_t>(v) * w_f + u) * c + ch];
  }
};

/// Features gathered along one anchor: one C-vector per sampled point, plus
/// a validity mask (in-bounds projection with positive depth).
struct AnchorFeature {
  Eigen::MatrixXd per_point;       // N x C
  std::vector<uint8_t> valid_mask;  // N

  int points() const { return static_cast<int>(per_point.rows()); }
  int channels() const { return static_cast<int>(per_point.cols()); }

  /// Row-major flattening (point-major) used as the head input.
  Eigen::VectorXd flatten() const;
};

/// 4-neighbor bilinear interpolation over cell centers. Coordinates outside
/// [0, w_f-1] x [0, h_f-1] return the zero vector.
Eigen::VectorXd bilinear_sample(const FeatureMap& fm, double u, double v);

/// Projects each anchor point into the feature grid and samples it.
/// Behind-camera or out-of-bounds points give zero features and mask 0.
AnchorFeature sample_anchor_features(const Anchor& anchor, const FeatureMap& fm,
                                     const CameraRig& rig);

/// Transports the anchor into a previous frame's ground coordinates and
/// samples that frame's features: pose maps current-frame ground coordinates
/// to previous-frame ground coordinates.
AnchorFeature sample_cross_frame(const Anchor& anchor, const FeatureMap& prev_fm,
                                 const CameraRig& prev_rig, const RigidTransform& pose);

/// Flattened features of a whole anchor set, one anchor per row (M x N*C).
Eigen::MatrixXd sample_anchor_matrix(const std::vector<Anchor>& anchors, const FeatureMap& fm,
                                     const CameraRig& rig);
Eigen::MatrixXd sample_cross_frame_matrix(const std::vector<Anchor>& anchors,
                                          const FeatureMap& prev_fm, const CameraRig& prev_rig,
                                          const RigidTransform& pose);

// Binary format: magic "A3LF", three uint32 LE (h_f, w_f, c), then
// h_f*w_f*c float32 LE, row-major.
void write_feature_map(const std::string& path, const FeatureMap& fm);
FeatureMap read_feature_map(const std::string& path);

// Stream variants used by the checkpoint format, which embeds A3LF blocks.
void write_feature_map_block(std::ostream& out, const FeatureMap& fm);
FeatureMap read_feature_map_block(std::istream& in);

}  // namespace lane3d
