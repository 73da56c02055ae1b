#pragma once

#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lane3d/geometry.hpp"

namespace lane3d {

struct Proposal;  // lane.hpp

/// The fixed, strictly ascending y-coordinates (all > 0) at which every lane
/// and anchor in a scene is sampled.
class YSampling {
 public:
  YSampling() = default;
  explicit YSampling(std::vector<double> ys);

  /// The 10-point list used for desk-scale work: {5,10,15,20,30,40,50,65,80,100}.
  static YSampling apollo10();

  int size() const { return static_cast<int>(ys_.size()); }
  double operator[](int k) const { return ys_[k]; }
  const std::vector<double>& values() const { return ys_; }

  friend bool operator==(const YSampling& a, const YSampling& b) { return a.ys_ == b.ys_; }

 private:
  std::vector<double> ys_;
};

/// A 3D anchor ray: start (x_s, 0, z_s), heading yaw (degrees, about z) and
/// pitch (degrees, elevation). Sampled points are affine in y:
///   x(y) = x_s + y tan(yaw),  z(y) = z_s + y tan(pitch).
struct AnchorParams {
  double x_s = 0.0;
  double pitch_deg = 0.0;
  double yaw_deg = 0.0;
  double z_s = 0.0;
};

struct Anchor {
  AnchorParams params;
  std::vector<GroundPoint> points;  // points[k].y == ys[k]

  int size() const { return static_cast<int>(points.size()); }
};

struct AnchorGridConfig {
  double x_interval = 1.3;
  double x_min = -10.0;
  double x_max = 10.0;
  std::vector<double> yaws_deg;
  std::vector<double> pitches_deg;
  double z_s = 0.0;

  /// x interval 1.3 m over (-10, 10), yaws {0,±1,±3,±5,±7,±10,±15,±20,±30},
  /// pitches {0,±1,±2,±5}: 16 * 17 * 7 = 1904 anchors.
  static AnchorGridConfig defaults();
};

Anchor build_anchor(const AnchorParams& params, const YSampling& ys);

/// One anchor per (x_s, yaw, pitch) triple; x_s swept from x_min in steps of
/// x_interval while <= x_max. Throws EmptyGrid when a factor list is empty.
std::vector<Anchor> build_anchor_grid(const AnchorGridConfig& cfg, const YSampling& ys);

/// Reinterprets a proposal's points as a new anchor for iterative regression.
/// Params carry placeholder pitch/yaw; only the points matter downstream.
/// Throws LengthMismatch when the proposal point count differs from ys.
Anchor proposal_to_anchor(const Proposal& p, const YSampling& ys);

// Config block keys: x_interval, x_range, yaws_deg, pitches_deg, z_s.
void to_json(nlohmann::json& j, const AnchorGridConfig& cfg);
void from_json(const nlohmann::json& j, AnchorGridConfig& cfg);

}  // namespace lane3d
