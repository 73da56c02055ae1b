#include "lane3d/anchor.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "lane3d/lane.hpp"

namespace lane3d {

namespace {
constexpr double kDegToRad = M_PI / 180.0;
}

YSampling::YSampling(std::vector<double> ys) : ys_(std::move(ys)) {
  if (ys_.size() < 2) throw_error(ErrorCode::InvalidArgument, "need at least 2 y-samples");
  double prev = 0.0;
  for (double y : ys_) {
    if (!(y > prev)) {
      throw_error(ErrorCode::InvalidArgument, "y-samples must be strictly ascending and > 0");
    }
    prev = y;
  }
}

YSampling YSampling::apollo10() {
  return YSampling({5, 10, 15, 20, 30, 40, 50, 65, 80, 100});
}

AnchorGridConfig AnchorGridConfig::defaults() {
  AnchorGridConfig cfg;
  cfg.yaws_deg = {0, 1, -1, 3, -3, 5, -5, 7, -7, 10, -10, 15, -15, 20, -20, 30, -30};
  cfg.pitches_deg = {0, 1, -1, 2, -2, 5, -5};
  return cfg;
}

Anchor build_anchor(const AnchorParams& params, const YSampling& ys) {
  if (std::abs(params.pitch_deg) >= 90.0 || std::abs(params.yaw_deg) >= 90.0) {
    throw_error(ErrorCode::InvalidArgument, "anchor pitch/yaw must be within (-90, 90) degrees");
  }
  const double tan_yaw = std::tan(params.yaw_deg * kDegToRad);
  const double tan_pitch = std::tan(params.pitch_deg * kDegToRad);
  Anchor a;
  a.params = params;
  a.points.reserve(ys.size());
  for (int k = 0; k < ys.size(); ++k) {
    const double y = ys[k];
    a.points.push_back({params.x_s + y * tan_yaw, y, params.z_s + y * tan_pitch});
  }
  return a;
}

std::vector<Anchor> build_anchor_grid(const AnchorGridConfig& cfg, const YSampling& ys) {
  if (cfg.yaws_deg.empty() || cfg.pitches_deg.empty()) {
    throw_error(ErrorCode::EmptyGrid, "yaw and pitch lists must be nonempty");
  }
  if (cfg.x_interval <= 0.0 || cfg.x_min >= cfg.x_max) {
    throw_error(ErrorCode::InvalidArgument, "bad x sweep");
  }
  std::vector<double> xs;
  for (double x = cfg.x_min; x <= cfg.x_max + 1e-9; x += cfg.x_interval) xs.push_back(x);

  std::vector<Anchor> grid;
  grid.reserve(xs.size() * cfg.yaws_deg.size() * cfg.pitches_deg.size());
  for (double x_s : xs) {
    for (double yaw : cfg.yaws_deg) {
      for (double pitch : cfg.pitches_deg) {
        grid.push_back(build_anchor({x_s, pitch, yaw, cfg.z_s}, ys));
      }
    }
  }
  return grid;
}

Anchor proposal_to_anchor(const Proposal& p, const YSampling& ys) {
  const Lane3D& lane = p.lane;
  if (lane.size() != ys.size() || !(lane.ys == ys)) {
    throw_error(ErrorCode::LengthMismatch, "proposal point count does not match y-sampling");
  }
  Anchor a;
  a.params = {lane.xs.empty() ? 0.0 : lane.xs.front(), 0.0, 0.0,
              lane.zs.empty() ? 0.0 : lane.zs.front()};
  a.points.reserve(ys.size());
  for (int k = 0; k < ys.size(); ++k) {
    a.points.push_back({lane.xs[k], ys[k], lane.zs[k]});
  }
  return a;
}

void to_json(nlohmann::json& j, const AnchorGridConfig& cfg) {
  j["x_interval"] = cfg.x_interval;
  j["x_range"] = {cfg.x_min, cfg.x_max};
  j["yaws_deg"] = cfg.yaws_deg;
  j["pitches_deg"] = cfg.pitches_deg;
  j["z_s"] = cfg.z_s;
}

void from_json(const nlohmann::json& j, AnchorGridConfig& cfg) {
  cfg = AnchorGridConfig::defaults();
  if (j.contains("x_interval")) cfg.x_interval = j.at("x_interval").get<double>();
  if (j.contains("x_range")) {
    const auto range = j.at("x_range").get<std::vector<double>>();
    if (range.size() != 2) throw_error(ErrorCode::ConfigError, "x_range must be [min, max]");
    cfg.x_min = range[0];
    cfg.x_max = range[1];
  }
  if (j.contains("yaws_deg")) cfg.yaws_deg = j.at("yaws_deg").get<std::vector<double>>();
  if (j.contains("pitches_deg")) cfg.pitches_deg = j.at("pitches_deg").get<std::vector<double>>();
  if (j.contains("z_s")) cfg.z_s = j.at("z_s").get<double>();
}

}  // namespace lane3d
