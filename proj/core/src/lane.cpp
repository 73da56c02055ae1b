#include "lane3d/lane.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

namespace lane3d {

void Lane3D::validate() const {
  const size_t n = static_cast<size_t>(ys.size());
  if (xs.size() != n || zs.size() != n || vis.size() != n) {
    throw_error(ErrorCode::LengthMismatch, "lane arrays must match the y-sampling length");
  }
  for (double v : vis) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw_error(ErrorCode::InvalidArgument, "visibility must lie in [0, 1]");
    }
  }
}

double score_from_probs(const std::vector<double>& class_probs) {
  double best = 0.0;
  for (size_t l = 1; l < class_probs.size(); ++l) best = std::max(best, class_probs[l]);
  return best;
}

int category_from_probs(const std::vector<double>& class_probs) {
  int best = 1;
  double best_p = -1.0;
  for (size_t l = 1; l < class_probs.size(); ++l) {
    if (class_probs[l] > best_p) {
      best_p = class_probs[l];
      best = static_cast<int>(l);
    }
  }
  return best;
}

double anchor_gt_distance(const Lane3D& gt, const Anchor& anchor) {
  if (gt.size() != anchor.size()) {
    throw_error(ErrorCode::LengthMismatch, "gt and anchor sample counts differ");
  }
  double weighted = 0.0;
  double total_vis = 0.0;
  for (int k = 0; k < gt.size(); ++k) {
    const double v = gt.vis[k];
    if (v <= 0.0) continue;
    const double dx = gt.xs[k] - anchor.points[k].x;
    const double dz = gt.zs[k] - anchor.points[k].z;
    weighted += v * std::hypot(dx, dz);
    total_vis += v;
  }
  if (total_vis <= 0.0) {
    throw_error(ErrorCode::NoVisiblePoints, "ground-truth lane has no visible point");
  }
  return weighted / total_vis;
}

Assignment assign_positives(const std::vector<Lane3D>& gts, const std::vector<Anchor>& anchors,
                            int n_positives) {
  if (n_positives < 1) throw_error(ErrorCode::InvalidArgument, "n_positives must be >= 1");
  if (anchors.empty()) throw_error(ErrorCode::InvalidArgument, "anchor set is empty");

  Assignment out;
  std::vector<bool> positive(anchors.size(), false);
  const int n = std::min<int>(n_positives, static_cast<int>(anchors.size()));

  for (size_t gi = 0; gi < gts.size(); ++gi) {
    std::vector<std::pair<double, int>> dist(anchors.size());
    for (size_t ai = 0; ai < anchors.size(); ++ai) {
      dist[ai] = {anchor_gt_distance(gts[gi], anchors[ai]), static_cast<int>(ai)};
    }
    // Ties break toward the lower anchor index.
    std::partial_sort(dist.begin(), dist.begin() + n, dist.end());
    for (int j = 0; j < n; ++j) {
      out.pairs.emplace_back(static_cast<int>(gi), dist[j].second);
      positive[dist[j].second] = true;
    }
  }
  for (size_t ai = 0; ai < anchors.size(); ++ai) {
    if (!positive[ai]) out.negatives.push_back(static_cast<int>(ai));
  }
  return out;
}

double proposal_distance(const Proposal& a, const Proposal& b, double vis_threshold) {
  const Lane3D& la = a.lane;
  const Lane3D& lb = b.lane;
  if (la.size() != lb.size()) {
    throw_error(ErrorCode::LengthMismatch, "proposal sample counts differ");
  }
  double sum = 0.0;
  int count = 0;
  for (int k = 0; k < la.size(); ++k) {
    if (la.vis[k] < vis_threshold || lb.vis[k] < vis_threshold) continue;
    sum += std::hypot(la.xs[k] - lb.xs[k], la.zs[k] - lb.zs[k]);
    ++count;
  }
  if (count == 0) return std::numeric_limits<double>::infinity();
  return sum / count;
}

std::vector<Proposal> nms(const std::vector<Proposal>& proposals, const NmsConfig& cfg) {
  if (cfg.threshold <= 0.0) throw_error(ErrorCode::InvalidArgument, "NMS threshold must be > 0");

  std::vector<int> order(proposals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return proposals[i].score > proposals[j].score; });

  std::vector<Proposal> kept;
  for (int idx : order) {
    bool suppressed = false;
    for (const Proposal& k : kept) {
      if (proposal_distance(proposals[idx], k, cfg.vis_threshold) < cfg.threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(proposals[idx]);
  }
  return kept;
}

void to_json(nlohmann::json& j, const Lane3D& lane) {
  j["category"] = lane.category;
  auto points = nlohmann::json::array();
  for (int k = 0; k < lane.size(); ++k) {
    points.push_back({lane.xs[k], lane.ys[k], lane.zs[k], lane.vis[k]});
  }
  j["points"] = points;
}

void to_json(nlohmann::json& j, const Proposal& p) {
  to_json(j, p.lane);
  j["score"] = p.score;
}

namespace {

Lane3D lane_from_json(const nlohmann::json& j, const YSampling& ys) {
  Lane3D lane;
  lane.ys = ys;
  lane.category = j.at("category").get<int>();
  for (const auto& pt : j.at("points")) {
    if (pt.size() != 4) throw_error(ErrorCode::IoError, "lane point must be [x, y, z, vis]");
    lane.xs.push_back(pt[0].get<double>());
    lane.zs.push_back(pt[2].get<double>());
    lane.vis.push_back(pt[3].get<double>());
  }
  lane.validate();
  for (int k = 0; k < lane.size(); ++k) {
    if (std::abs(j.at("points")[k][1].get<double>() - ys[k]) > 1e-9) {
      throw_error(ErrorCode::IoError, "lane point y does not match the file y-sampling");
    }
  }
  return lane;
}

}  // namespace

void write_lane_file(const std::string& path, const LaneFile& file) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["y_samples"] = file.ys.values();
  auto lanes = nlohmann::json::array();
  for (const Proposal& p : file.lanes) {
    nlohmann::json lj;
    to_json(lj, p);
    lanes.push_back(std::move(lj));
  }
  j["lanes"] = lanes;
  std::ofstream out(path);
  if (!out) throw_error(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

LaneFile read_lane_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorCode::IoError, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw_error(ErrorCode::IoError, path + ": " + e.what());
  }
  LaneFile file;
  file.ys = YSampling(j.at("y_samples").get<std::vector<double>>());
  for (const auto& lj : j.at("lanes")) {
    Proposal p;
    p.lane = lane_from_json(lj, file.ys);
    p.score = lj.value("score", 1.0);
    file.lanes.push_back(std::move(p));
  }
  return file;
}

}  // namespace lane3d
