#pragma once

#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lane3d/anchor.hpp"

namespace lane3d {

/// A 3D lane: per-sample x, z, visibility at the shared YSampling.
/// Ground-truth visibility is {0,1}; predicted visibility may be fractional.
struct Lane3D {
  YSampling ys;
  std::vector<double> xs;
  std::vector<double> zs;
  std::vector<double> vis;
  int category = 0;

  int size() const { return static_cast<int>(xs.size()); }
  void validate() const;
};

/// A lane hypothesis with per-category probabilities. The score is the
/// maximum probability over non-background categories (category 0 is
/// background).
struct Proposal {
  Lane3D lane;
  std::vector<double> class_probs;
  double score = 0.0;
};

double score_from_probs(const std::vector<double>& class_probs);
int category_from_probs(const std::vector<double>& class_probs);

/// Training assignment: for each ground truth the n nearest anchors
/// (Eq.-4 distance), everything else negative.
struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (gt_index, anchor_index)
  std::vector<int> negatives;              // anchor indices, ascending
};

/// Visibility-weighted mean x/z distance between a ground truth and an
/// anchor:  sum_k vis_k sqrt(dx_k^2 + dz_k^2) / sum_k vis_k.
/// Throws NoVisiblePoints when the ground truth has no visible point.
double anchor_gt_distance(const Lane3D& gt, const Anchor& anchor);

Assignment assign_positives(const std::vector<Lane3D>& gts, const std::vector<Anchor>& anchors,
                            int n_positives);

struct NmsConfig {
  double threshold = 2.0;      // meters; suppress below this distance
  double vis_threshold = 0.5;  // a point is "visible" when vis >= this
};

/// Greedy NMS by descending score. Distance between two proposals is the
/// Eq.-4 form over points where both are visible; no common visible point
/// means no suppression.
std::vector<Proposal> nms(const std::vector<Proposal>& proposals, const NmsConfig& cfg);

/// Visible-part distance used by NMS; +infinity when no point overlaps.
double proposal_distance(const Proposal& a, const Proposal& b, double vis_threshold);

// Lane JSON: {"category": int, "points": [[x, y, z, vis], ...]}, plus
// "score" on predictions. A lane file wraps a list of those together with
// the y-sampling.
void to_json(nlohmann::json& j, const Lane3D& lane);
void to_json(nlohmann::json& j, const Proposal& p);

struct LaneFile {
  YSampling ys;
  std::vector<Proposal> lanes;  // ground truth loads with score = 1
};

void write_lane_file(const std::string& path, const LaneFile& file);
LaneFile read_lane_file(const std::string& path);

}  // namespace lane3d
