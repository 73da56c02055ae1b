#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lane3d/lane.hpp"

namespace lane3d {

/// One evaluated scene: scored predictions against ground truth.
struct ScenePair {
  std::vector<Proposal> preds;
  std::vector<Lane3D> gts;
};

struct MetricsConfig {
  double tp_point_frac = 0.75;  // fraction of evaluated points that must be close
  double tp_dist = 1.5;         // meters
  double close_max = 40.0;      // close range is (0, close_max]
  double far_max = 100.0;       // far range is (close_max, far_max]
  double gt_vis_threshold = 0.5;
  // Pairwise cost is sqrt(sum of pointwise distances); set to true for the
  // sqrt(sum of squared distances) alternative.
  bool squared_cost = false;
};

struct MatchResult {
  struct Pair {
    int pred_index = -1;
    int gt_index = -1;
    std::vector<double> point_distances;  // all N, including non-evaluated points
  };
  std::vector<Pair> pairs;
  std::vector<int> unmatched_preds;
  std::vector<int> unmatched_gts;
};

struct MetricsReport {
  double f1 = 0.0;
  double ap = 0.0;
  double x_err_close = 0.0;
  double x_err_far = 0.0;
  double z_err_close = 0.0;
  double z_err_far = 0.0;
  double category_accuracy = 0.0;
  double best_threshold = 0.0;  // score threshold attaining the max F1
  int num_preds = 0;
  int num_gts = 0;
};

struct OnceConfig {
  double tau_cd = 0.3;        // meters; TP gate on unilateral Chamfer distance
  double iou_threshold = 0.3;  // top-view IoU gate for candidate pairs
  double half_width = 0.5;     // polyline dilation for the IoU rasterization
  double raster_res = 0.1;     // meters per raster cell
  double vis_threshold = 0.5;
};

struct OnceReport {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double cd_error = 0.0;  // mean unilateral CD over true positives
  double tau_cd = 0.3;
};

/// Exact minimum-cost assignment on a square matrix (Jonker-Volgenant style
/// potentials, O(n^3)). Returns the column assigned to each row.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

/// sqrt of the sum of pointwise pred-gt distances over evaluated points
/// (those where the ground truth is visible).
double pairwise_cost(const Lane3D& pred, const Lane3D& gt, const MetricsConfig& cfg);

/// Minimum-total-cost one-to-one matching between predictions and ground
/// truths; unmatched sides pay tp_dist * sqrt(N). Equivalent to min-cost
/// flow with unit capacities.
MatchResult match_lanes(const std::vector<Proposal>& preds, const std::vector<Lane3D>& gts,
                        const MetricsConfig& cfg);

/// F1 (max over score thresholds), AP (area under the interpolated PR
/// curve), x/z errors split close/far, and category accuracy. Errors and
/// category accuracy are taken over true positives at the F1-maximizing
/// threshold. Empty ground truth follows the recall-0 convention.
MetricsReport compute_metrics(const std::vector<ScenePair>& scenes, const MetricsConfig& cfg);
MetricsReport compute_metrics(const std::vector<Proposal>& preds, const std::vector<Lane3D>& gts,
                              const MetricsConfig& cfg);

/// Mean nearest distance from the prediction's visible points to the
/// ground-truth polyline (3D, through visible ground-truth points).
double unilateral_chamfer(const Lane3D& pred, const Lane3D& gt, double vis_threshold);

/// Top-view IoU of the two polylines dilated to half_width, rasterized at
/// raster_res over their joint bounding box.
double topview_iou(const Lane3D& a, const Lane3D& b, const OnceConfig& cfg);

/// ONCE-style protocol: candidate pairs gated by top-view IoU, true positive
/// when the unilateral Chamfer distance stays below tau_cd.
OnceReport once_metrics(const std::vector<ScenePair>& scenes, const OnceConfig& cfg);
OnceReport once_metrics(const std::vector<Proposal>& preds, const std::vector<Lane3D>& gts,
                        const OnceConfig& cfg);

}  // namespace lane3d
