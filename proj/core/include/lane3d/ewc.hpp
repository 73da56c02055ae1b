#pragma once

#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "lane3d/lane.hpp"

namespace lane3d {

struct EwcConfig {
  double alpha = 0.1;               // regularizer weight on the adjustment norm
  int steps = 200;                  // gradient-descent iterations
  double step_size = 1e-2;          // initial step, halved on objective increase
  double fork_slope_threshold = 0.05;  // m per m; larger raw-width slope = fork
  double vis_threshold = 0.5;
  int min_common_visible = 3;       // pairs with fewer shared visible points are skipped
};

/// Width profile between two lanes under candidate x-adjustments:
///   w^k = |cos(theta_a^k) (x_a^k + adj_a^k - x_b^k - adj_b^k)|
/// theta_a is the adjusted lane-a heading in the x-y plane, from central
/// differences over neighboring sampled points (one-sided at the ends).
std::vector<double> pair_width_profile(const Lane3D& a, const Lane3D& b,
                                       const Eigen::VectorXd& adj_a,
                                       const Eigen::VectorXd& adj_b);

/// Mean absolute deviation of a width profile from its mean:
/// sum_k |w^k - mean(w)|.
double width_profile_deviation(const std::vector<double>& widths);

/// Full objective over ordered lane pairs with enough shared visible points:
///   (1/P) sum_pairs L(w) + alpha (1/Q) sum_j ||adj_j||_2,
/// P counting the participating ordered pairs (Q(Q-1) when none is skipped).
/// Throws TooFewLanes when Q < 2.
double ewc_objective(const std::vector<Lane3D>& lanes, const Eigen::MatrixXd& adjustments,
                     double alpha, double vis_threshold = 0.5, int min_common_visible = 3);

struct EwcResult {
  std::vector<Lane3D> lanes;      // x adjusted; y/z/vis/category untouched
  Eigen::MatrixXd adjustments;    // Q x N
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int active_pairs = 0;           // ordered pairs that entered the objective
};

/// Post-hoc refinement: excludes fork pairs, then minimizes the equal-width
/// objective over per-lane x adjustments by fixed-step gradient descent with
/// step halving. Fewer than two lanes (or no usable pair) returns the input
/// unchanged.
EwcResult optimize_equal_width(const std::vector<Lane3D>& lanes, const EwcConfig& cfg);

void to_json(nlohmann::json& j, const EwcConfig& cfg);
void from_json(const nlohmann::json& j, EwcConfig& cfg);

}  // namespace lane3d
