#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lane3d/lane.hpp"
#include "lane3d/sampling.hpp"

namespace lane3d {

struct TrainConfig {
  double lambda_cls = 1.0;
  double lambda_reg = 1.0;
  double focal_alpha = 0.5;
  double focal_gamma = 2.0;
  double learning_rate = 1e-4;
  double weight_decay = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int n_positives = 3;
  uint64_t seed = 0;
};

struct AdamState {
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;
};

/// One prediction head: a single hidden layer with max(0, .) activation and
/// three linear outputs (class logits, x/z offsets, visibility logits).
/// Biases are stored as 1 x n matrices so every parameter tensor moves
/// through the same optimizer/checkpoint machinery.
struct HeadParams {
  int n_points = 0;
  int channels = 0;
  int num_classes = 0;
  int hidden = 0;

  Eigen::MatrixXd w1, b1;          // (N*C) x H, 1 x H
  Eigen::MatrixXd w_cls, b_cls;    // H x L, 1 x L
  Eigen::MatrixXd w_off, b_off;    // H x 2N (dx | dz), 1 x 2N
  Eigen::MatrixXd w_vis, b_vis;    // H x N, 1 x N

  std::vector<AdamState> moments;  // one per tensor, tensors() order
  long step = 0;

  static HeadParams init(int n_points, int channels, int num_classes, int hidden, uint64_t seed);

  std::vector<Eigen::MatrixXd*> tensors();
  std::vector<const Eigen::MatrixXd*> tensors() const;
  static const std::vector<std::string>& tensor_names();

  long parameter_count() const;
};

struct Prediction {
  std::vector<double> class_probs;  // softmax, sums to 1
  std::vector<double> dx, dz;       // meters
  std::vector<double> vis;          // sigmoid, in (0, 1)
};

/// Single-anchor forward pass. Throws ShapeMismatch when the feature shape
/// disagrees with the head.
Prediction forward(const AnchorFeature& feat, const HeadParams& params);

// ---------------------------------------------------------------------------
// Batch machinery: all anchors of a scene go through the head together.

struct HeadBatch {
  Eigen::MatrixXd x;         // M x (N*C) flattened anchor features
  Eigen::MatrixXd anchor_x;  // M x N anchor x-coordinates
  Eigen::MatrixXd anchor_z;  // M x N
  std::vector<Lane3D> gts;
  Assignment assignment;
};

struct BatchForward {
  Eigen::MatrixXd hidden_pre, hidden;  // M x H
  Eigen::MatrixXd probs;               // M x L (softmax)
  Eigen::MatrixXd dx, dz;              // M x N
  Eigen::MatrixXd vis;                 // M x N (sigmoid)
};

BatchForward forward_batch(const HeadParams& params, const Eigen::MatrixXd& x);

/// Focal classification loss (mean over all proposals; positives target
/// their assigned category, negatives the background class 0).
double classification_loss(const BatchForward& fwd, const HeadBatch& batch,
                           const TrainConfig& cfg);

/// Visibility-weighted L1 on x/z plus L1 on visibility, mean over positives.
double regression_loss(const BatchForward& fwd, const HeadBatch& batch);

double total_loss(const BatchForward& fwd, const HeadBatch& batch, const TrainConfig& cfg);

struct HeadGradients {
  std::vector<Eigen::MatrixXd> tensors;  // HeadParams::tensors() order
  Eigen::MatrixXd d_input;               // M x (N*C); filled when requested
};

/// Loss plus hand-written reverse-mode gradients. Pass grads = nullptr for a
/// loss-only evaluation (used by finite differences).
double loss_and_gradients(const HeadParams& params, const HeadBatch& batch,
                          const TrainConfig& cfg, HeadGradients* grads,
                          bool want_input_grad = false);

/// One Adam step with decoupled weight decay. Returns the pre-step loss.
/// Throws NonFiniteGradient when any gradient is not finite.
double backward_and_step(HeadParams& params, const HeadBatch& batch, const TrainConfig& cfg);

struct GradCheckOptions {
  int min_samples = 200;
  uint64_t seed = 0;
  double fd_step = 1e-5;
  // When >= 0, this flat parameter index is forced into the sample and its
  // analytic gradient is scaled by mutate_scale (mutation testing).
  long mutate_flat_index = -1;
  double mutate_scale = 1.0;
};

/// Max relative error between analytic gradients and central finite
/// differences over a random parameter subset.
double gradient_check(const HeadParams& params, const HeadBatch& batch, const TrainConfig& cfg,
                      const GradCheckOptions& opts);

// ---------------------------------------------------------------------------
// Temporal fusion (two frames).

enum class FusionStrategy { WeightedSum, LinearMap };

FusionStrategy fusion_strategy_from_string(const std::string& name);
std::string to_string(FusionStrategy strategy);

struct FusionParams {
  FusionStrategy strategy = FusionStrategy::WeightedSum;
  int n_points = 0;
  int channels = 0;
  Eigen::MatrixXd point_weights;  // N x 2 (current, previous), WeightedSum
  Eigen::MatrixXd linear;         // 2C x C, LinearMap

  std::vector<AdamState> moments;
  long step = 0;

  static FusionParams init(FusionStrategy strategy, int n_points, int channels);
  std::vector<Eigen::MatrixXd*> tensors();
  std::vector<const Eigen::MatrixXd*> tensors() const;
};

/// Fuses current- and previous-frame features of one anchor. The valid mask
/// is the elementwise OR of the inputs.
AnchorFeature fuse_temporal(const AnchorFeature& current, const AnchorFeature& previous,
                            const FusionParams& fusion);

/// Batch variants over flattened feature matrices (M x N*C).
Eigen::MatrixXd fuse_batch(const FusionParams& fusion, const Eigen::MatrixXd& current,
                           const Eigen::MatrixXd& previous);
void fusion_backward(const FusionParams& fusion, const Eigen::MatrixXd& current,
                     const Eigen::MatrixXd& previous, const Eigen::MatrixXd& d_fused,
                     std::vector<Eigen::MatrixXd>& grads);

/// Generic Adam-with-decoupled-weight-decay step shared by head and fusion
/// parameters.
void adam_step(std::vector<Eigen::MatrixXd*> tensors, const std::vector<Eigen::MatrixXd>& grads,
               std::vector<AdamState>& moments, long& step, const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Inference.

struct TemporalContext {
  const FeatureMap* prev_fm = nullptr;
  CameraRig prev_rig;
  RigidTransform pose_to_prev;
  const FusionParams* fusion = nullptr;
};

/// Iterative regression: iteration 1 regresses from the given anchors;
/// later iterations re-anchor on the previous proposals, re-sample and
/// re-regress. Classification comes from the final iteration.
std::vector<Proposal> predict_iterative(const FeatureMap& fm, const std::vector<Anchor>& anchors,
                                        const std::vector<HeadParams>& params_per_iter,
                                        const CameraRig& rig, int iters, const YSampling& ys,
                                        const TemporalContext* temporal = nullptr);

}  // namespace lane3d
