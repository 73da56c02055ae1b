#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lane3d/dataset.hpp"
#include "lane3d/head.hpp"

namespace lane3d {

struct TrainerConfig {
  TrainConfig opt;
  int epochs = 40;
  int iters = 1;  // refinement cascade depth; one head per iteration
  bool temporal = false;
  FusionStrategy fusion = FusionStrategy::WeightedSum;
  int hidden = 64;
  AnchorGridConfig grid = AnchorGridConfig::defaults();
  double lr_decay_factor = 0.1;
  double lr_decay_fraction = 0.9;  // decay once after this fraction of epochs
};

/// A trained pipeline: one head per refinement iteration plus optional
/// temporal fusion, together with the anchor layout it was trained on.
struct Model {
  std::vector<HeadParams> heads;
  std::optional<FusionParams> fusion;
  AnchorGridConfig grid;
  YSampling ys;
  int num_classes = 2;
  int channels = 0;
};

struct TrainResult {
  Model model;
  std::vector<double> epoch_loss;  // mean per-scene loss per epoch
  double initial_loss = 0.0;       // before the first step
  double final_loss = 0.0;         // after the last epoch
};

/// Trains on the given scene indices. Temporal training uses only scenes
/// with a previous frame; iterative training supervises every stage against
/// assignments recomputed on its own anchors.
TrainResult train_model(const Dataset& data, const std::vector<int>& scene_indices,
                        const TrainerConfig& cfg);

// Checkpoint: magic "A3LC", uint32 LE JSON-header length, JSON header
// (shapes, config, seed, iteration count, tensor list), then one A3LF
// float32 block per tensor in header order.
void write_checkpoint(const std::string& path, const Model& model,
                      const nlohmann::json& extra_meta);
Model read_checkpoint(const std::string& path);

struct PredictConfig {
  int iters = 0;  // 0 = all trained iterations
  bool temporal = false;
  double min_score = 0.05;
  NmsConfig nms;
};

/// Full per-scene inference: iterative regression, optional temporal fusion
/// (falls back to single-frame when the scene has no predecessor), NMS,
/// score filtering, visibility binarized at 0.5.
std::vector<Proposal> predict_scene(const Model& model, const Dataset& data, int scene_idx,
                                    const std::vector<Anchor>& anchors, const PredictConfig& cfg);

}  // namespace lane3d
