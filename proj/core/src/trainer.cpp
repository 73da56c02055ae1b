#include "lane3d/trainer.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

namespace lane3d {

namespace {

void anchor_positions(const std::vector<Anchor>& anchors, Eigen::MatrixXd& xs,
                      Eigen::MatrixXd& zs) {
  const int m = static_cast<int>(anchors.size());
  const int n = m > 0 ? anchors.front().size() : 0;
  xs.resize(m, n);
  zs.resize(m, n);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < n; ++k) {
      xs(j, k) = anchors[j].points[k].x;
      zs(j, k) = anchors[j].points[k].z;
    }
  }
}

std::vector<Anchor> anchors_from_forward(const std::vector<Anchor>& base,
                                         const BatchForward& fwd) {
  std::vector<Anchor> next = base;
  for (size_t j = 0; j < next.size(); ++j) {
    for (int k = 0; k < next[j].size(); ++k) {
      next[j].points[k].x += fwd.dx(static_cast<int>(j), k);
      next[j].points[k].z += fwd.dz(static_cast<int>(j), k);
    }
  }
  return next;
}

struct PreparedScene {
  const SceneData* scene = nullptr;
  Eigen::MatrixXd x_current;   // grid anchor features
  Eigen::MatrixXd x_previous;  // cross-frame features (temporal only)
  Assignment assignment;       // against the grid anchors
};

}  // namespace

TrainResult train_model(const Dataset& data, const std::vector<int>& scene_indices,
                        const TrainerConfig& cfg) {
  if (cfg.iters < 1) throw_error(ErrorCode::InvalidArgument, "iters must be >= 1");
  if (cfg.temporal && cfg.iters > 1) {
    throw_error(ErrorCode::ConfigError, "temporal fusion supports a single iteration");
  }
  if (scene_indices.empty()) throw_error(ErrorCode::InvalidArgument, "no training scenes");

  const YSampling& ys = data.ys;
  const std::vector<Anchor> anchors = build_anchor_grid(cfg.grid, ys);
  const int n = ys.size();
  const int c = data.scenes.front().fm.c;
  const int num_classes = std::max(2, data.num_categories);

  Eigen::MatrixXd grid_x, grid_z;
  anchor_positions(anchors, grid_x, grid_z);

  TrainResult result;
  result.model.grid = cfg.grid;
  result.model.ys = ys;
  result.model.num_classes = num_classes;
  result.model.channels = c;
  for (int it = 0; it < cfg.iters; ++it) {
    result.model.heads.push_back(
        HeadParams::init(n, c, num_classes, cfg.hidden, cfg.opt.seed + it));
  }
  if (cfg.temporal) result.model.fusion = FusionParams::init(cfg.fusion, n, c);

  // Grid-anchor features and assignments are fixed per scene; compute once.
  std::vector<PreparedScene> prepared;
  for (int idx : scene_indices) {
    const SceneData& scene = data.scenes[idx];
    const int prev = data.prev_index(idx);
    if (cfg.temporal && prev < 0) continue;  // no predecessor to fuse

    PreparedScene ps;
    ps.scene = &scene;
    ps.x_current = sample_anchor_matrix(anchors, scene.fm, scene.rig);
    if (cfg.temporal) {
      const SceneData& prev_scene = data.scenes[prev];
      ps.x_previous = sample_cross_frame_matrix(anchors, prev_scene.fm, prev_scene.rig,
                                                *scene.pose_to_prev);
    }
    if (scene.gts.empty()) continue;
    ps.assignment = assign_positives(scene.gts, anchors, cfg.opt.n_positives);
    prepared.push_back(std::move(ps));
  }
  if (prepared.empty()) throw_error(ErrorCode::InvalidArgument, "no usable training scenes");

  auto stage_input = [&](const PreparedScene& ps) -> Eigen::MatrixXd {
    if (!cfg.temporal) return ps.x_current;
    return fuse_batch(*result.model.fusion, ps.x_current, ps.x_previous);
  };

  auto mean_loss = [&]() {
    double sum = 0.0;
    for (const PreparedScene& ps : prepared) {
      HeadBatch batch{stage_input(ps), grid_x, grid_z, ps.scene->gts, ps.assignment};
      sum += loss_and_gradients(result.model.heads[0], batch, cfg.opt, nullptr);
    }
    return sum / static_cast<double>(prepared.size());
  };

  result.initial_loss = mean_loss();

  std::mt19937_64 order_rng(cfg.opt.seed ^ 0x74726e31u);
  std::vector<int> order(prepared.size());
  std::iota(order.begin(), order.end(), 0);

  const int decay_epoch = static_cast<int>(cfg.lr_decay_fraction * cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    TrainConfig opt = cfg.opt;
    if (epoch >= decay_epoch) opt.learning_rate *= cfg.lr_decay_factor;

    std::shuffle(order.begin(), order.end(), order_rng);
    double epoch_sum = 0.0;
    for (int oi : order) {
      PreparedScene& ps = prepared[oi];
      const Eigen::MatrixXd x = stage_input(ps);
      HeadBatch batch{x, grid_x, grid_z, ps.scene->gts, ps.assignment};

      if (cfg.temporal) {
        HeadGradients grads;
        epoch_sum += loss_and_gradients(result.model.heads[0], batch, opt, &grads, true);
        adam_step(result.model.heads[0].tensors(), grads.tensors, result.model.heads[0].moments,
                  result.model.heads[0].step, opt);
        std::vector<Eigen::MatrixXd> fusion_grads;
        fusion_backward(*result.model.fusion, ps.x_current, ps.x_previous, grads.d_input,
                        fusion_grads);
        adam_step(result.model.fusion->tensors(), fusion_grads, result.model.fusion->moments,
                  result.model.fusion->step, opt);
      } else {
        epoch_sum += backward_and_step(result.model.heads[0], batch, opt);
      }

      // Later stages re-anchor on the previous stage's proposals.
      std::vector<Anchor> stage_anchors = anchors;
      Eigen::MatrixXd stage_x = grid_x, stage_z = grid_z;
      for (int it = 1; it < cfg.iters; ++it) {
        const Eigen::MatrixXd cur =
            it == 1 ? x : sample_anchor_matrix(stage_anchors, ps.scene->fm, ps.scene->rig);
        const BatchForward fwd = forward_batch(result.model.heads[it - 1], cur);
        stage_anchors = anchors_from_forward(stage_anchors, fwd);
        anchor_positions(stage_anchors, stage_x, stage_z);
        const Eigen::MatrixXd x_it =
            sample_anchor_matrix(stage_anchors, ps.scene->fm, ps.scene->rig);
        HeadBatch batch_it{x_it, stage_x, stage_z, ps.scene->gts,
                           assign_positives(ps.scene->gts, stage_anchors, opt.n_positives)};
        backward_and_step(result.model.heads[it], batch_it, opt);
      }
    }
    result.epoch_loss.push_back(epoch_sum / static_cast<double>(prepared.size()));
  }

  result.final_loss = mean_loss();
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoint I/O.

namespace {

constexpr char kCheckpointMagic[4] = {'A', '3', 'L', 'C'};

FeatureMap tensor_to_block(const Eigen::MatrixXd& t) {
  FeatureMap block(static_cast<int>(t.rows()), static_cast<int>(t.cols()), 1);
  for (int r = 0; r < t.rows(); ++r) {
    for (int c = 0; c < t.cols(); ++c) block.at(r, c, 0) = static_cast<float>(t(r, c));
  }
  return block;
}

Eigen::MatrixXd block_to_tensor(const FeatureMap& block) {
  Eigen::MatrixXd t(block.h_f, block.w_f);
  for (int r = 0; r < block.h_f; ++r) {
    for (int c = 0; c < block.w_f; ++c) t(r, c) = block.at(r, c, 0);
  }
  return t;
}

}  // namespace

void write_checkpoint(const std::string& path, const Model& model,
                      const nlohmann::json& extra_meta) {
  if (model.heads.empty()) throw_error(ErrorCode::InvalidArgument, "model has no heads");
  const HeadParams& h0 = model.heads.front();

  nlohmann::json header;
  header["schema_version"] = 1;
  header["iters"] = static_cast<int>(model.heads.size());
  header["head_shape"] = {{"n_points", h0.n_points},
                          {"channels", h0.channels},
                          {"num_classes", h0.num_classes},
                          {"hidden", h0.hidden}};
  if (model.fusion.has_value()) {
    header["fusion"] = to_string(model.fusion->strategy);
  } else {
    header["fusion"] = nullptr;
  }
  to_json(header["grid"], model.grid);
  header["y_samples"] = model.ys.values();
  header["num_classes"] = model.num_classes;
  header["meta"] = extra_meta;

  auto tensor_list = nlohmann::json::array();
  for (size_t i = 0; i < model.heads.size(); ++i) {
    for (const std::string& name : HeadParams::tensor_names()) {
      tensor_list.push_back("head" + std::to_string(i) + "/" + name);
    }
  }
  if (model.fusion.has_value()) {
    tensor_list.push_back(model.fusion->strategy == FusionStrategy::WeightedSum
                              ? "fusion/point_weights"
                              : "fusion/linear");
  }
  header["tensors"] = tensor_list;

  const std::string header_str = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_error(ErrorCode::IoError, "cannot open " + path + " for writing");
  out.write(kCheckpointMagic, 4);
  const uint32_t len = static_cast<uint32_t>(header_str.size());
  const unsigned char len_bytes[4] = {
      static_cast<unsigned char>(len & 0xff), static_cast<unsigned char>((len >> 8) & 0xff),
      static_cast<unsigned char>((len >> 16) & 0xff),
      static_cast<unsigned char>((len >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(len_bytes), 4);
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));

  for (const HeadParams& head : model.heads) {
    for (const Eigen::MatrixXd* t : head.tensors()) {
      write_feature_map_block(out, tensor_to_block(*t));
    }
  }
  if (model.fusion.has_value()) {
    for (const Eigen::MatrixXd* t : model.fusion->tensors()) {
      write_feature_map_block(out, tensor_to_block(*t));
    }
  }
  if (!out) throw_error(ErrorCode::IoError, "failed writing " + path);
}

Model read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_error(ErrorCode::IoError, "cannot open " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw_error(ErrorCode::IoError, "bad checkpoint magic");
  }
  unsigned char len_bytes[4];
  in.read(reinterpret_cast<char*>(len_bytes), 4);
  if (!in) throw_error(ErrorCode::IoError, "truncated checkpoint header");
  const uint32_t len = static_cast<uint32_t>(len_bytes[0]) |
                       (static_cast<uint32_t>(len_bytes[1]) << 8) |
                       (static_cast<uint32_t>(len_bytes[2]) << 16) |
                       (static_cast<uint32_t>(len_bytes[3]) << 24);
  std::string header_str(len, '\0');
  in.read(header_str.data(), len);
  if (!in) throw_error(ErrorCode::IoError, "truncated checkpoint header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw_error(ErrorCode::IoError, std::string("bad checkpoint header: ") + e.what());
  }

  Model model;
  const auto& shape = header.at("head_shape");
  const int iters = header.at("iters").get<int>();
  for (int i = 0; i < iters; ++i) {
    model.heads.push_back(HeadParams::init(
        shape.at("n_points").get<int>(), shape.at("channels").get<int>(),
        shape.at("num_classes").get<int>(), shape.at("hidden").get<int>(), 0));
  }
  from_json(header.at("grid"), model.grid);
  model.ys = YSampling(header.at("y_samples").get<std::vector<double>>());
  model.num_classes = header.at("num_classes").get<int>();
  model.channels = shape.at("channels").get<int>();

  for (HeadParams& head : model.heads) {
    for (Eigen::MatrixXd* t : head.tensors()) {
      const Eigen::MatrixXd loaded = block_to_tensor(read_feature_map_block(in));
      if (loaded.rows() != t->rows() || loaded.cols() != t->cols()) {
        throw_error(ErrorCode::IoError, "checkpoint tensor shape mismatch");
      }
      *t = loaded;
    }
  }
  if (!header.at("fusion").is_null()) {
    FusionParams fusion = FusionParams::init(
        fusion_strategy_from_string(header.at("fusion").get<std::string>()),
        shape.at("n_points").get<int>(), shape.at("channels").get<int>());
    for (Eigen::MatrixXd* t : fusion.tensors()) {
      *t = block_to_tensor(read_feature_map_block(in));
    }
    model.fusion = std::move(fusion);
  }
  return model;
}

std::vector<Proposal> predict_scene(const Model& model, const Dataset& data, int scene_idx,
                                    const std::vector<Anchor>& anchors,
                                    const PredictConfig& cfg) {
  const SceneData& scene = data.scenes[scene_idx];
  const int iters = cfg.iters > 0 ? cfg.iters : static_cast<int>(model.heads.size());
  if (iters > static_cast<int>(model.heads.size())) {
    throw_error(ErrorCode::ConfigError, "requested more iterations than the checkpoint holds");
  }

  TemporalContext ctx;
  const TemporalContext* ctx_ptr = nullptr;
  const int prev = data.prev_index(scene_idx);
  if (cfg.temporal && model.fusion.has_value()) {
    if (prev >= 0) {
      ctx.prev_fm = &data.scenes[prev].fm;
      ctx.prev_rig = data.scenes[prev].rig;
      ctx.pose_to_prev = *scene.pose_to_prev;
    } else {
      // First frame of a sequence: fuse the scene with itself.
      ctx.prev_fm = &scene.fm;
      ctx.prev_rig = scene.rig;
      ctx.pose_to_prev = RigidTransform::identity();
    }
    ctx.fusion = &*model.fusion;
    ctx_ptr = &ctx;
  }

  std::vector<Proposal> proposals =
      predict_iterative(scene.fm, anchors, model.heads, scene.rig, iters, model.ys, ctx_ptr);

  std::vector<Proposal> scored;
  for (Proposal& p : proposals) {
    if (p.score < cfg.min_score) continue;
    for (double& v : p.lane.vis) v = v >= 0.5 ? 1.0 : 0.0;
    scored.push_back(std::move(p));
  }
  return nms(scored, cfg.nms);
}

}  // namespace lane3d
