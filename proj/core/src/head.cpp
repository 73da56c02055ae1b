#include "lane3d/head.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace lane3d {

namespace {

constexpr double kProbClamp = 1e-7;

double uniform01(std::mt19937_64& rng) {
  // Top 53 bits, portable across standard library implementations.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

void fill_uniform(Eigen::MatrixXd& m, std::mt19937_64& rng, double bound) {
  for (int c = 0; c < m.cols(); ++c) {
    for (int r = 0; r < m.rows(); ++r) m(r, c) = uniform(rng, -bound, bound);
  }
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd p(z.rows(), z.cols());
  for (int r = 0; r < z.rows(); ++r) {
    const double zmax = z.row(r).maxCoeff();
    p.row(r) = (z.row(r).array() - zmax).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

std::vector<int> class_targets(const HeadBatch& batch, int num_anchors) {
  std::vector<int> target(num_anchors, 0);
  std::vector<char> assigned(num_anchors, 0);
  for (const auto& [gi, ai] : batch.assignment.pairs) {
    if (ai < 0 || ai >= num_anchors || gi < 0 || gi >= static_cast<int>(batch.gts.size())) {
      throw_error(ErrorCode::ShapeMismatch, "assignment index out of range");
    }
    if (!assigned[ai]) {
      target[ai] = batch.gts[gi].category;
      assigned[ai] = 1;
    }
  }
  return target;
}

}  // namespace

HeadParams HeadParams::init(int n_points, int channels, int num_classes, int hidden,
                            uint64_t seed) {
  if (n_points < 1 || channels < 1 || num_classes < 2 || hidden < 1) {
    throw_error(ErrorCode::InvalidArgument, "bad head shape");
  }
  HeadParams p;
  p.n_points = n_points;
  p.channels = channels;
  p.num_classes = num_classes;
  p.hidden = hidden;

  const int d = n_points * channels;
  std::mt19937_64 rng(seed ^ 0x68656164u);  // distinct stream per purpose

  p.w1.resize(d, hidden);
  fill_uniform(p.w1, rng, std::sqrt(6.0 / (d + hidden)));
  p.b1 = Eigen::MatrixXd::Zero(1, hidden);
  p.w_cls.resize(hidden, num_classes);
  fill_uniform(p.w_cls, rng, 0.01);
  p.b_cls = Eigen::MatrixXd::Zero(1, num_classes);
  p.w_off.resize(hidden, 2 * n_points);
  fill_uniform(p.w_off, rng, 0.01);
  p.b_off = Eigen::MatrixXd::Zero(1, 2 * n_points);
  p.w_vis.resize(hidden, n_points);
  fill_uniform(p.w_vis, rng, 0.01);
  p.b_vis = Eigen::MatrixXd::Zero(1, n_points);

  for (Eigen::MatrixXd* t : p.tensors()) {
    AdamState s;
    s.m = Eigen::MatrixXd::Zero(t->rows(), t->cols());
    s.v = Eigen::MatrixXd::Zero(t->rows(), t->cols());
    p.moments.push_back(std::move(s));
  }
  return p;
}

std::vector<Eigen::MatrixXd*> HeadParams::tensors() {
  return {&w1, &b1, &w_cls, &b_cls, &w_off, &b_off, &w_vis, &b_vis};
}

std::vector<const Eigen::MatrixXd*> HeadParams::tensors() const {
  return {&w1, &b1, &w_cls, &b_cls, &w_off, &b_off, &w_vis, &b_vis};
}

const std::vector<std::string>& HeadParams::tensor_names() {
  static const std::vector<std::string> names = {"w1",    "b1",    "w_cls", "b_cls",
                                                 "w_off", "b_off", "w_vis", "b_vis"};
  return names;
}

long HeadParams::parameter_count() const {
  long count = 0;
  for (const Eigen::MatrixXd* t : tensors()) count += t->size();
  return count;
}

BatchForward forward_batch(const HeadParams& params, const Eigen::MatrixXd& x) {
  if (x.cols() != params.n_points * params.channels) {
    throw_error(ErrorCode::ShapeMismatch, "feature width does not match head input");
  }
  BatchForward f;
  f.hidden_pre = x * params.w1;
  f.hidden_pre.rowwise() += params.b1.row(0);
  f.hidden = f.hidden_pre.cwiseMax(0.0);

  Eigen::MatrixXd cls_logits = f.hidden * params.w_cls;
  cls_logits.rowwise() += params.b_cls.row(0);
  f.probs = softmax_rows(cls_logits);

  Eigen::MatrixXd off = f.hidden * params.w_off;
  off.rowwise() += params.b_off.row(0);
  f.dx = off.leftCols(params.n_points);
  f.dz = off.rightCols(params.n_points);

  Eigen::MatrixXd vis_logits = f.hidden * params.w_vis;
  vis_logits.rowwise() += params.b_vis.row(0);
  f.vis.resize(vis_logits.rows(), vis_logits.cols());
  for (int r = 0; r < vis_logits.rows(); ++r) {
    for (int c = 0; c < vis_logits.cols(); ++c) f.vis(r, c) = sigmoid(vis_logits(r, c));
  }
  return f;
}

Prediction forward(const AnchorFeature& feat, const HeadParams& params) {
  if (feat.points() != params.n_points || feat.channels() != params.channels) {
    throw_error(ErrorCode::ShapeMismatch, "anchor feature shape does not match head");
  }
  Eigen::MatrixXd x(1, params.n_points * params.channels);
  x.row(0) = feat.flatten();
  const BatchForward f = forward_batch(params, x);

  Prediction out;
  out.class_probs.resize(params.num_classes);
  for (int l = 0; l < params.num_classes; ++l) out.class_probs[l] = f.probs(0, l);
  out.dx.resize(params.n_points);
  out.dz.resize(params.n_points);
  out.vis.resize(params.n_points);
  for (int k = 0; k < params.n_points; ++k) {
    out.dx[k] = f.dx(0, k);
    out.dz[k] = f.dz(0, k);
    out.vis[k] = f.vis(0, k);
  }
  return out;
}

double classification_loss(const BatchForward& fwd, const HeadBatch& batch,
                           const TrainConfig& cfg) {
  const int m = static_cast<int>(fwd.probs.rows());
  if (m == 0) return 0.0;
  const std::vector<int> target = class_targets(batch, m);

  double loss = 0.0;
  for (int j = 0; j < m; ++j) {
    const double p = std::clamp(fwd.probs(j, target[j]), kProbClamp, 1.0 - kProbClamp);
    loss += -cfg.focal_alpha * std::pow(1.0 - p, cfg.focal_gamma) * std::log(p);
  }
  return loss / m;
}

double regression_loss(const BatchForward& fwd, const HeadBatch& batch) {
  const auto& pairs = batch.assignment.pairs;
  if (pairs.empty()) return 0.0;

  double loss = 0.0;
  for (const auto& [gi, ai] : pairs) {
    const Lane3D& gt = batch.gts[gi];
    for (int k = 0; k < gt.size(); ++k) {
      const double gv = gt.vis[k];
      loss += std::abs(gv * (batch.anchor_x(ai, k) + fwd.dx(ai, k) - gt.xs[k]));
      loss += std::abs(gv * (batch.anchor_z(ai, k) + fwd.dz(ai, k) - gt.zs[k]));
      loss += std::abs(gv - fwd.vis(ai, k));
    }
  }
  return loss / static_cast<double>(pairs.size());
}

double total_loss(const BatchForward& fwd, const HeadBatch& batch, const TrainConfig& cfg) {
  return cfg.lambda_cls * classification_loss(fwd, batch, cfg) +
         cfg.lambda_reg * regression_loss(fwd, batch);
}

double loss_and_gradients(const HeadParams& params, const HeadBatch& batch,
                          const TrainConfig& cfg, HeadGradients* grads, bool want_input_grad) {
  const int m = static_cast<int>(batch.x.rows());
  const int n = params.n_points;
  if (batch.anchor_x.rows() != m || batch.anchor_x.cols() != n || batch.anchor_z.rows() != m ||
      batch.anchor_z.cols() != n) {
    throw_error(ErrorCode::ShapeMismatch, "anchor position matrices do not match batch");
  }

  const BatchForward fwd = forward_batch(params, batch.x);
  const double loss = total_loss(fwd, batch, cfg);
  if (grads == nullptr) return loss;

  const std::vector<int> target = class_targets(batch, m);

  // d loss / d class logits, via the focal loss and softmax.
  Eigen::MatrixXd d_cls = Eigen::MatrixXd::Zero(m, params.num_classes);
  if (m > 0 && cfg.lambda_cls != 0.0) {
    for (int j = 0; j < m; ++j) {
      const int t = target[j];
      const double p_raw = fwd.probs(j, t);
      if (p_raw <= kProbClamp || p_raw >= 1.0 - kProbClamp) continue;  // clamp is flat
      const double one_minus = 1.0 - p_raw;
      const double df_dp = cfg.focal_alpha * cfg.focal_gamma *
                               std::pow(one_minus, cfg.focal_gamma - 1.0) * std::log(p_raw) -
                           cfg.focal_alpha * std::pow(one_minus, cfg.focal_gamma) / p_raw;
      const double scale = cfg.lambda_cls * df_dp / m;
      d_cls.row(j) = -scale * p_raw * fwd.probs.row(j);
      d_cls(j, t) += scale * p_raw;
    }
  }

  // d loss / d offsets and d loss / d visibility logits.
  Eigen::MatrixXd d_off = Eigen::MatrixXd::Zero(m, 2 * n);
  Eigen::MatrixXd d_vis_logit = Eigen::MatrixXd::Zero(m, n);
  const auto& pairs = batch.assignment.pairs;
  if (!pairs.empty() && cfg.lambda_reg != 0.0) {
    const double scale = cfg.lambda_reg / static_cast<double>(pairs.size());
    for (const auto& [gi, ai] : pairs) {
      const Lane3D& gt = batch.gts[gi];
      for (int k = 0; k < n; ++k) {
        const double gv = gt.vis[k];
        const double rx = gv * (batch.anchor_x(ai, k) + fwd.dx(ai, k) - gt.xs[k]);
        const double rz = gv * (batch.anchor_z(ai, k) + fwd.dz(ai, k) - gt.zs[k]);
        d_off(ai, k) += scale * gv * sign(rx);
        d_off(ai, n + k) += scale * gv * sign(rz);
        const double s = fwd.vis(ai, k);
        d_vis_logit(ai, k) += scale * -sign(gv - s) * s * (1.0 - s);
      }
    }
  }

  // Backprop into the shared hidden layer.
  Eigen::MatrixXd d_hidden = d_cls * params.w_cls.transpose() +
                             d_off * params.w_off.transpose() +
                             d_vis_logit * params.w_vis.transpose();
  const Eigen::MatrixXd relu_mask = (fwd.hidden_pre.array() > 0.0).cast<double>();
  const Eigen::MatrixXd d_hidden_pre = d_hidden.array() * relu_mask.array();

  grads->tensors.clear();
  grads->tensors.reserve(8);
  grads->tensors.push_back(batch.x.transpose() * d_hidden_pre);      // w1
  grads->tensors.push_back(d_hidden_pre.colwise().sum());            // b1
  grads->tensors.push_back(fwd.hidden.transpose() * d_cls);          // w_cls
  grads->tensors.push_back(d_cls.colwise().sum());                   // b_cls
  grads->tensors.push_back(fwd.hidden.transpose() * d_off);          // w_off
  grads->tensors.push_back(d_off.colwise().sum());                   // b_off
  grads->tensors.push_back(fwd.hidden.transpose() * d_vis_logit);    // w_vis
  grads->tensors.push_back(d_vis_logit.colwise().sum());             // b_vis

  if (want_input_grad) grads->d_input = d_hidden_pre * params.w1.transpose();
  return loss;
}

void adam_step(std::vector<Eigen::MatrixXd*> tensors, const std::vector<Eigen::MatrixXd>& grads,
               std::vector<AdamState>& moments, long& step, const TrainConfig& cfg) {
  if (tensors.size() != grads.size() || tensors.size() != moments.size()) {
    throw_error(ErrorCode::ShapeMismatch, "optimizer state does not match gradients");
  }
  for (const Eigen::MatrixXd& g : grads) {
    if (!g.allFinite()) throw_error(ErrorCode::NonFiniteGradient, "diverged configuration");
  }
  ++step;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
  for (size_t i = 0; i < tensors.size(); ++i) {
    AdamState& s = moments[i];
    s.m = cfg.adam_beta1 * s.m + (1.0 - cfg.adam_beta1) * grads[i];
    s.v = cfg.adam_beta2 * s.v + (1.0 - cfg.adam_beta2) * grads[i].cwiseProduct(grads[i]);
    const Eigen::ArrayXXd m_hat = s.m.array() / bc1;
    const Eigen::ArrayXXd v_hat = s.v.array() / bc2;
    // Decoupled weight decay: decay is applied to the parameter directly,
    // not mixed into the gradient moments.
    tensors[i]->array() -= cfg.learning_rate * (m_hat / (v_hat.sqrt() + cfg.adam_eps) +
                                                cfg.weight_decay * tensors[i]->array());
  }
}

double backward_and_step(HeadParams& params, const HeadBatch& batch, const TrainConfig& cfg) {
  HeadGradients grads;
  const double loss = loss_and_gradients(params, batch, cfg, &grads);
  adam_step(params.tensors(), grads.tensors, params.moments, params.step, cfg);
  return loss;
}

double gradient_check(const HeadParams& params, const HeadBatch& batch, const TrainConfig& cfg,
                      const GradCheckOptions& opts) {
  HeadGradients grads;
  loss_and_gradients(params, batch, cfg, &grads);

  // Flatten analytic gradients in tensors() order (Eigen's native layout).
  std::vector<double> analytic;
  for (const Eigen::MatrixXd& g : grads.tensors) {
    analytic.insert(analytic.end(), g.data(), g.data() + g.size());
  }
  const long total = static_cast<long>(analytic.size());
  if (opts.mutate_flat_index >= total) {
    throw_error(ErrorCode::InvalidArgument, "mutation index out of range");
  }

  std::vector<long> indices(total);
  std::iota(indices.begin(), indices.end(), 0);
  std::mt19937_64 rng(opts.seed ^ 0x67636b31u);
  std::shuffle(indices.begin(), indices.end(), rng);
  const long n_check = std::min<long>(total, opts.min_samples);
  indices.resize(n_check);
  if (opts.mutate_flat_index >= 0 &&
      std::find(indices.begin(), indices.end(), opts.mutate_flat_index) == indices.end()) {
    indices[0] = opts.mutate_flat_index;
  }

  HeadParams probe = params;
  const std::vector<Eigen::MatrixXd*> probe_tensors = probe.tensors();

  double max_rel_err = 0.0;
  for (long flat : indices) {
    long offset = flat;
    size_t ti = 0;
    while (offset >= probe_tensors[ti]->size()) {
      offset -= probe_tensors[ti]->size();
      ++ti;
    }
    double* slot = probe_tensors[ti]->data() + offset;
    const double saved = *slot;

    *slot = saved + opts.fd_step;
    const double loss_hi = loss_and_gradients(probe, batch, cfg, nullptr);
    *slot = saved - opts.fd_step;
    const double loss_lo = loss_and_gradients(probe, batch, cfg, nullptr);
    *slot = saved;

    const double numeric = (loss_hi - loss_lo) / (2.0 * opts.fd_step);
    double a = analytic[flat];
    if (flat == opts.mutate_flat_index) a *= opts.mutate_scale;
    const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    max_rel_err = std::max(max_rel_err, rel);
  }
  return max_rel_err;
}

// ---------------------------------------------------------------------------
// Temporal fusion.

FusionStrategy fusion_strategy_from_string(const std::string& name) {
  if (name == "weighted_sum" || name == "weighted") return FusionStrategy::WeightedSum;
  if (name == "linear" || name == "linear_fusion") return FusionStrategy::LinearMap;
  throw_error(ErrorCode::UnknownStrategy, "unknown fusion strategy: " + name);
}

std::string to_string(FusionStrategy strategy) {
  switch (strategy) {
    case FusionStrategy::WeightedSum: return "weighted_sum";
    case FusionStrategy::LinearMap: return "linear";
  }
  throw_error(ErrorCode::UnknownStrategy, "unknown fusion strategy value");
}

FusionParams FusionParams::init(FusionStrategy strategy, int n_points, int channels) {
  FusionParams f;
  f.strategy = strategy;
  f.n_points = n_points;
  f.channels = channels;
  switch (strategy) {
    case FusionStrategy::WeightedSum:
      // Start on the current frame; training moves weight to the previous
      // frame where it helps.
      f.point_weights.resize(n_points, 2);
      f.point_weights.col(0).setConstant(1.0);
      f.point_weights.col(1).setConstant(0.0);
      break;
    case FusionStrategy::LinearMap:
      f.linear = Eigen::MatrixXd::Zero(2 * channels, channels);
      f.linear.topRows(channels) = Eigen::MatrixXd::Identity(channels, channels);
      break;
    default:
      throw_error(ErrorCode::UnknownStrategy, "unknown fusion strategy value");
  }
  for (Eigen::MatrixXd* t : f.tensors()) {
    AdamState s;
    s.m = Eigen::MatrixXd::Zero(t->rows(), t->cols());
    s.v = Eigen::MatrixXd::Zero(t->rows(), t->cols());
    f.moments.push_back(std::move(s));
  }
  return f;
}

std::vector<Eigen::MatrixXd*> FusionParams::tensors() {
  if (strategy == FusionStrategy::WeightedSum) return {&point_weights};
  return {&linear};
}

std::vector<const Eigen::MatrixXd*> FusionParams::tensors() const {
  if (strategy == FusionStrategy::WeightedSum) return {&point_weights};
  return {&linear};
}

Eigen::MatrixXd fuse_batch(const FusionParams& fusion, const Eigen::MatrixXd& current,
                           const Eigen::MatrixXd& previous) {
  if (current.rows() != previous.rows() || current.cols() != previous.cols()) {
    throw_error(ErrorCode::ShapeMismatch, "fusion inputs differ in shape");
  }
  const int c = fusion.channels;
  const int n = fusion.n_points;
  if (current.cols() != static_cast<long>(n) * c) {
    throw_error(ErrorCode::ShapeMismatch, "fusion input width does not match N*C");
  }

  Eigen::MatrixXd fused(current.rows(), current.cols());
  switch (fusion.strategy) {
    case FusionStrategy::WeightedSum:
      for (int k = 0; k < n; ++k) {
        fused.middleCols(k * c, c) = fusion.point_weights(k, 0) * current.middleCols(k * c, c) +
                                     fusion.point_weights(k, 1) * previous.middleCols(k * c, c);
      }
      break;
    case FusionStrategy::LinearMap: {
      const auto a = fusion.linear.topRows(c);
      const auto b = fusion.linear.bottomRows(c);
      for (int k = 0; k < n; ++k) {
        fused.middleCols(k * c, c) =
            current.middleCols(k * c, c) * a + previous.middleCols(k * c, c) * b;
      }
      break;
    }
    default:
      throw_error(ErrorCode::UnknownStrategy, "unknown fusion strategy value");
  }
  return fused;
}

void fusion_backward(const FusionParams& fusion, const Eigen::MatrixXd& current,
                     const Eigen::MatrixXd& previous, const Eigen::MatrixXd& d_fused,
                     std::vector<Eigen::MatrixXd>& grads) {
  const int c = fusion.channels;
  const int n = fusion.n_points;
  grads.clear();
  switch (fusion.strategy) {
    case FusionStrategy::WeightedSum: {
      Eigen::MatrixXd dw = Eigen::MatrixXd::Zero(n, 2);
      for (int k = 0; k < n; ++k) {
        dw(k, 0) = d_fused.middleCols(k * c, c)
                       .cwiseProduct(current.middleCols(k * c, c))
                       .sum();
        dw(k, 1) = d_fused.middleCols(k * c, c)
                       .cwiseProduct(previous.middleCols(k * c, c))
                       .sum();
      }
      grads.push_back(std::move(dw));
      break;
    }
    case FusionStrategy::LinearMap: {
      Eigen::MatrixXd dl = Eigen::MatrixXd::Zero(2 * c, c);
      for (int k = 0; k < n; ++k) {
        dl.topRows(c) += current.middleCols(k * c, c).transpose() * d_fused.middleCols(k * c, c);
        dl.bottomRows(c) +=
            previous.middleCols(k * c, c).transpose() * d_fused.middleCols(k * c, c);
      }
      grads.push_back(std::move(dl));
      break;
    }
    default:
      throw_error(ErrorCode::UnknownStrategy, "unknown fusion strategy value");
  }
}

AnchorFeature fuse_temporal(const AnchorFeature& current, const AnchorFeature& previous,
                            const FusionParams& fusion) {
  if (current.points() != previous.points() || current.channels() != previous.channels()) {
    throw_error(ErrorCode::ShapeMismatch, "temporal features differ in shape");
  }
  if (current.points() != fusion.n_points || current.channels() != fusion.channels) {
    throw_error(ErrorCode::ShapeMismatch, "features do not match fusion parameters");
  }
  Eigen::MatrixXd cur(1, current.per_point.size());
  Eigen::MatrixXd prev(1, previous.per_point.size());
  cur.row(0) = current.flatten();
  prev.row(0) = previous.flatten();
  const Eigen::MatrixXd fused = fuse_batch(fusion, cur, prev);

  AnchorFeature out;
  out.per_point.resize(current.points(), current.channels());
  for (int k = 0; k < current.points(); ++k) {
    out.per_point.row(k) = fused.row(0).segment(k * current.channels(), current.channels());
  }
  out.valid_mask.resize(current.valid_mask.size());
  for (size_t k = 0; k < current.valid_mask.size(); ++k) {
    out.valid_mask[k] = current.valid_mask[k] || previous.valid_mask[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inference.

std::vector<Proposal> predict_iterative(const FeatureMap& fm, const std::vector<Anchor>& anchors,
                                        const std::vector<HeadParams>& params_per_iter,
                                        const CameraRig& rig, int iters, const YSampling& ys,
                                        const TemporalContext* temporal) {
  if (iters < 1) throw_error(ErrorCode::InvalidArgument, "iters must be >= 1");
  if (static_cast<int>(params_per_iter.size()) < iters) {
    throw_error(ErrorCode::ShapeMismatch, "need one parameter set per iteration");
  }

  const int m = static_cast<int>(anchors.size());
  const int n = ys.size();
  std::vector<Anchor> current = anchors;
  Eigen::MatrixXd pos_x(m, n), pos_z(m, n);
  BatchForward fwd;

  for (int it = 0; it < iters; ++it) {
    Eigen::MatrixXd x = sample_anchor_matrix(current, fm, rig);
    if (temporal != nullptr && temporal->prev_fm != nullptr && temporal->fusion != nullptr) {
      const Eigen::MatrixXd prev = sample_cross_frame_matrix(
          current, *temporal->prev_fm, temporal->prev_rig, temporal->pose_to_prev);
      x = fuse_batch(*temporal->fusion, x, prev);
    }
    fwd = forward_batch(params_per_iter[it], x);
    for (int j = 0; j < m; ++j) {
      for (int k = 0; k < n; ++k) {
        pos_x(j, k) = current[j].points[k].x + fwd.dx(j, k);
        pos_z(j, k) = current[j].points[k].z + fwd.dz(j, k);
      }
    }
    if (it + 1 < iters) {
      for (int j = 0; j < m; ++j) {
        for (int k = 0; k < n; ++k) {
          current[j].points[k].x = pos_x(j, k);
          current[j].points[k].z = pos_z(j, k);
        }
      }
    }
  }

  std::vector<Proposal> proposals(m);
  const int num_classes = params_per_iter[iters - 1].num_classes;
  for (int j = 0; j < m; ++j) {
    Proposal& p = proposals[j];
    p.lane.ys = ys;
    p.lane.xs.resize(n);
    p.lane.zs.resize(n);
    p.lane.vis.resize(n);
    for (int k = 0; k < n; ++k) {
      p.lane.xs[k] = pos_x(j, k);
      p.lane.zs[k] = pos_z(j, k);
      p.lane.vis[k] = fwd.vis(j, k);
    }
    p.class_probs.resize(num_classes);
    for (int l = 0; l < num_classes; ++l) p.class_probs[l] = fwd.probs(j, l);
    p.score = score_from_probs(p.class_probs);
    p.lane.category = category_from_probs(p.class_probs);
  }
  return proposals;
}

}  // namespace lane3d
