#include "lane3d/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lane3d {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool in_close(double y, const MetricsConfig& cfg) { return y > 0.0 && y <= cfg.close_max; }
bool in_far(double y, const MetricsConfig& cfg) { return y > cfg.close_max && y <= cfg.far_max; }

}  // namespace

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw_error(ErrorCode::ShapeMismatch, "assignment matrix must be square");
  if (n == 0) return {};

  // Potentials-based Hungarian algorithm, 1-indexed internally.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

double pairwise_cost(const Lane3D& pred, const Lane3D& gt, const MetricsConfig& cfg) {
  if (pred.size() != gt.size()) {
    throw_error(ErrorCode::LengthMismatch, "pred and gt sample counts differ");
  }
  double sum = 0.0;
  for (int k = 0; k < gt.size(); ++k) {
    if (gt.vis[k] < cfg.gt_vis_threshold) continue;
    const double d = std::hypot(pred.xs[k] - gt.xs[k], pred.zs[k] - gt.zs[k]);
    sum += cfg.squared_cost ? d * d : d;
  }
  return std::sqrt(sum);
}

MatchResult match_lanes(const std::vector<Proposal>& preds, const std::vector<Lane3D>& gts,
                        const MetricsConfig& cfg) {
  MatchResult result;
  const int np = static_cast<int>(preds.size());
  const int ng = static_cast<int>(gts.size());
  if (np == 0 || ng == 0) {
    for (int i = 0; i < np; ++i) result.unmatched_preds.push_back(i);
    for (int g = 0; g < ng; ++g) result.unmatched_gts.push_back(g);
    return result;
  }

  const int n_samples = gts.front().size();
  const double unmatched_cost = cfg.tp_dist * std::sqrt(static_cast<double>(n_samples));

  // Square (np+ng) matrix: dummy columns absorb unmatched predictions, dummy
  // rows absorb unmatched ground truths, dummy-dummy pairs are free.
  const int n = np + ng;
  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i < np && j < ng) {
        cost(i, j) = pairwise_cost(preds[i].lane, gts[j], cfg);
      } else if (i < np || j < ng) {
        cost(i, j) = unmatched_cost;
      } else {
        cost(i, j) = 0.0;
      }
    }
  }

  const std::vector<int> row_to_col = solve_assignment(cost);
  std::vector<char> gt_matched(ng, 0);
  for (int i = 0; i < np; ++i) {
    const int j = row_to_col[i];
    if (j >= ng) {
      result.unmatched_preds.push_back(i);
      continue;
    }
    MatchResult::Pair pair;
    pair.pred_index = i;
    pair.gt_index = j;
    pair.point_distances.resize(n_samples);
    for (int k = 0; k < n_samples; ++k) {
      pair.point_distances[k] =
          std::hypot(preds[i].lane.xs[k] - gts[j].xs[k], preds[i].lane.zs[k] - gts[j].zs[k]);
    }
    result.pairs.push_back(std::move(pair));
    gt_matched[j] = 1;
  }
  for (int j = 0; j < ng; ++j) {
    if (!gt_matched[j]) result.unmatched_gts.push_back(j);
  }
  return result;
}

namespace {

// Per-prediction record carried into the global threshold sweep.
struct PredRecord {
  double score = 0.0;
  bool tp_candidate = false;  // matched and passed the 75 % / 1.5 m gate
  bool category_correct = false;
  double x_close_sum = 0.0, x_far_sum = 0.0, z_close_sum = 0.0, z_far_sum = 0.0;
  int close_count = 0, far_count = 0;
};

}  // namespace

MetricsReport compute_metrics(const std::vector<ScenePair>& scenes, const MetricsConfig& cfg) {
  std::vector<PredRecord> records;
  int total_gts = 0;

  for (const ScenePair& scene : scenes) {
    total_gts += static_cast<int>(scene.gts.size());
    const MatchResult match = match_lanes(scene.preds, scene.gts, cfg);

    std::vector<PredRecord> scene_records(scene.preds.size());
    for (size_t i = 0; i < scene.preds.size(); ++i) {
      scene_records[i].score = scene.preds[i].score;
    }
    for (const MatchResult::Pair& pair : match.pairs) {
      const Lane3D& gt = scene.gts[pair.gt_index];
      const Proposal& pred = scene.preds[pair.pred_index];
      PredRecord& rec = scene_records[pair.pred_index];

      int evaluated = 0;
      int within = 0;
      for (int k = 0; k < gt.size(); ++k) {
        if (gt.vis[k] < cfg.gt_vis_threshold) continue;
        ++evaluated;
        if (pair.point_distances[k] < cfg.tp_dist) ++within;
        const double y = gt.ys[k];
        const double xe = std::abs(pred.lane.xs[k] - gt.xs[k]);
        const double ze = std::abs(pred.lane.zs[k] - gt.zs[k]);
        if (in_close(y, cfg)) {
          rec.x_close_sum += xe;
          rec.z_close_sum += ze;
          ++rec.close_count;
        } else if (in_far(y, cfg)) {
          rec.x_far_sum += xe;
          rec.z_far_sum += ze;
          ++rec.far_count;
        }
      }
      rec.tp_candidate = evaluated > 0 && within >= cfg.tp_point_frac * evaluated;
      rec.category_correct = pred.lane.category == gt.category;
    }
    records.insert(records.end(), scene_records.begin(), scene_records.end());
  }

  MetricsReport report;
  report.num_preds = static_cast<int>(records.size());
  report.num_gts = total_gts;
  if (records.empty() || total_gts == 0) {
    // Recall-0 convention: nothing to sweep.
    return report;
  }

  std::stable_sort(records.begin(), records.end(),
                   [](const PredRecord& a, const PredRecord& b) { return a.score > b.score; });

  // One PR point per distinct score, sweeping the threshold downward.
  struct PrPoint {
    double threshold, precision, recall;
  };
  std::vector<PrPoint> curve;
  int tp = 0;
  int taken = 0;
  for (size_t i = 0; i < records.size(); ++i) {
    ++taken;
    if (records[i].tp_candidate) ++tp;
    const bool last_of_score =
        i + 1 == records.size() || records[i + 1].score != records[i].score;
    if (!last_of_score) continue;
    PrPoint pt;
    pt.threshold = records[i].score;
    pt.precision = static_cast<double>(tp) / taken;
    pt.recall = static_cast<double>(tp) / total_gts;
    curve.push_back(pt);
  }

  double best_f1 = 0.0;
  double best_threshold = curve.front().threshold;
  for (const PrPoint& pt : curve) {
    const double denom = pt.precision + pt.recall;
    const double f1 = denom > 0.0 ? 2.0 * pt.precision * pt.recall / denom : 0.0;
    if (f1 > best_f1) {
      best_f1 = f1;
      best_threshold = pt.threshold;
    }
  }
  report.f1 = best_f1;
  report.best_threshold = best_threshold;

  // Interpolated AP: precision envelope integrated over recall.
  double ap = 0.0;
  double prev_recall = 0.0;
  std::vector<double> envelope(curve.size());
  double running = 0.0;
  for (size_t i = curve.size(); i-- > 0;) {
    running = std::max(running, curve[i].precision);
    envelope[i] = running;
  }
  for (size_t i = 0; i < curve.size(); ++i) {
    ap += (curve[i].recall - prev_recall) * envelope[i];
    prev_recall = curve[i].recall;
  }
  report.ap = ap;

  double x_close = 0.0, x_far = 0.0, z_close = 0.0, z_far = 0.0;
  int n_close = 0, n_far = 0, n_tp = 0, n_cat = 0;
  for (const PredRecord& rec : records) {
    if (rec.score < best_threshold || !rec.tp_candidate) continue;
    ++n_tp;
    if (rec.category_correct) ++n_cat;
    x_close += rec.x_close_sum;
    z_close += rec.z_close_sum;
    n_close += rec.close_count;
    x_far += rec.x_far_sum;
    z_far += rec.z_far_sum;
    n_far += rec.far_count;
  }
  if (n_close > 0) {
    report.x_err_close = x_close / n_close;
    report.z_err_close = z_close / n_close;
  }
  if (n_far > 0) {
    report.x_err_far = x_far / n_far;
    report.z_err_far = z_far / n_far;
  }
  if (n_tp > 0) report.category_accuracy = static_cast<double>(n_cat) / n_tp;
  return report;
}

MetricsReport compute_metrics(const std::vector<Proposal>& preds, const std::vector<Lane3D>& gts,
                              const MetricsConfig& cfg) {
  return compute_metrics(std::vector<ScenePair>{{preds, gts}}, cfg);
}

namespace {

struct Vec2 {
  double x, y;
};

double point_segment_dist_sq_2d(Vec2 p, Vec2 a, Vec2 b) {
  const double abx = b.x - a.x, aby = b.y - a.y;
  const double len_sq = abx * abx + aby * aby;
  double t = 0.0;
  if (len_sq > 0.0) {
    t = ((p.x - a.x) * abx + (p.y - a.y) * aby) / len_sq;
    t = std::clamp(t, 0.0, 1.0);
  }
  const double dx = p.x - (a.x + t * abx);
  const double dy = p.y - (a.y + t * aby);
  return dx * dx + dy * dy;
}

std::vector<Vec2> visible_topview(const Lane3D& lane, double vis_threshold) {
  std::vector<Vec2> pts;
  for (int k = 0; k < lane.size(); ++k) {
    if (lane.vis[k] >= vis_threshold) pts.push_back({lane.xs[k], lane.ys[k]});
  }
  return pts;
}

double min_dist_sq_to_polyline_2d(Vec2 p, const std::vector<Vec2>& poly) {
  if (poly.empty()) return kInf;
  if (poly.size() == 1) {
    const double dx = p.x - poly[0].x, dy = p.y - poly[0].y;
    return dx * dx + dy * dy;
  }
  double best = kInf;
  for (size_t i = 0; i + 1 < poly.size(); ++i) {
    best = std::min(best, point_segment_dist_sq_2d(p, poly[i], poly[i + 1]));
  }
  return best;
}

double point_segment_dist_sq_3d(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                const Eigen::Vector3d& b) {
  const Eigen::Vector3d ab = b - a;
  const double len_sq = ab.squaredNorm();
  double t = 0.0;
  if (len_sq > 0.0) t = std::clamp((p - a).dot(ab) / len_sq, 0.0, 1.0);
  return (p - (a + t * ab)).squaredNorm();
}

}  // namespace

double unilateral_chamfer(const Lane3D& pred, const Lane3D& gt, double vis_threshold) {
  std::vector<Eigen::Vector3d> gt_pts;
  for (int k = 0; k < gt.size(); ++k) {
    if (gt.vis[k] >= vis_threshold) gt_pts.emplace_back(gt.xs[k], gt.ys[k], gt.zs[k]);
  }
  if (gt_pts.empty()) return kInf;

  double sum = 0.0;
  int count = 0;
  for (int k = 0; k < pred.size(); ++k) {
    if (pred.vis[k] < vis_threshold) continue;
    const Eigen::Vector3d p(pred.xs[k], pred.ys[k], pred.zs[k]);
    double best = kInf;
    if (gt_pts.size() == 1) {
      best = (p - gt_pts[0]).squaredNorm();
    } else {
      for (size_t i = 0; i + 1 < gt_pts.size(); ++i) {
        best = std::min(best, point_segment_dist_sq_3d(p, gt_pts[i], gt_pts[i + 1]));
      }
    }
    sum += std::sqrt(best);
    ++count;
  }
  if (count == 0) return kInf;
  return sum / count;
}

double topview_iou(const Lane3D& a, const Lane3D& b, const OnceConfig& cfg) {
  const std::vector<Vec2> pa = visible_topview(a, cfg.vis_threshold);
  const std::vector<Vec2> pb = visible_topview(b, cfg.vis_threshold);
  if (pa.empty() || pb.empty()) return 0.0;

  double min_x = kInf, max_x = -kInf, min_y = kInf, max_y = -kInf;
  for (const auto& pts : {pa, pb}) {
    for (const Vec2& p : pts) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
  }
  min_x -= cfg.half_width + cfg.raster_res;
  max_x += cfg.half_width + cfg.raster_res;
  min_y -= cfg.half_width + cfg.raster_res;
  max_y += cfg.half_width + cfg.raster_res;

  const double hw_sq = cfg.half_width * cfg.half_width;
  const int nx = std::max(1, static_cast<int>(std::ceil((max_x - min_x) / cfg.raster_res)));
  const int ny = std::max(1, static_cast<int>(std::ceil((max_y - min_y) / cfg.raster_res)));

  long long count_a = 0, count_b = 0, count_both = 0;
  for (int iy = 0; iy < ny; ++iy) {
    const double y = min_y + (iy + 0.5) * cfg.raster_res;
    for (int ix = 0; ix < nx; ++ix) {
      const Vec2 p{min_x + (ix + 0.5) * cfg.raster_res, y};
      const bool in_a = min_dist_sq_to_polyline_2d(p, pa) <= hw_sq;
      const bool in_b = min_dist_sq_to_polyline_2d(p, pb) <= hw_sq;
      count_a += in_a;
      count_b += in_b;
      count_both += in_a && in_b;
    }
  }
  const long long uni = count_a + count_b - count_both;
  if (uni <= 0) return 0.0;
  return static_cast<double>(count_both) / static_cast<double>(uni);
}

OnceReport once_metrics(const std::vector<ScenePair>& scenes, const OnceConfig& cfg) {
  if (cfg.tau_cd <= 0.0) throw_error(ErrorCode::InvalidArgument, "tau_cd must be > 0");

  long long tp = 0, total_preds = 0, total_gts = 0;
  double cd_sum = 0.0;

  for (const ScenePair& scene : scenes) {
    const int np = static_cast<int>(scene.preds.size());
    const int ng = static_cast<int>(scene.gts.size());
    total_preds += np;
    total_gts += ng;
    if (np == 0 || ng == 0) continue;

    // Max-IoU one-to-one matching: cost 1 - IoU, unmatched pays
    // 1 - iou_threshold so sub-threshold pairs prefer staying unmatched.
    const int n = np + ng;
    Eigen::MatrixXd cost(n, n);
    Eigen::MatrixXd iou = Eigen::MatrixXd::Zero(np, ng);
    for (int i = 0; i < np; ++i) {
      for (int j = 0; j < ng; ++j) {
        iou(i, j) = topview_iou(scene.preds[i].lane, scene.gts[j], cfg);
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i < np && j < ng) {
          cost(i, j) = 1.0 - iou(i, j);
        } else if (i < np || j < ng) {
          cost(i, j) = 1.0 - cfg.iou_threshold;
        } else {
          cost(i, j) = 0.0;
        }
      }
    }
    const std::vector<int> row_to_col = solve_assignment(cost);
    for (int i = 0; i < np; ++i) {
      const int j = row_to_col[i];
      if (j >= ng || iou(i, j) < cfg.iou_threshold) continue;
      const double cd = unilateral_chamfer(scene.preds[i].lane, scene.gts[j], cfg.vis_threshold);
      if (cd < cfg.tau_cd) {
        ++tp;
        cd_sum += cd;
      }
    }
  }

  OnceReport report;
  report.tau_cd = cfg.tau_cd;
  report.precision = total_preds > 0 ? static_cast<double>(tp) / total_preds : 0.0;
  report.recall = total_gts > 0 ? static_cast<double>(tp) / total_gts : 0.0;
  const double denom = report.precision + report.recall;
  report.f1 = denom > 0.0 ? 2.0 * report.precision * report.recall / denom : 0.0;
  report.cd_error = tp > 0 ? cd_sum / tp : 0.0;
  return report;
}

OnceReport once_metrics(const std::vector<Proposal>& preds, const std::vector<Lane3D>& gts,
                        const OnceConfig& cfg) {
  return once_metrics(std::vector<ScenePair>{{preds, gts}}, cfg);
}

}  // namespace lane3d
