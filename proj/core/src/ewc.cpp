#include "lane3d/ewc.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace lane3d {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Heading slope dx/dy of the adjusted lane at every sample: central
// differences inside, one-sided at the ends. Also reports, per sample, which
// two sample indices the stencil touches and the inverse y-span (for the
// gradient).
struct HeadingStencil {
  int lo, hi;       // adjusted-x indices entering the difference
  double inv_span;  // 1 / (y_hi - y_lo)
};

std::vector<HeadingStencil> heading_stencils(const YSampling& ys) {
  const int n = ys.size();
  std::vector<HeadingStencil> st(n);
  for (int k = 0; k < n; ++k) {
    const int lo = k == 0 ? 0 : k - 1;
    const int hi = k == n - 1 ? n - 1 : k + 1;
    st[k] = {lo, hi, 1.0 / (ys[hi] - ys[lo])};
  }
  return st;
}

struct PairSet {
  int a, b;                 // ordered: widths use lane a's heading
  std::vector<int> common;  // indices where both lanes are visible
};

std::vector<int> common_visible(const Lane3D& a, const Lane3D& b, double vis_threshold) {
  std::vector<int> idx;
  for (int k = 0; k < a.size(); ++k) {
    if (a.vis[k] >= vis_threshold && b.vis[k] >= vis_threshold) idx.push_back(k);
  }
  return idx;
}

// Least-squares slope of widths vs y over the given indices.
double lsq_slope(const std::vector<double>& widths, const YSampling& ys,
                 const std::vector<int>& idx) {
  const double n = static_cast<double>(idx.size());
  double sy = 0.0, sw = 0.0, syy = 0.0, syw = 0.0;
  for (int k : idx) {
    sy += ys[k];
    sw += widths[k];
    syy += ys[k] * ys[k];
    syw += ys[k] * widths[k];
  }
  const double denom = n * syy - sy * sy;
  if (denom == 0.0) return 0.0;
  return (n * syw - sy * sw) / denom;
}

struct Workspace {
  const std::vector<Lane3D>* lanes = nullptr;
  std::vector<PairSet> pairs;
  std::vector<HeadingStencil> stencils;
  double alpha = 0.0;
  int q = 0;
  int n = 0;
};

double objective(const Workspace& ws, const Eigen::MatrixXd& adj, Eigen::MatrixXd* grad) {
  const auto& lanes = *ws.lanes;
  if (grad != nullptr) grad->setZero(ws.q, ws.n);

  const double pair_norm = ws.pairs.empty() ? 0.0 : 1.0 / static_cast<double>(ws.pairs.size());
  double width_term = 0.0;

  std::vector<double> g(ws.n), c(ws.n), r(ws.n), w(ws.n);
  for (const PairSet& pair : ws.pairs) {
    const Lane3D& la = lanes[pair.a];
    const Lane3D& lb = lanes[pair.b];
    for (int k = 0; k < ws.n; ++k) {
      g[k] = la.xs[k] + adj(pair.a, k) - lb.xs[k] - adj(pair.b, k);
      const HeadingStencil& st = ws.stencils[k];
      r[k] = ((la.xs[st.hi] + adj(pair.a, st.hi)) - (la.xs[st.lo] + adj(pair.a, st.lo))) *
             st.inv_span;
      c[k] = 1.0 / std::sqrt(1.0 + r[k] * r[k]);
      w[k] = std::abs(c[k] * g[k]);
    }
    double mean = 0.0;
    for (int k : pair.common) mean += w[k];
    mean /= static_cast<double>(pair.common.size());

    double sum_sign = 0.0;
    for (int k : pair.common) sum_sign += sign(w[k] - mean);

    for (int k : pair.common) {
      width_term += pair_norm * std::abs(w[k] - mean);
      if (grad == nullptr) continue;
      const double dl_dw =
          pair_norm * (sign(w[k] - mean) - sum_sign / static_cast<double>(pair.common.size()));
      // w = c |g|: gradient through the gap ...
      const double dw_dg = c[k] * sign(g[k]);
      (*grad)(pair.a, k) += dl_dw * dw_dg;
      (*grad)(pair.b, k) -= dl_dw * dw_dg;
      // ... and through the heading of lane a.
      const double dw_dc = std::abs(g[k]);
      const double dc_dr = -r[k] * c[k] * c[k] * c[k];
      const double dr = dl_dw * dw_dc * dc_dr;
      const HeadingStencil& st = ws.stencils[k];
      (*grad)(pair.a, st.hi) += dr * st.inv_span;
      (*grad)(pair.a, st.lo) -= dr * st.inv_span;
    }
  }

  double reg_term = 0.0;
  for (int j = 0; j < ws.q; ++j) {
    const double norm = adj.row(j).norm();
    reg_term += ws.alpha / ws.q * norm;
    if (grad != nullptr && norm > 1e-12) {
      grad->row(j) += (ws.alpha / ws.q / norm) * adj.row(j);
    }
  }
  return width_term + reg_term;
}

}  // namespace

std::vector<double> pair_width_profile(const Lane3D& a, const Lane3D& b,
                                       const Eigen::VectorXd& adj_a,
                                       const Eigen::VectorXd& adj_b) {
  const int n = a.size();
  if (b.size() != n || adj_a.size() != n || adj_b.size() != n || !(a.ys == b.ys)) {
    throw_error(ErrorCode::LengthMismatch, "lanes/adjustments must share the y-sampling");
  }
  const std::vector<HeadingStencil> st = heading_stencils(a.ys);
  std::vector<double> widths(n);
  for (int k = 0; k < n; ++k) {
    const double r = ((a.xs[st[k].hi] + adj_a(st[k].hi)) - (a.xs[st[k].lo] + adj_a(st[k].lo))) *
                     st[k].inv_span;
    const double c = 1.0 / std::sqrt(1.0 + r * r);
    widths[k] = std::abs(c * (a.xs[k] + adj_a(k) - b.xs[k] - adj_b(k)));
  }
  return widths;
}

double width_profile_deviation(const std::vector<double>& widths) {
  if (widths.empty()) return 0.0;
  double mean = 0.0;
  for (double w : widths) mean += w;
  mean /= static_cast<double>(widths.size());
  double dev = 0.0;
  for (double w : widths) dev += std::abs(w - mean);
  return dev;
}

double ewc_objective(const std::vector<Lane3D>& lanes, const Eigen::MatrixXd& adjustments,
                     double alpha, double vis_threshold, int min_common_visible) {
  const int q = static_cast<int>(lanes.size());
  if (q < 2) throw_error(ErrorCode::TooFewLanes, "need at least two lanes");
  const int n = lanes.front().size();
  if (adjustments.rows() != q || adjustments.cols() != n) {
    throw_error(ErrorCode::ShapeMismatch, "adjustments must be Q x N");
  }

  Workspace ws;
  ws.lanes = &lanes;
  ws.stencils = heading_stencils(lanes.front().ys);
  ws.alpha = alpha;
  ws.q = q;
  ws.n = n;
  for (int a = 0; a < q; ++a) {
    for (int b = 0; b < q; ++b) {
      if (a == b) continue;
      std::vector<int> common = common_visible(lanes[a], lanes[b], vis_threshold);
      if (static_cast<int>(common.size()) < min_common_visible) continue;
      ws.pairs.push_back({a, b, std::move(common)});
    }
  }
  return objective(ws, adjustments, nullptr);
}

EwcResult optimize_equal_width(const std::vector<Lane3D>& lanes, const EwcConfig& cfg) {
  EwcResult result;
  result.lanes = lanes;

  const int q = static_cast<int>(lanes.size());
  if (q < 2) return result;  // TooFewLanes: refinement is a no-op
  const int n = lanes.front().size();
  for (const Lane3D& lane : lanes) {
    if (lane.size() != n || !(lane.ys == lanes.front().ys)) {
      throw_error(ErrorCode::LengthMismatch, "lanes must share the y-sampling");
    }
  }

  Workspace ws;
  ws.lanes = &lanes;
  ws.stencils = heading_stencils(lanes.front().ys);
  ws.alpha = cfg.alpha;
  ws.q = q;
  ws.n = n;

  // Active ordered pairs: enough shared visible points and no fork, judged
  // once on the raw width profile (lower-index lane's heading).
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  for (int a = 0; a < q; ++a) {
    for (int b = 0; b < q; ++b) {
      if (a == b) continue;
      std::vector<int> common = common_visible(lanes[a], lanes[b], cfg.vis_threshold);
      if (static_cast<int>(common.size()) < cfg.min_common_visible) continue;
      const int lo = std::min(a, b), hi = std::max(a, b);
      const std::vector<double> raw = pair_width_profile(lanes[lo], lanes[hi], zero, zero);
      if (std::abs(lsq_slope(raw, lanes.front().ys, common)) > cfg.fork_slope_threshold) {
        continue;
      }
      ws.pairs.push_back({a, b, std::move(common)});
    }
  }
  result.active_pairs = static_cast<int>(ws.pairs.size());
  result.adjustments = Eigen::MatrixXd::Zero(q, n);
  if (ws.pairs.empty()) return result;

  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(q, n);
  Eigen::MatrixXd grad(q, n);
  double obj = objective(ws, adj, nullptr);
  result.initial_objective = obj;
  double step = cfg.step_size;

  for (int it = 0; it < cfg.steps; ++it) {
    objective(ws, adj, &grad);
    const Eigen::MatrixXd candidate = adj - step * grad;
    const double cand_obj = objective(ws, candidate, nullptr);
    if (cand_obj < obj) {
      adj = candidate;
      obj = cand_obj;
    } else {
      step *= 0.5;
      if (step < 1e-12) break;
    }
  }

  result.adjustments = adj;
  result.final_objective = obj;
  for (int j = 0; j < q; ++j) {
    for (int k = 0; k < n; ++k) result.lanes[j].xs[k] += adj(j, k);
  }
  return result;
}

void to_json(nlohmann::json& j, const EwcConfig& cfg) {
  j["alpha"] = cfg.alpha;
  j["steps"] = cfg.steps;
  j["step_size"] = cfg.step_size;
  j["fork_slope_threshold"] = cfg.fork_slope_threshold;
}

void from_json(const nlohmann::json& j, EwcConfig& cfg) {
  cfg = EwcConfig{};
  if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
  if (j.contains("steps")) cfg.steps = j.at("steps").get<int>();
  if (j.contains("step_size")) cfg.step_size = j.at("step_size").get<double>();
  if (j.contains("fork_slope_threshold")) {
    cfg.fork_slope_threshold = j.at("fork_slope_threshold").get<double>();
  }
  if (cfg.alpha < 0.0 || cfg.steps < 0 || cfg.step_size <= 0.0) {
    throw_error(ErrorCode::ConfigError, "invalid equal-width settings");
  }
}

}  // namespace lane3d
