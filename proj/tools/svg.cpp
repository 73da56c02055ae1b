#include "svg.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <lane3d/errors.hpp>

namespace lane3d::tools {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct Panel {
  double x0, y0, w, h;          // pixel rect
  double min_a, max_a;          // horizontal data range
  double min_b, max_b;          // vertical data range

  double px(double a) const { return x0 + (a - min_a) / (max_a - min_a) * w; }
  double py(double b) const { return y0 + h - (b - min_b) / (max_b - min_b) * h; }
};

void draw_polyline(std::ofstream& out, const Panel& panel, const std::vector<double>& a,
                   const std::vector<double>& b, const std::vector<double>& vis,
                   const char* color, double width) {
  std::string points;
  auto flush = [&]() {
    if (points.find(' ') != std::string::npos) {  // at least two points
      out << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width
          << "\" points=\"" << points << "\"/>\n";
    }
    points.clear();
  };
  for (size_t k = 0; k < a.size(); ++k) {
    if (vis[k] < 0.5) {
      flush();
      continue;
    }
    if (!points.empty()) points += ' ';
    points += fmt(panel.px(a[k])) + "," + fmt(panel.py(b[k]));
  }
  flush();
}

void panel_frame(std::ofstream& out, const Panel& p, const char* title, const char* xlabel,
                 const char* ylabel) {
  out << "  <rect x=\"" << fmt(p.x0) << "\" y=\"" << fmt(p.y0) << "\" width=\"" << fmt(p.w)
      << "\" height=\"" << fmt(p.h)
      << "\" fill=\"#fafafa\" stroke=\"#888\" stroke-width=\"1\"/>\n";
  out << "  <text x=\"" << fmt(p.x0 + p.w / 2) << "\" y=\"" << fmt(p.y0 - 8)
      << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << title
      << "</text>\n";
  out << "  <text x=\"" << fmt(p.x0 + p.w / 2) << "\" y=\"" << fmt(p.y0 + p.h + 24)
      << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << xlabel
      << "</text>\n";
  out << "  <text x=\"" << fmt(p.x0 - 30) << "\" y=\"" << fmt(p.y0 + p.h / 2)
      << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\" transform=\"rotate(-90 "
      << fmt(p.x0 - 30) << " " << fmt(p.y0 + p.h / 2) << ")\">" << ylabel << "</text>\n";
}

}  // namespace

void write_scene_svg(const std::string& path, const std::vector<Proposal>& preds,
                     const std::vector<Lane3D>& gts) {
  double min_x = -8, max_x = 8, min_z = -1, max_z = 1;
  double min_y = 0, max_y = 105;
  auto grow = [&](const Lane3D& lane) {
    for (int k = 0; k < lane.size(); ++k) {
      if (lane.vis[k] < 0.5) continue;
      min_x = std::min(min_x, lane.xs[k] - 1);
      max_x = std::max(max_x, lane.xs[k] + 1);
      min_z = std::min(min_z, lane.zs[k] - 0.5);
      max_z = std::max(max_z, lane.zs[k] + 0.5);
      max_y = std::max(max_y, lane.ys[k] + 5);
    }
  };
  for (const Lane3D& g : gts) grow(g);
  for (const Proposal& p : preds) grow(p.lane);

  const Panel top{60, 40, 300, 420, min_x, max_x, min_y, max_y};
  const Panel side{440, 40, 420, 180, min_y, max_y, min_z, max_z};

  std::ofstream out(path);
  if (!out) throw_error(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"520\" "
         "viewBox=\"0 0 900 520\">\n";
  panel_frame(out, top, "top view", "x (m)", "y (m)");
  panel_frame(out, side, "side view", "y (m)", "z (m)");

  for (const Lane3D& g : gts) {
    draw_polyline(out, top, g.xs, g.ys.values(), g.vis, "#1f6feb", 2.5);
    draw_polyline(out, side, g.ys.values(), g.zs, g.vis, "#1f6feb", 2.5);
  }
  for (const Proposal& p : preds) {
    draw_polyline(out, top, p.lane.xs, p.lane.ys.values(), p.lane.vis, "#d73a49", 1.5);
    draw_polyline(out, side, p.lane.ys.values(), p.lane.zs, p.lane.vis, "#d73a49", 1.5);
  }

  out << "  <text x=\"60\" y=\"505\" font-size=\"11\" font-family=\"sans-serif\" "
         "fill=\"#1f6feb\">ground truth</text>\n";
  out << "  <text x=\"160\" y=\"505\" font-size=\"11\" font-family=\"sans-serif\" "
         "fill=\"#d73a49\">prediction</text>\n";
  out << "</svg>\n";
}

}  // namespace lane3d::tools
