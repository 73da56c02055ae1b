#pragma once

#include <string>
#include <vector>

#include <lane3d/lane.hpp>

namespace lane3d::tools {

/// Writes a static SVG with a top view (x vs y) and a side view (z vs y) of
/// predictions overlaid on ground truth. Ground truth renders blue,
/// predictions red; only visible points are drawn.
void write_scene_svg(const std::string& path, const std::vector<Proposal>& preds,
                     const std::vector<Lane3D>& gts);

}  // namespace lane3d::tools
