#include "lane3d/sampling.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace lane3d {

Eigen::VectorXd AnchorFeature::flatten() const {
  Eigen::VectorXd flat(per_point.size());
  for (int k = 0; k < per_point.rows(); ++k) {
    flat.segment(k * per_point.cols(), per_point.cols()) = per_point.row(k);
  }
  return flat;
}

Eigen::VectorXd bilinear_sample(const FeatureMap& fm, double u, double v) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(fm.c);
  if (!(u >= 0.0 && u <= fm.w_f - 1.0 && v >= 0.0 && v <= fm.h_f - 1.0)) return out;

  const int u0 = static_cast<int>(std::floor(u));
  const int v0 = static_cast<int>(std::floor(v));
  const int u1 = std::min(u0 + 1, fm.w_f - 1);
  const int v1 = std::min(v0 + 1, fm.h_f - 1);
  const double fu = u - u0;
  const double fv = v - v0;

  for (int ch = 0; ch < fm.c; ++ch) {
    const double top = (1.0 - fu) * fm.at(v0, u0, ch) + fu * fm.at(v0, u1, ch);
    const double bot = (1.0 - fu) * fm.at(v1, u0, ch) + fu * fm.at(v1, u1, ch);
    out(ch) = (1.0 - fv) * top + fv * bot;
  }
  return out;
}

AnchorFeature sample_anchor_features(const Anchor& anchor, const FeatureMap& fm,
                                     const CameraRig& rig) {
  const int n = anchor.size();
  AnchorFeature feat;
  feat.per_point = Eigen::MatrixXd::Zero(n, fm.c);
  feat.valid_mask.assign(n, 0);

  for (int k = 0; k < n; ++k) {
    const FeaturePoint fp = project_ground_to_feature_unchecked(
        anchor.points[k], rig.intrinsics, rig.ground_to_camera, rig.dims);
    if (fp.d <= kMinDepth) continue;
    if (!(fp.u >= 0.0 && fp.u <= rig.dims.w_f - 1.0 && fp.v >= 0.0 &&
          fp.v <= rig.dims.h_f - 1.0)) {
      continue;
    }
    feat.per_point.row(k) = bilinear_sample(fm, fp.u, fp.v);
    feat.valid_mask[k] = 1;
  }
  return feat;
}

AnchorFeature sample_cross_frame(const Anchor& anchor, const FeatureMap& prev_fm,
                                 const CameraRig& prev_rig, const RigidTransform& pose) {
  Anchor moved = anchor;
  for (GroundPoint& p : moved.points) p = transform_point(p, pose);
  return sample_anchor_features(moved, prev_fm, prev_rig);
}

Eigen::MatrixXd sample_anchor_matrix(const std::vector<Anchor>& anchors, const FeatureMap& fm,
                                     const CameraRig& rig) {
  const int m = static_cast<int>(anchors.size());
  const int n = m > 0 ? anchors.front().size() : 0;
  Eigen::MatrixXd x(m, n * fm.c);
  for (int j = 0; j < m; ++j) {
    x.row(j) = sample_anchor_features(anchors[j], fm, rig).flatten();
  }
  return x;
}

Eigen::MatrixXd sample_cross_frame_matrix(const std::vector<Anchor>& anchors,
                                          const FeatureMap& prev_fm, const CameraRig& prev_rig,
                                          const RigidTransform& pose) {
  const int m = static_cast<int>(anchors.size());
  const int n = m > 0 ? anchors.front().size() : 0;
  Eigen::MatrixXd x(m, n * prev_fm.c);
  for (int j = 0; j < m; ++j) {
    x.row(j) = sample_cross_frame(anchors[j], prev_fm, prev_rig, pose).flatten();
  }
  return x;
}

namespace {

constexpr char kMagic[4] = {'A', '3', 'L', 'F'};

void put_u32(std::ostream& out, uint32_t value) {
  unsigned char bytes[4] = {static_cast<unsigned char>(value & 0xff),
                            static_cast<unsigned char>((value >> 8) & 0xff),
                            static_cast<unsigned char>((value >> 16) & 0xff),
                            static_cast<unsigned char>((value >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw_error(ErrorCode::IoError, "truncated feature-map block");
  return static_cast<uint32_t>(bytes[0]) | (static_cast<uint32_t>(bytes[1]) << 8) |
         (static_cast<uint32_t>(bytes[2]) << 16) | (static_cast<uint32_t>(bytes[3]) << 24);
}

}  // namespace

void write_feature_map_block(std::ostream& out, const FeatureMap& fm) {
  out.write(kMagic, 4);
  put_u32(out, static_cast<uint32_t>(fm.h_f));
  put_u32(out, static_cast<uint32_t>(fm.w_f));
  put_u32(out, static_cast<uint32_t>(fm.c));
  static_assert(sizeof(float) == 4);
  // Little-endian hosts only; fine for this toolkit's supported targets.
  out.write(reinterpret_cast<const char*>(fm.data.data()),
            static_cast<std::streamsize>(fm.data.size() * sizeof(float)));
}

FeatureMap read_feature_map_block(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw_error(ErrorCode::IoError, "bad feature-map magic");
  }
  const uint32_t h_f = get_u32(in);
  const uint32_t w_f = get_u32(in);
  const uint32_t c = get_u32(in);
  if (h_f == 0 || w_f == 0 || c == 0 || static_cast<uint64_t>(h_f) * w_f * c > (1u << 30)) {
    throw_error(ErrorCode::IoError, "implausible feature-map shape");
  }
  FeatureMap fm(static_cast<int>(h_f), static_cast<int>(w_f), static_cast<int>(c));
  in.read(reinterpret_cast<char*>(fm.data.data()),
          static_cast<std::streamsize>(fm.data.size() * sizeof(float)));
  if (!in) throw_error(ErrorCode::IoError, "truncated feature-map data");
  return fm;
}

void write_feature_map(const std::string& path, const FeatureMap& fm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_error(ErrorCode::IoError, "cannot open " + path + " for writing");
  write_feature_map_block(out, fm);
  if (!out) throw_error(ErrorCode::IoError, "failed writing " + path);
}

FeatureMap read_feature_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_error(ErrorCode::IoError, "cannot open " + path);
  return read_feature_map_block(in);
}

}  // namespace lane3d
