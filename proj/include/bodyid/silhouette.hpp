#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "bodyid/body_model.hpp"
#include "bodyid/error.hpp"
#include "bodyid/geometry.hpp"
#include "bodyid/rng.hpp"
#include "bodyid/serialize.hpp"

namespace bodyid {

struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // row-major, 0/1

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y) { bits[static_cast<std::size_t>(y) * width + x] = 1; }
  std::size_t foreground_count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b;
    return n;
  }
};

enum class CloudSource { silhouette, vertices };

struct PointCloud2D {
  Points2 points;
  CloudSource source = CloudSource::silhouette;

  Eigen::Index size() const { return points.rows(); }
};

namespace detail {

inline double point_segment_dist2(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).squaredNorm();
}

}  // namespace detail

// Foreground = union of the projected bone-capsule footprints (segment
// stadium with radius scale * bone radius). Pixel centers sit at
// integer + 0.5.
inline Mask rasterize_mask(const BodyModel& model, const ShapeParams& shape,
                           const PoseParams& pose, const Camera& camera, int res = 224) {
  if (res <= 0) throw ConfigError("rasterize_mask: resolution must be positive");
  const LbsForward f = lbs_forward(model, shape, pose);
  const Points2 joints2d = project(camera, f.joint_positions);

  Mask mask;
  mask.width = res;
  mask.height = res;
  mask.bits.assign(static_cast<std::size_t>(res) * res, 0);

  for (int b = 0; b < model.bone_count(); ++b) {
    const Vec2 a = joints2d.row(model.tree.bone_start_joint(b)).transpose();
    const Vec2 e = joints2d.row(model.tree.bone_end_joint(b)).transpose();
    const double r = camera.scale * f.attrs.radii(b);
    if (r <= 0.0) continue;
    const double r2 = r * r;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x(), e.x()) - r)));
    const int x1 = std::min(res - 1, static_cast<int>(std::ceil(std::max(a.x(), e.x()) + r)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y(), e.y()) - r)));
    const int y1 = std::min(res - 1, static_cast<int>(std::ceil(std::max(a.y(), e.y()) + r)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const Vec2 p(x + 0.5, y + 0.5);
        if (detail::point_segment_dist2(p, a, e) <= r2) mask.set(x, y);
      }
  }
  if (mask.foreground_count() == 0)
    throw DataError("rasterize_mask: empty mask (body outside the frame or degenerate)");
  return mask;
}

// m points drawn uniformly with replacement from foreground pixel centers.
inline PointCloud2D sample_silhouette_cloud(const Mask& mask, int m, std::uint64_t seed) {
  if (m < 1) throw ConfigError("sample_silhouette_cloud: need at least one sample");
  std::vector<Vec2> fg;
  fg.reserve(mask.foreground_count());
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y)) fg.emplace_back(x + 0.5, y + 0.5);
  if (fg.empty()) throw DataError("sample_silhouette_cloud: mask has no foreground");

  Rng rng(seed);
  PointCloud2D cloud;
  cloud.source = CloudSource::silhouette;
  cloud.points.resize(m, 2);
  for (int i = 0; i < m; ++i) cloud.points.row(i) = fg[rng.uniform_index(fg.size())];
  return cloud;
}

namespace detail {

// One grid-capping pass: keep at most k points per cell of the bounding-box
// grid, lowest original position first. Returns kept positions (ascending).
inline std::vector<int> cap_cells_once(const Points2& pts, const std::vector<int>& active,
                                       int grid, int k) {
  double min_x = pts(active[0], 0), max_x = min_x;
  double min_y = pts(active[0], 1), max_y = min_y;
  for (int i : active) {
    min_x = std::min(min_x, pts(i, 0));
    max_x = std::max(max_x, pts(i, 0));
    min_y = std::min(min_y, pts(i, 1));
    max_y = std::max(max_y, pts(i, 1));
  }
  const double w = (max_x - min_x) / grid;
  const double h = (max_y - min_y) / grid;
  std::vector<int> count(static_cast<std::size_t>(grid) * grid, 0);
  std::vector<int> kept;
  kept.reserve(active.size());
  for (int i : active) {
    const int cx = w > 0.0 ? std::min(grid - 1, static_cast<int>((pts(i, 0) - min_x) / w)) : 0;
    const int cy = h > 0.0 ? std::min(grid - 1, static_cast<int>((pts(i, 1) - min_y) / h)) : 0;
    int& c = count[static_cast<std::size_t>(cy) * grid + cx];
    if (c < k) {
      ++c;
      kept.push_back(i);
    }
  }
  return kept;
}

}  // namespace detail

// Indices (ascending) of the points kept by adaptive grid sampling. The
// capping pass is iterated to a fixed point so the result is stable under
// re-application (the kept set's own bounding-box grid never drops more).
inline std::vector<int> adaptive_sample_indices(const Points2& pts, int grid, int k) {
  if (pts.rows() < 1) throw DataError("adaptive_sample: empty point set");
  if (grid < 1 || k < 1) throw ConfigError("adaptive_sample: grid and k must be >= 1");
  std::vector<int> active(pts.rows());
  for (int i = 0; i < pts.rows(); ++i) active[i] = i;
  for (;;) {
    std::vector<int> kept = detail::cap_cells_once(pts, active, grid, k);
    if (kept.size() == active.size()) return kept;
    active = std::move(kept);
  }
}

inline PointCloud2D adaptive_sample_vertices(const Points2& pts, int grid, int k) {
  const std::vector<int> idx = adaptive_sample_indices(pts, grid, k);
  PointCloud2D cloud;
  cloud.source = CloudSource::vertices;
  cloud.points.resize(static_cast<Eigen::Index>(idx.size()), 2);
  for (std::size_t i = 0; i < idx.size(); ++i) cloud.points.row(static_cast<Eigen::Index>(i)) = pts.row(idx[i]);
  return cloud;
}

// Resolution degradation for clouds: Gaussian jitter with
// sigma = sigma0 * (224/s - 1), then snap to the s-resolution grid mapped
// back to 224 scale.
inline PointCloud2D degrade_cloud(const PointCloud2D& cloud, double s, double sigma0,
                                  std::uint64_t seed) {
  if (s < 48.0 || s > 224.0)
    throw ConfigError("degrade_cloud: simulated resolution must lie in [48, 224]");
  if (sigma0 < 0.0) throw ConfigError("degrade_cloud: sigma0 must be non-negative");
  if (cloud.size() < 1) throw DataError("degrade_cloud: empty cloud");
  const double sigma = sigma0 * (224.0 / s - 1.0);
  const double pitch = 224.0 / s;
  Rng rng(seed);
  PointCloud2D out;
  out.source = cloud.source;
  out.points.resize(cloud.points.rows(), 2);
  for (Eigen::Index i = 0; i < cloud.points.rows(); ++i)
    for (int a = 0; a < 2; ++a) {
      double x = cloud.points(i, a);
      if (sigma > 0.0) x += rng.normal(0.0, sigma);
      out.points(i, a) = (std::floor(x / pitch) + 0.5) * pitch;
    }
  return out;
}

// --- file formats ---

inline void write_mask_pgm(const Mask& mask, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "P5\n" << mask.width << " " << mask.height << "\n255\n";
  for (auto b : mask.bits) out.put(b ? static_cast<char>(255) : static_cast<char>(0));
  if (!out) throw IoError("failed writing " + path);
}

inline void write_cloud_csv(const PointCloud2D& cloud, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "x,y\n";
  for (Eigen::Index i = 0; i < cloud.points.rows(); ++i)
    out << fmt_g17(cloud.points(i, 0)) << "," << fmt_g17(cloud.points(i, 1)) << "\n";
  if (!out) throw IoError("failed writing " + path);
}

inline PointCloud2D read_cloud_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,y", 0) != 0)
    throw IoError("cloud CSV missing x,y header: " + path);
  std::vector<Vec2> pts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw IoError("malformed cloud CSV row: " + path);
    pts.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  if (pts.empty()) throw DataError("cloud CSV has no points: " + path);
  PointCloud2D cloud;
  cloud.points.resize(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) cloud.points.row(static_cast<Eigen::Index>(i)) = pts[i];
  return cloud;
}

inline Mask read_mask_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0) throw IoError("not a P5 PGM: " + path);
  in.get();  // single whitespace after header
  Mask mask;
  mask.width = w;
  mask.height = h;
  mask.bits.resize(static_cast<std::size_t>(w) * h);
  for (auto& b : mask.bits) {
    const int c = in.get();
    if (c == EOF) throw IoError("truncated PGM: " + path);
    b = c > 127 ? 1 : 0;
  }
  return mask;
}

}  // namespace bodyid
