#include "triavatar/lifting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "binary_io.hpp"
#include "triavatar/errors.hpp"

namespace triavatar {

namespace {

void check_spatial(int aw, int ah, int bw, int bh, const char* what) {
  if (aw != bw || ah != bh)
    throw ShapeError(std::string(what) + ": spatial shapes differ (" + std::to_string(aw) + "x" +
                     std::to_string(ah) + " vs " + std::to_string(bw) + "x" + std::to_string(bh) +
                     ")");
}

// Uniform 2D binning over [-extent, extent]^2; points outside clamp into edge
// cells, which keeps the ring-search lower bound valid because clamping never
// moves a point closer to an in-grid query.
struct PlaneGrid {
  int cells = 1;
  double cell_size = 0.0;
  double extent = 0.0;
  std::vector<std::vector<int>> bins;

  PlaneGrid(const std::vector<Eigen::Vector2d>& pts, double ext) {
    extent = ext;
    cells = std::clamp(static_cast<int>(std::ceil(std::sqrt(static_cast<double>(pts.size())))), 1,
                       64);
    cell_size = 2.0 * extent / cells;
    bins.resize(static_cast<std::size_t>(cells) * cells);
    for (int i = 0; i < static_cast<int>(pts.size()); ++i)
      bins[cell_of(pts[i].x()) * cells + cell_of(pts[i].y())].push_back(i);
  }

  int cell_of(double v) const {
    int c = static_cast<int>(std::floor((v + extent) / cell_size));
    return std::clamp(c, 0, cells - 1);
  }

  // Nearest point index to (qx, qy) with lowest-index tie-break.
  int nearest(const std::vector<Eigen::Vector2d>& pts, double qx, double qy) const {
    const int cx = cell_of(qx), cy = cell_of(qy);
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int r = 0; r < cells; ++r) {
      if (best >= 0 && r >= 2) {
        double bound = (r - 1) * cell_size;
        if (bound * bound > best_d2) break;
      }
      const int x0 = std::max(0, cx - r), x1 = std::min(cells - 1, cx + r);
      const int y0 = std::max(0, cy - r), y1 = std::min(cells - 1, cy + r);
      for (int x = x0; x <= x1; ++x) {
        for (int y = y0; y <= y1; ++y) {
          if (r > 0 && x != cx - r && x != cx + r && y != cy - r && y != cy + r)
            continue;  // interior cells were handled at smaller r
          for (int idx : bins[static_cast<std::size_t>(x) * cells + y]) {
            const double dx = pts[idx].x() - qx;
            const double dy = pts[idx].y() - qy;
            const double d2 = dx * dx + dy * dy;
            if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
              best_d2 = d2;
              best = idx;
            }
          }
        }
      }
    }
    return best;
  }
};

}  // namespace

Image mask_apply(const Image& img, const PixelMask& mask) {
  check_spatial(img.width, img.height, mask.width, mask.height, "mask_apply");
  Image out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (!mask.at(y, x))
        for (int c = 0; c < 3; ++c) out.at(y, x, c) = 0.0;
  return out;
}

FeatureImage mask_apply(const FeatureImage& img, const PixelMask& mask) {
  check_spatial(img.width, img.height, mask.width, mask.height, "mask_apply");
  FeatureImage out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (!mask.at(y, x))
        for (int c = 0; c < img.channels; ++c) out.at(c, y, x) = 0.0;
  return out;
}

NeuralPointCloud lift(const FeatureImage& features, const FloatMap& depth, const Camera& cam,
                      const PixelMask& valid) {
  check_spatial(features.width, features.height, depth.width, depth.height, "lift");
  check_spatial(features.width, features.height, valid.width, valid.height, "lift");
  check_spatial(features.width, features.height, cam.width, cam.height, "lift");
  cam.validate();

  NeuralPointCloud cloud;
  cloud.channels = features.channels;
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      if (!valid.at(y, x)) continue;
      double d = depth.at(y, x);
      if (!std::isfinite(d))
        throw InputError("lift: non-finite depth at pixel (" + std::to_string(x) + ", " +
                         std::to_string(y) + ")");
      Ray ray = ray_for_pixel(cam, x, y);
      cloud.positions.push_back(ray.origin + d * ray.direction);
      Eigen::VectorXd f(features.channels);
      for (int c = 0; c < features.channels; ++c) f[c] = features.at(c, y, x);
      cloud.features.push_back(std::move(f));
    }
  }
  return cloud;
}

TriPlane rasterize(const NeuralPointCloud& cloud, int channels, int resolution, double extent) {
  TriPlane out = triplane_new(channels, resolution, extent, 0.0);
  if (cloud.size() == 0) return out;
  if (cloud.channels != channels)
    throw ShapeError("rasterize: cloud feature width " + std::to_string(cloud.channels) +
                     " != requested channels " + std::to_string(channels));

  // Plane k projects onto axes (ax, bx): XY -> (x,y), XZ -> (x,z), YZ -> (y,z).
  const int axes[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  const int n = static_cast<int>(cloud.size());
  std::vector<Eigen::Vector2d> proj(n);
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < n; ++i)
      proj[i] = Eigen::Vector2d(cloud.positions[i][axes[k][0]], cloud.positions[i][axes[k][1]]);
    PlaneGrid grid(proj, extent);
    const double step = 2.0 * extent / resolution;
    for (int row = 0; row < resolution; ++row) {
      const double b = -extent + (row + 0.5) * step;  // second axis = row
      for (int col = 0; col < resolution; ++col) {
        const double a = -extent + (col + 0.5) * step;
        const int idx = grid.nearest(proj, a, b);
        const Eigen::VectorXd& f = cloud.features[idx];
        for (int c = 0; c < channels; ++c)
          out.at(k, c, row, col) = static_cast<float>(f[c]);
      }
    }
  }
  return out;
}

void npc_save(const NeuralPointCloud& cloud, const std::string& path) {
  detail::ByteWriter w(path);
  w.write_magic("NPC1");
  w.write_u32(static_cast<std::uint32_t>(cloud.size()));
  w.write_u32(static_cast<std::uint32_t>(cloud.channels));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < 3; ++k) w.write_f32(static_cast<float>(cloud.positions[i][k]));
    for (int c = 0; c < cloud.channels; ++c)
      w.write_f32(static_cast<float>(cloud.features[i][c]));
  }
  w.close();
}

NeuralPointCloud npc_load(const std::string& path) {
  detail::ByteReader r(path);
  r.expect_magic("NPC1");
  std::uint32_t count = r.read_u32();
  std::uint32_t channels = r.read_u32();
  if (count > (1u << 26) || channels > (1u << 16))
    throw FormatError("'" + path + "': implausible point-cloud dimensions", r.offset());
  if (count > 0 && channels == 0)
    throw FormatError("'" + path + "': zero feature width with nonzero count", r.offset());
  NeuralPointCloud cloud;
  cloud.channels = static_cast<int>(channels);
  cloud.positions.resize(count);
  cloud.features.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    for (int k = 0; k < 3; ++k) cloud.positions[i][k] = r.read_f32();
    cloud.features[i].resize(channels);
    for (std::uint32_t c = 0; c < channels; ++c) cloud.features[i][c] = r.read_f32();
  }
  r.expect_eof();
  return cloud;
}

}  // namespace triavatar
