#pragma once

// Tri-plane feature grids: three axis-aligned planes (XY, XZ, YZ) spanning
// [-extent, extent]^2, sampled bilinearly and aggregated by summation.

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace triavatar {

struct TriPlane {
  // planes[k] holds channels * resolution * resolution floats; the value for
  // channel c at grid node (row b, column a) sits at (c*R + b)*R + a, where
  // column a runs along the first projected axis and row b along the second
  // (XY -> (x,y), XZ -> (x,z), YZ -> (y,z)).
  std::array<std::vector<float>, 3> planes;
  int channels = 0;
  int resolution = 0;
  double extent = 1.0;

  float& at(int plane, int c, int row, int col) {
    return planes[plane][(static_cast<std::size_t>(c) * resolution + row) * resolution + col];
  }
  float at(int plane, int c, int row, int col) const {
    return planes[plane][(static_cast<std::size_t>(c) * resolution + row) * resolution + col];
  }
  bool same_shape(const TriPlane& o) const {
    return channels == o.channels && resolution == o.resolution && extent == o.extent;
  }
};

// Double-precision gradient buffer mirroring a tri-plane's layout.
struct TriPlaneGrad {
  std::array<std::vector<double>, 3> planes;
  int channels = 0;
  int resolution = 0;

  static TriPlaneGrad zeros_like(const TriPlane& t);
  double& at(int plane, int c, int row, int col) {
    return planes[plane][(static_cast<std::size_t>(c) * resolution + row) * resolution + col];
  }
  double at(int plane, int c, int row, int col) const {
    return planes[plane][(static_cast<std::size_t>(c) * resolution + row) * resolution + col];
  }
};

// One-dimensional bilinear tap: value = w0*node[i0] + w1*node[i1].
struct AxisTap {
  int i0 = 0;
  int i1 = 0;
  double w0 = 1.0;
  double w1 = 0.0;
};

// Maps a world coordinate to the clamped texel-center grid tap for a plane
// axis. Grid nodes sit at texel centers; out-of-cube coordinates clamp.
AxisTap axis_tap(double extent, int resolution, double u);

TriPlane triplane_new(int channels, int resolution, double extent, double fill);

// Bilinear sample of all three planes at p, summed per channel.
Eigen::VectorXd sample_point(const TriPlane& t, const Eigen::Vector3d& p);

// Allocation-free variant used by the renderer; writes `channels` doubles.
void sample_point_into(const TriPlane& t, double px, double py, double pz, double* out);

// Scatters an upstream feature gradient through the sampling stencil.
void sample_point_backward(const TriPlane& t, double px, double py, double pz,
                           const double* feature_grad, TriPlaneGrad& grad);

TriPlane triplane_add(const TriPlane& a, const TriPlane& b);

// Mean squared difference over all horizontally and vertically adjacent texel
// pairs, across planes and channels.
double tv_loss(const TriPlane& t);

// Accumulates scale * d(tv_loss)/d(features) into grad.
void tv_loss_backward(const TriPlane& t, double scale, TriPlaneGrad& grad);

// Applies features -= step * grad, in-place (float store, double arithmetic).
void triplane_apply_gradient(TriPlane& t, const TriPlaneGrad& grad, double step);

void triplane_save(const TriPlane& t, const std::string& path);
TriPlane triplane_load(const std::string& path);

}  // namespace triavatar
