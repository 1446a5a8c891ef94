#include "triavatar/triplane.hpp"

#include <algorithm>
#include <cmath>

#include "binary_io.hpp"
#include "triavatar/errors.hpp"

namespace triavatar {

namespace {

constexpr std::uint32_t kMaxDim = 1u << 16;

void check_same_shape(const TriPlane& a, const TriPlane& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": tri-plane shapes differ (" +
                     std::to_string(a.channels) + "x" + std::to_string(a.resolution) + " vs " +
                     std::to_string(b.channels) + "x" + std::to_string(b.resolution) + ")");
  }
}

// Gathers one plane's bilinear sample for every channel into out (+=).
inline void gather_plane(const TriPlane& t, int plane, const AxisTap& a, const AxisTap& b,
                         double* out) {
  const float* base = t.planes[plane].data();
  const std::size_t r = static_cast<std::size_t>(t.resolution);
  const std::size_t stride = r * r;
  const std::size_t r00 = static_cast<std::size_t>(b.i0) * r + a.i0;
  const std::size_t r01 = static_cast<std::size_t>(b.i0) * r + a.i1;
  const std::size_t r10 = static_cast<std::size_t>(b.i1) * r + a.i0;
  const std::size_t r11 = static_cast<std::size_t>(b.i1) * r + a.i1;
  const double w00 = b.w0 * a.w0, w01 = b.w0 * a.w1, w10 = b.w1 * a.w0, w11 = b.w1 * a.w1;
  for (int c = 0; c < t.channels; ++c) {
    const float* pc = base + c * stride;
    out[c] += w00 * pc[r00] + w01 * pc[r01] + w10 * pc[r10] + w11 * pc[r11];
  }
}

inline void scatter_plane(TriPlaneGrad& g, int plane, const AxisTap& a, const AxisTap& b,
                          const double* feature_grad, int channels, int resolution) {
  double* base = g.planes[plane].data();
  const std::size_t r = static_cast<std::size_t>(resolution);
  const std::size_t stride = r * r;
  const std::size_t r00 = static_cast<std::size_t>(b.i0) * r + a.i0;
  const std::size_t r01 = static_cast<std::size_t>(b.i0) * r + a.i1;
  const std::size_t r10 = static_cast<std::size_t>(b.i1) * r + a.i0;
  const std::size_t r11 = static_cast<std::size_t>(b.i1) * r + a.i1;
  const double w00 = b.w0 * a.w0, w01 = b.w0 * a.w1, w10 = b.w1 * a.w0, w11 = b.w1 * a.w1;
  for (int c = 0; c < channels; ++c) {
    double* pc = base + c * stride;
    const double gc = feature_grad[c];
    pc[r00] += w00 * gc;
    pc[r01] += w01 * gc;
    pc[r10] += w10 * gc;
    pc[r11] += w11 * gc;
  }
}

}  // namespace

TriPlaneGrad TriPlaneGrad::zeros_like(const TriPlane& t) {
  TriPlaneGrad g;
  g.channels = t.channels;
  g.resolution = t.resolution;
  for (int k = 0; k < 3; ++k) g.planes[k].assign(t.planes[k].size(), 0.0);
  return g;
}

AxisTap axis_tap(double extent, int resolution, double u) {
  // Texel-center nodes: node i sits at -extent + (i + 0.5) * (2*extent/R).
  double g = (u + extent) * resolution / (2.0 * extent) - 0.5;
  g = std::clamp(g, 0.0, static_cast<double>(resolution - 1));
  AxisTap tap;
  tap.i0 = std::min(static_cast<int>(g), resolution - 2 >= 0 ? resolution - 2 : 0);
  tap.i0 = std::max(tap.i0, 0);
  tap.i1 = std::min(tap.i0 + 1, resolution - 1);
  tap.w1 = g - tap.i0;
  tap.w0 = 1.0 - tap.w1;
  return tap;
}

TriPlane triplane_new(int channels, int resolution, double extent, double fill) {
  if (channels < 1)
    throw ParameterError("triplane_new: channels must be >= 1, got " + std::to_string(channels));
  if (resolution < 2)
    throw ParameterError("triplane_new: resolution must be >= 2, got " +
                         std::to_string(resolution));
  if (!(extent > 0.0) || !std::isfinite(extent))
    throw ParameterError("triplane_new: extent must be positive and finite");
  TriPlane t;
  t.channels = channels;
  t.resolution = resolution;
  t.extent = extent;
  const std::size_t n = static_cast<std::size_t>(channels) * resolution * resolution;
  for (int k = 0; k < 3; ++k) t.planes[k].assign(n, static_cast<float>(fill));
  return t;
}

Eigen::VectorXd sample_point(const TriPlane& t, const Eigen::Vector3d& p) {
  if (!p.allFinite()) throw InputError("sample_point: non-finite coordinates");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(t.channels);
  sample_point_into(t, p.x(), p.y(), p.z(), out.data());
  return out;
}

void sample_point_into(const TriPlane& t, double px, double py, double pz, double* out) {
  const AxisTap tx = axis_tap(t.extent, t.resolution, px);
  const AxisTap ty = axis_tap(t.extent, t.resolution, py);
  const AxisTap tz = axis_tap(t.extent, t.resolution, pz);
  std::fill(out, out + t.channels, 0.0);
  gather_plane(t, 0, tx, ty, out);  // XY
  gather_plane(t, 1, tx, tz, out);  // XZ
  gather_plane(t, 2, ty, tz, out);  // YZ
}

void sample_point_backward(const TriPlane& t, double px, double py, double pz,
                           const double* feature_grad, TriPlaneGrad& grad) {
  const AxisTap tx = axis_tap(t.extent, t.resolution, px);
  const AxisTap ty = axis_tap(t.extent, t.resolution, py);
  const AxisTap tz = axis_tap(t.extent, t.resolution, pz);
  scatter_plane(grad, 0, tx, ty, feature_grad, t.channels, t.resolution);
  scatter_plane(grad, 1, tx, tz, feature_grad, t.channels, t.resolution);
  scatter_plane(grad, 2, ty, tz, feature_grad, t.channels, t.resolution);
}

TriPlane triplane_add(const TriPlane& a, const TriPlane& b) {
  check_same_shape(a, b, "triplane_add");
  TriPlane out = a;
  for (int k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < out.planes[k].size(); ++i) out.planes[k][i] += b.planes[k][i];
  }
  return out;
}

double tv_loss(const TriPlane& t) {
  const int r = t.resolution;
  double sum = 0.0;
  for (int k = 0; k < 3; ++k) {
    for (int c = 0; c < t.channels; ++c) {
      for (int b = 0; b < r; ++b) {
        for (int a = 0; a < r; ++a) {
          double v = t.at(k, c, b, a);
          if (a + 1 < r) {
            double d = t.at(k, c, b, a + 1) - v;
            sum += d * d;
          }
          if (b + 1 < r) {
            double d = t.at(k, c, b + 1, a) - v;
            sum += d * d;
          }
        }
      }
    }
  }
  const double pairs = 3.0 * t.channels * 2.0 * r * (r - 1);
  return sum / pairs;
}

void tv_loss_backward(const TriPlane& t, double scale, TriPlaneGrad& grad) {
  const int r = t.resolution;
  const double pairs = 3.0 * t.channels * 2.0 * r * (r - 1);
  const double s = 2.0 * scale / pairs;
  for (int k = 0; k < 3; ++k) {
    for (int c = 0; c < t.channels; ++c) {
      for (int b = 0; b < r; ++b) {
        for (int a = 0; a < r; ++a) {
          double v = t.at(k, c, b, a);
          if (a + 1 < r) {
            double d = t.at(k, c, b, a + 1) - v;
            grad.at(k, c, b, a + 1) += s * d;
            grad.at(k, c, b, a) -= s * d;
          }
          if (b + 1 < r) {
            double d = t.at(k, c, b + 1, a) - v;
            grad.at(k, c, b + 1, a) += s * d;
            grad.at(k, c, b, a) -= s * d;
          }
        }
      }
    }
  }
}

void triplane_apply_gradient(TriPlane& t, const TriPlaneGrad& grad, double step) {
  if (t.channels != grad.channels || t.resolution != grad.resolution)
    throw ShapeError("triplane_apply_gradient: gradient shape mismatch");
  for (int k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < t.planes[k].size(); ++i) {
      t.planes[k][i] =
          static_cast<float>(static_cast<double>(t.planes[k][i]) - step * grad.planes[k][i]);
    }
  }
}

void triplane_save(const TriPlane& t, const std::string& path) {
  detail::ByteWriter w(path);
  w.write_magic("TPL1");
  w.write_u32(3);
  w.write_u32(static_cast<std::uint32_t>(t.channels));
  w.write_u32(static_cast<std::uint32_t>(t.resolution));
  w.write_u32(static_cast<std::uint32_t>(t.resolution));
  w.write_u32(0);
  w.write_f32(static_cast<float>(t.extent));
  for (int k = 0; k < 3; ++k)
    for (float v : t.planes[k]) w.write_f32(v);
  w.close();
}

TriPlane triplane_load(const std::string& path) {
  detail::ByteReader r(path);
  r.expect_magic("TPL1");
  std::uint32_t plane_count = r.read_u32();
  if (plane_count != 3)
    throw FormatError("'" + path + "': plane count must be 3, got " + std::to_string(plane_count),
                      r.offset() - 4);
  std::uint32_t channels = r.read_u32();
  std::uint32_t res0 = r.read_u32();
  std::uint32_t res1 = r.read_u32();
  std::uint32_t reserved = r.read_u32();
  if (channels == 0 || channels > kMaxDim)
    throw FormatError("'" + path + "': bad channel count " + std::to_string(channels),
                      r.offset() - 16);
  if (res0 < 2 || res0 > kMaxDim || res0 != res1)
    throw FormatError("'" + path + "': bad resolution " + std::to_string(res0) + "x" +
                          std::to_string(res1),
                      r.offset() - 12);
  if (reserved != 0)
    throw FormatError("'" + path + "': reserved field must be 0", r.offset() - 4);
  float extent = r.read_f32();
  if (!(extent > 0.0f) || !std::isfinite(extent))
    throw FormatError("'" + path + "': extent must be positive and finite", r.offset() - 4);
  TriPlane t;
  t.channels = static_cast<int>(channels);
  t.resolution = static_cast<int>(res0);
  t.extent = static_cast<double>(extent);
  const std::size_t n = static_cast<std::size_t>(channels) * res0 * res0;
  for (int k = 0; k < 3; ++k) {
    t.planes[k].resize(n);
    for (std::size_t i = 0; i < n; ++i) t.planes[k][i] = r.read_f32();
  }
  r.expect_eof();
  return t;
}

}  // namespace triavatar
