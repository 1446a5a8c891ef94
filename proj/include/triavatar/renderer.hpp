#pragma once

// Ray-marched volumetric rendering of a tri-plane field, its analytic
// backward pass w.r.t. plane features, and a gradient-descent fitting loop.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "triavatar/decoder.hpp"
#include "triavatar/geometry.hpp"
#include "triavatar/image.hpp"
#include "triavatar/triplane.hpp"

namespace triavatar {

struct RenderConfig {
  int samples_per_ray = 64;
  bool stratified = false;                                      // jittered vs midpoint sampling
  Eigen::Vector3d background_color = Eigen::Vector3d::Zero();   // composited behind the field
  std::uint64_t seed = 0;                                       // stratified jitter seed
  int threads = 1;                                              // forward-pass workers

  void validate() const;
};

struct RenderOutput {
  Image rgb;
  FloatMap depth;  // expected termination distance; far where nothing absorbed
  FloatMap alpha;  // accumulated opacity
};

struct RaySample {
  Eigen::Vector3d rgb = Eigen::Vector3d::Zero();
  double depth = 0.0;
  double alpha = 0.0;
};

RenderOutput render(const TriPlane& t, const DecoderWeights& w, const Camera& cam,
                    const RenderConfig& cfg);

// Marches arbitrary rays; the integration range is the ray's intersection
// with the tri-plane cube (forward of the origin).
std::vector<RaySample> render_rays(const TriPlane& t, const DecoderWeights& w,
                                   const std::vector<Ray>& rays, const RenderConfig& cfg);

// Gradient of L = sum_pixels <loss_gradient, rgb> w.r.t. every plane feature.
// Requires midpoint sampling (stratified=false); single deterministic sweep.
TriPlaneGrad render_backward(const TriPlane& t, const DecoderWeights& w, const Camera& cam,
                             const RenderConfig& cfg, const Image& loss_gradient);

struct FitResult {
  TriPlane triplane;
  std::vector<double> trace;  // loss at the parameters before each step's update
};

// Plain gradient descent on mean-absolute pixel loss + lambda_tv * tv_loss.
FitResult fit_triplane(const Image& target, const Camera& cam, const DecoderWeights& w,
                       const TriPlane& init, int steps, double step_size, const RenderConfig& cfg,
                       double lambda_tv = 0.0);

}  // namespace triavatar
