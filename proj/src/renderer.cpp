#include "triavatar/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "rng.hpp"
#include "triavatar/errors.hpp"

namespace triavatar {

namespace {

struct Slab {
  double t0 = 0.0;
  double t1 = 0.0;
  bool hit = false;
};

Slab intersect_cube(const Ray& ray, double extent, double t_min, double t_max) {
  double t0 = t_min, t1 = t_max;
  for (int k = 0; k < 3; ++k) {
    double o = ray.origin[k], d = ray.direction[k];
    if (std::abs(d) < 1e-12) {
      if (o < -extent || o > extent) return {};
    } else {
      double ta = (-extent - o) / d;
      double tb = (extent - o) / d;
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
    }
  }
  if (!(t1 > t0)) return {};
  return {t0, t1, true};
}

// Per-worker scratch: decoder workspace plus the per-sample state the
// backward sweep needs.
struct RayEval {
  RayEval(const TriPlane& t, const DecoderWeights& w, int samples)
      : eval(w), feat(t.channels), dfeat(t.channels) {
    ts.resize(samples);
    alphas.resize(samples);
    trans.resize(samples);
    colors.resize(samples);
  }
  DecoderEval eval;
  Eigen::VectorXd feat;
  Eigen::VectorXd dfeat;
  std::vector<double> ts;
  std::vector<double> alphas;
  std::vector<double> trans;  // transmittance BEFORE the sample
  std::vector<Eigen::Vector3d> colors;
  double delta = 0.0;
  bool hit = false;
};

// Marches one ray, filling the workspace arrays. jitter == nullptr means
// midpoint offsets.
RaySample march(const TriPlane& t, RayEval& ws, const Ray& ray, double t_min, double t_max,
                const RenderConfig& cfg, const double* jitter) {
  RaySample out;
  out.rgb = cfg.background_color;
  out.depth = t_max;
  out.alpha = 0.0;
  Slab slab = intersect_cube(ray, t.extent, t_min, t_max);
  ws.hit = slab.hit;
  if (!slab.hit) return out;

  const int n = cfg.samples_per_ray;
  const double delta = (slab.t1 - slab.t0) / n;
  ws.delta = delta;
  double transmittance = 1.0;
  double weight_sum = 0.0;
  Eigen::Vector3d rgb = Eigen::Vector3d::Zero();
  double depth_accum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double off = jitter ? jitter[i] : 0.5;
    const double ti = slab.t0 + (i + off) * delta;
    const Eigen::Vector3d p = ray.origin + ti * ray.direction;
    sample_point_into(t, p.x(), p.y(), p.z(), ws.feat.data());
    double sigma;
    Eigen::Vector3d col;
    ws.eval.forward(ws.feat.data(), sigma, col.data());
    const double alpha = 1.0 - std::exp(-sigma * delta);
    const double weight = transmittance * alpha;
    rgb += weight * col;
    depth_accum += weight * ti;
    weight_sum += weight;
    ws.ts[i] = ti;
    ws.alphas[i] = alpha;
    ws.trans[i] = transmittance;
    ws.colors[i] = col;
    transmittance *= 1.0 - alpha;
  }
  out.rgb = rgb + (1.0 - weight_sum) * cfg.background_color;
  out.alpha = weight_sum;
  out.depth = weight_sum > 1e-6 ? depth_accum / weight_sum : t_max;
  return out;
}

// Reverse sweep over the most recent march() of this workspace: scatters
// d<loss>/d<plane features> for loss = <d_rgb, rgb>.
void backprop_ray(const TriPlane& t, RayEval& ws, const Ray& ray, const Eigen::Vector3d& d_rgb,
                  const RenderConfig& cfg, int samples, TriPlaneGrad& grad) {
  if (!ws.hit || d_rgb.isZero(0.0)) return;
  Eigen::Vector3d suffix = cfg.background_color;
  for (int i = samples - 1; i >= 0; --i) {
    const double trans_i = ws.trans[i];
    const double alpha_i = ws.alphas[i];
    const Eigen::Vector3d& col_i = ws.colors[i];
    const double d_alpha = d_rgb.dot(trans_i * (col_i - suffix));
    const Eigen::Vector3d d_col = (trans_i * alpha_i) * d_rgb;
    const double d_sigma = d_alpha * ws.delta * (1.0 - alpha_i);
    const double ti = ws.ts[i];
    const Eigen::Vector3d p = ray.origin + ti * ray.direction;
    sample_point_into(t, p.x(), p.y(), p.z(), ws.feat.data());
    double sigma;
    Eigen::Vector3d col;
    ws.eval.forward(ws.feat.data(), sigma, col.data());
    ws.dfeat.setZero();
    ws.eval.backward(d_sigma, d_col.data(), ws.dfeat.data());
    sample_point_backward(t, p.x(), p.y(), p.z(), ws.dfeat.data(), grad);
    suffix = alpha_i * col_i + (1.0 - alpha_i) * suffix;
  }
}

void check_render_inputs(const TriPlane& t, const DecoderWeights& w, const RenderConfig& cfg) {
  cfg.validate();
  if (t.channels != w.input_width())
    throw ShapeError("render: tri-plane channels " + std::to_string(t.channels) +
                     " != decoder input width " + std::to_string(w.input_width()));
}

std::uint64_t jitter_seed(std::uint64_t seed, std::uint64_t index) {
  detail::SplitMix64 mix(seed ^ (0x9e3779b97f4a7c15ull * (index + 1)));
  return mix.next();
}

void fill_jitter(std::uint64_t seed, std::uint64_t index, std::vector<double>& buf) {
  detail::SplitMix64 rng(jitter_seed(seed, index));
  for (double& v : buf) v = rng.uniform();
}

}  // namespace

void RenderConfig::validate() const {
  if (samples_per_ray < 2)
    throw ParameterError("RenderConfig: samples_per_ray must be >= 2, got " +
                         std::to_string(samples_per_ray));
  for (int c = 0; c < 3; ++c) {
    double v = background_color[c];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw ParameterError("RenderConfig: background color components must lie in [0,1]");
  }
  if (threads < 0) throw ParameterError("RenderConfig: threads must be >= 0");
}

RenderOutput render(const TriPlane& t, const DecoderWeights& w, const Camera& cam,
                    const RenderConfig& cfg) {
  check_render_inputs(t, w, cfg);
  cam.validate();
  RenderOutput out;
  out.rgb = Image(cam.width, cam.height);
  out.depth = FloatMap(cam.width, cam.height);
  out.alpha = FloatMap(cam.width, cam.height);

  auto run_rows = [&](int y_begin, int y_end) {
    RayEval ws(t, w, cfg.samples_per_ray);
    std::vector<double> jitter;
    if (cfg.stratified) jitter.resize(cfg.samples_per_ray);
    for (int y = y_begin; y < y_end; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        const double* jp = nullptr;
        if (cfg.stratified) {
          fill_jitter(cfg.seed, static_cast<std::uint64_t>(y) * cam.width + x, jitter);
          jp = jitter.data();
        }
        Ray ray = ray_for_pixel(cam, x, y);
        RaySample s = march(t, ws, ray, cam.near, cam.far, cfg, jp);
        for (int c = 0; c < 3; ++c) out.rgb.at(y, x, c) = s.rgb[c];
        out.depth.at(y, x) = s.depth;
        out.alpha.at(y, x) = s.alpha;
      }
    }
  };

  int workers = cfg.threads == 0
                    ? std::max(1u, std::thread::hardware_concurrency())
                    : cfg.threads;
  workers = std::min(workers, cam.height);
  if (workers <= 1) {
    run_rows(0, cam.height);
  } else {
    std::vector<std::thread> pool;
    int rows_per = (cam.height + workers - 1) / workers;
    for (int i = 0; i < workers; ++i) {
      int y0 = i * rows_per;
      int y1 = std::min(cam.height, y0 + rows_per);
      if (y0 >= y1) break;
      pool.emplace_back(run_rows, y0, y1);
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

std::vector<RaySample> render_rays(const TriPlane& t, const DecoderWeights& w,
                                   const std::vector<Ray>& rays, const RenderConfig& cfg) {
  check_render_inputs(t, w, cfg);
  std::vector<RaySample> out;
  out.reserve(rays.size());
  RayEval ws(t, w, cfg.samples_per_ray);
  std::vector<double> jitter;
  if (cfg.stratified) jitter.resize(cfg.samples_per_ray);
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const double* jp = nullptr;
    if (cfg.stratified) {
      fill_jitter(cfg.seed, i, jitter);
      jp = jitter.data();
    }
    out.push_back(march(t, ws, rays[i], 0.0, inf, cfg, jp));
  }
  return out;
}

TriPlaneGrad render_backward(const TriPlane& t, const DecoderWeights& w, const Camera& cam,
                             const RenderConfig& cfg, const Image& loss_gradient) {
  check_render_inputs(t, w, cfg);
  cam.validate();
  if (cfg.stratified)
    throw ParameterError("render_backward: requires stratified=false (midpoint sampling)");
  if (loss_gradient.width != cam.width || loss_gradient.height != cam.height)
    throw ShapeError("render_backward: loss gradient is " + std::to_string(loss_gradient.width) +
                     "x" + std::to_string(loss_gradient.height) + ", camera is " +
                     std::to_string(cam.width) + "x" + std::to_string(cam.height));

  TriPlaneGrad grad = TriPlaneGrad::zeros_like(t);
  RayEval ws(t, w, cfg.samples_per_ray);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      Eigen::Vector3d d_rgb(loss_gradient.at(y, x, 0), loss_gradient.at(y, x, 1),
                            loss_gradient.at(y, x, 2));
      if (d_rgb.isZero(0.0)) continue;
      Ray ray = ray_for_pixel(cam, x, y);
      march(t, ws, ray, cam.near, cam.far, cfg, nullptr);
      backprop_ray(t, ws, ray, d_rgb, cfg, cfg.samples_per_ray, grad);
    }
  }
  return grad;
}

FitResult fit_triplane(const Image& target, const Camera& cam, const DecoderWeights& w,
                       const TriPlane& init, int steps, double step_size, const RenderConfig& cfg,
                       double lambda_tv) {
  check_render_inputs(init, w, cfg);
  cam.validate();
  if (cfg.stratified) throw ParameterError("fit_triplane: requires stratified=false");
  if (steps < 1) throw ParameterError("fit_triplane: steps must be >= 1, got " + std::to_string(steps));
  if (!(step_size > 0.0) || !std::isfinite(step_size))
    throw ParameterError("fit_triplane: step_size must be positive and finite");
  if (lambda_tv < 0.0 || !std::isfinite(lambda_tv))
    throw ParameterError("fit_triplane: lambda_tv must be non-negative and finite");
  if (target.width != cam.width || target.height != cam.height)
    throw ShapeError("fit_triplane: target is " + std::to_string(target.width) + "x" +
                     std::to_string(target.height) + ", camera is " + std::to_string(cam.width) +
                     "x" + std::to_string(cam.height));

  FitResult result;
  result.triplane = init;
  result.trace.reserve(steps);
  const double inv_count = 1.0 / (3.0 * cam.width * cam.height);
  RayEval ws(result.triplane, w, cfg.samples_per_ray);

  for (int step = 0; step < steps; ++step) {
    TriPlaneGrad grad = TriPlaneGrad::zeros_like(result.triplane);
    double l1_sum = 0.0;
    for (int y = 0; y < cam.height; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        Ray ray = ray_for_pixel(cam, x, y);
        RaySample s = march(result.triplane, ws, ray, cam.near, cam.far, cfg, nullptr);
        Eigen::Vector3d d_rgb;
        for (int c = 0; c < 3; ++c) {
          double diff = s.rgb[c] - target.at(y, x, c);
          l1_sum += std::abs(diff);
          d_rgb[c] = diff > 0.0 ? inv_count : (diff < 0.0 ? -inv_count : 0.0);
        }
        backprop_ray(result.triplane, ws, ray, d_rgb, cfg, cfg.samples_per_ray, grad);
      }
    }
    double loss = l1_sum * inv_count;
    if (lambda_tv > 0.0) {
      loss += lambda_tv * tv_loss(result.triplane);
      tv_loss_backward(result.triplane, lambda_tv, grad);
    }
    if (!std::isfinite(loss))
      throw NumericError("fit_triplane: non-finite loss at step " + std::to_string(step));
    result.trace.push_back(loss);
    triplane_apply_gradient(result.triplane, grad, step_size);
  }
  return result;
}

}  // namespace triavatar
