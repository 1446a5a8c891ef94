#include <cmath>
#include <cstring>

#include "doctest.h"
#include "oracles.hpp"
#include "triavatar/decoder.hpp"
#include "triavatar/errors.hpp"
#include "triavatar/renderer.hpp"

using namespace triavatar;

namespace {

// Probe whose density underflows to an exact zero opacity per sample.
DecoderWeights vacuum_probe(int input_width) {
  return harness::make_const_probe(input_width, std::exp(-40.0), {0.5, 0.5, 0.5});
}

}  // namespace

TEST_CASE("zero density renders background, zero alpha, and far depth") {
  TriPlane t = triplane_new(2, 8, 1.0, 0.3);
  DecoderWeights probe = vacuum_probe(2);
  Camera cam = make_frontal_camera(12, 10, 40.0, 3.0, 0.05, 10.0);
  RenderConfig cfg;
  cfg.samples_per_ray = 32;
  cfg.background_color = Eigen::Vector3d(0.2, 0.45, 0.85);
  RenderOutput out = render(t, probe, cam, cfg);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      CHECK(out.alpha.at(y, x) == 0.0);
      CHECK(out.depth.at(y, x) == cam.far);
      for (int c = 0; c < 3; ++c) CHECK(out.rgb.at(y, x, c) == cfg.background_color[c]);
    }
}

TEST_CASE("unit optical depth gives 1 - 1/e") {
  TriPlane t = triplane_new(1, 4, 0.5, 0.0);  // cube side 1
  DecoderWeights probe = harness::make_const_probe(1, 1.0, {0.5, 0.5, 0.5});
  RenderConfig cfg;
  cfg.samples_per_ray = 256;
  Ray ray{{0.1, 0.2, 3.0}, {0.0, 0.0, -1.0}};
  std::vector<RaySample> out = render_rays(t, probe, {ray}, cfg);
  CHECK(std::abs(out[0].alpha - (1.0 - std::exp(-1.0))) < 1e-3);
}

TEST_CASE("opaque medium saturates alpha and stops at the entry face") {
  TriPlane t = triplane_new(1, 4, 0.5, 0.0);
  DecoderWeights probe = harness::make_const_probe(1, 100.0, {0.9, 0.1, 0.2});
  RenderConfig cfg;
  cfg.samples_per_ray = 128;
  Ray ray{{-0.2, 0.15, 2.0}, {0.0, 0.0, -1.0}};
  std::vector<RaySample> out = render_rays(t, probe, {ray}, cfg);
  CHECK(std::abs(out[0].alpha - 1.0) < 1e-4);
  // Closed form for the expected termination depth of a uniform-opacity
  // march: samples at entry + (k + 1/2) d absorb with ratio r = exp(-sigma d),
  // so E[t] = entry + d (1/2 + r / (1 - r)).
  double entry = 1.5;  // hits z = +0.5 from z = 2
  double spacing = 1.0 / cfg.samples_per_ray;
  double r = std::exp(-100.0 * spacing);
  double expected = entry + spacing * (0.5 + r / (1.0 - r));
  CHECK(out[0].depth >= entry);
  CHECK(out[0].depth == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("render_rays through a pixel center equals the rendered pixel") {
  harness::Rng rng(61);
  TriPlane t = harness::random_triplane(rng, 4, 16, 1.0, 0.6);
  DecoderWeights dec = make_default_decoder(4, 16, 2, 21);
  Camera cam = make_frontal_camera(9, 7, 45.0, 2.8, 0.05, 10.0);
  RenderConfig cfg;
  cfg.samples_per_ray = 48;
  RenderOutput img = render(t, dec, cam, cfg);
  std::vector<RaySample> rs = render_rays(t, dec, {ray_for_pixel(cam, 4, 3)}, cfg);
  CHECK(rs[0].rgb.x() == img.rgb.at(3, 4, 0));
  CHECK(rs[0].rgb.y() == img.rgb.at(3, 4, 1));
  CHECK(rs[0].rgb.z() == img.rgb.at(3, 4, 2));
  CHECK(rs[0].depth == img.depth.at(3, 4));
  CHECK(rs[0].alpha == img.alpha.at(3, 4));
}

TEST_CASE("empty ray lists are legal") {
  TriPlane t = triplane_new(1, 4, 1.0, 0.0);
  DecoderWeights dec = make_default_decoder(1, 8, 1, 2);
  RenderConfig cfg;
  CHECK(render_rays(t, dec, {}, cfg).empty());
}

TEST_CASE("midpoint rendering is deterministic across calls and thread counts") {
  harness::Rng rng(62);
  TriPlane t = harness::random_triplane(rng, 3, 12, 1.0, 0.5);
  DecoderWeights dec = make_default_decoder(3, 12, 2, 8);
  Camera cam = make_frontal_camera(16, 16, 40.0, 2.9, 0.05, 10.0);
  RenderConfig cfg;
  cfg.samples_per_ray = 24;
  RenderOutput a = render(t, dec, cam, cfg);
  RenderOutput b = render(t, dec, cam, cfg);
  cfg.threads = 3;
  RenderOutput c = render(t, dec, cam, cfg);
  CHECK(std::memcmp(a.rgb.data.data(), b.rgb.data.data(), a.rgb.data.size() * 8) == 0);
  CHECK(std::memcmp(a.rgb.data.data(), c.rgb.data.data(), a.rgb.data.size() * 8) == 0);
  CHECK(std::memcmp(a.depth.data.data(), c.depth.data.data(), a.depth.data.size() * 8) == 0);
  CHECK(std::memcmp(a.alpha.data.data(), c.alpha.data.data(), a.alpha.data.size() * 8) == 0);
}

TEST_CASE("stratified sampling is seed-deterministic") {
  harness::Rng rng(63);
  TriPlane t = harness::random_triplane(rng, 2, 8, 1.0, 0.5);
  DecoderWeights dec = make_default_decoder(2, 8, 1, 4);
  Camera cam = make_frontal_camera(8, 8, 40.0, 2.9, 0.05, 10.0);
  RenderConfig cfg;
  cfg.samples_per_ray = 16;
  cfg.stratified = true;
  cfg.seed = 77;
  RenderOutput a = render(t, dec, cam, cfg);
  RenderOutput b = render(t, dec, cam, cfg);
  CHECK(std::memcmp(a.rgb.data.data(), b.rgb.data.data(), a.rgb.data.size() * 8) == 0);
  cfg.seed = 78;
  RenderOutput c = render(t, dec, cam, cfg);
  bool any_diff = std::memcmp(a.rgb.data.data(), c.rgb.data.data(), a.rgb.data.size() * 8) != 0;
  CHECK(any_diff);
}

TEST_CASE("render_backward: zero upstream gradient gives zero plane gradient") {
  harness::Rng rng(64);
  TriPlane t = harness::random_triplane(rng, 2, 8, 1.0, 0.5);
  DecoderWeights dec = make_default_decoder(2, 8, 1, 4);
  Camera cam = make_frontal_camera(6, 6, 40.0, 2.9, 0.05, 10.0);
  RenderConfig cfg;
  cfg.samples_per_ray = 12;
  Image zero_grad(6, 6, 0.0);
  TriPlaneGrad g = render_backward(t, dec, cam, cfg, zero_grad);
  for (int k = 0; k < 3; ++k)
    for (double v : g.planes[k]) CHECK(v == 0.0);
}

TEST_CASE("render_backward is linear in the upstream gradient") {
  harness::Rng rng(65);
  TriPlane t = harness::random_triplane(rng, 2, 8, 1.0, 0.5);
  DecoderWeights dec = make_default_decoder(2, 8, 2, 6);
  Camera cam = make_frontal_camera(6, 6, 40.0, 2.9, 0.05, 10.0);
  RenderConfig cfg;
  cfg.samples_per_ray = 12;
  Image grad_img(6, 6);
  for (double& v : grad_img.data) v = rng.normal();
  Image doubled = grad_img;
  for (double& v : doubled.data) v *= 2.0;
  TriPlaneGrad g1 = render_backward(t, dec, cam, cfg, grad_img);
  TriPlaneGrad g2 = render_backward(t, dec, cam, cfg, doubled);
  for (int k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < g1.planes[k].size(); ++i)
      CHECK(std::abs(g2.planes[k][i] - 2.0 * g1.planes[k][i]) <
            1e-9 * std::max(1.0, std::abs(g1.planes[k][i])));
}

TEST_CASE("render_backward requires midpoint sampling") {
  TriPlane t = triplane_new(1, 4, 1.0, 0.0);
  DecoderWeights dec = make_default_decoder(1, 8, 1, 2);
  Camera cam = make_frontal_camera(4, 4, 40.0, 2.9, 0.05, 10.0);
  RenderConfig cfg;
  cfg.stratified = true;
  Image grad_img(4, 4, 1.0);
  CHECK_THROWS_AS(render_backward(t, dec, cam, cfg, grad_img), ParameterError);
}

TEST_CASE("fit at a fixed point leaves the tri-plane unchanged") {
  harness::Rng rng(66);
  TriPlane init = harness::random_triplane(rng, 2, 8, 1.0, 0.4);
  DecoderWeights dec = make_default_decoder(2, 8, 1, 12);
  Camera cam = make_frontal_camera(10, 10, 40.0, 2.9, 0.05, 10.0);
  RenderConfig cfg;
  cfg.samples_per_ray = 16;
  Image target = render(init, dec, cam, cfg).rgb;
  FitResult result = fit_triplane(target, cam, dec, init, 5, 1.0, cfg, 0.0);
  REQUIRE(result.trace.size() == 5);
  for (double v : result.trace) CHECK(v == 0.0);
  for (int k = 0; k < 3; ++k)
    CHECK(std::memcmp(result.triplane.planes[k].data(), init.planes[k].data(),
                      init.planes[k].size() * sizeof(float)) == 0);
}

TEST_CASE("fit rejects non-positive step counts and bad configs") {
  TriPlane init = triplane_new(1, 4, 1.0, 0.0);
  DecoderWeights dec = make_default_decoder(1, 8, 1, 2);
  Camera cam = make_frontal_camera(4, 4, 40.0, 2.9, 0.05, 10.0);
  RenderConfig cfg;
  Image target(4, 4, 0.5);
  CHECK_THROWS_AS(fit_triplane(target, cam, dec, init, 0, 1.0, cfg, 0.0), ParameterError);
  CHECK_THROWS_AS(fit_triplane(target, cam, dec, init, -3, 1.0, cfg, 0.0), ParameterError);
}

TEST_CASE("render config validation") {
  RenderConfig cfg;
  cfg.samples_per_ray = 0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg.samples_per_ray = 16;
  cfg.threads = -1;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg.threads = 0;  // auto
  CHECK_NOTHROW(cfg.validate());
  cfg.background_color = Eigen::Vector3d(0.5, 1.5, 0.5);
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
}
