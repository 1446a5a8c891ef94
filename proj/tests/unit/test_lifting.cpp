#include <cmath>
#include <cstring>

#include "doctest.h"
#include "oracles.hpp"
#include "triavatar/decoder.hpp"
#include "triavatar/errors.hpp"
#include "triavatar/lifting.hpp"
#include "triavatar/renderer.hpp"

using namespace triavatar;

namespace {

// Projects a world point back through the camera; returns pixel coordinates.
Eigen::Vector2d project(const Camera& cam, const Eigen::Vector3d& p) {
  Eigen::Vector3d local = cam.rotation().transpose() * (p - cam.position());
  double z = -local.z();  // camera looks down -z
  return {cam.fx() * local.x() / z + cam.cx(), -cam.fy() * local.y() / z + cam.cy()};
}

}  // namespace

TEST_CASE("mask application zeroes exactly the masked-out pixels") {
  harness::Rng rng(81);
  Image img(6, 5);
  for (double& v : img.data) v = rng.uniform();
  PixelMask ones(6, 5, 1), zeros(6, 5, 0), mixed(6, 5, 0);
  mixed.at(2, 3) = 1;
  mixed.at(4, 1) = 1;

  Image same = mask_apply(img, ones);
  CHECK(std::memcmp(same.data.data(), img.data.data(), img.data.size() * 8) == 0);

  Image dark = mask_apply(img, zeros);
  for (double v : dark.data) CHECK(v == 0.0);

  Image part = mask_apply(img, mixed);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 6; ++x)
      for (int c = 0; c < 3; ++c)
        CHECK(part.at(y, x, c) == (mixed.at(y, x) ? img.at(y, x, c) : 0.0));

  // Idempotent: masking twice equals masking once.
  Image twice = mask_apply(part, mixed);
  CHECK(std::memcmp(twice.data.data(), part.data.data(), part.data.size() * 8) == 0);

  PixelMask wrong(5, 5, 1);
  CHECK_THROWS_AS(mask_apply(img, wrong), ShapeError);
}

TEST_CASE("lifting at zero depth returns the camera origin") {
  Camera cam = make_frontal_camera(4, 4, 40.0, 2.0, 0.05, 10.0);
  FeatureImage feats(2, 4, 4, 0.5);
  FloatMap depth(4, 4, 0.0);
  PixelMask valid(4, 4, 0);
  valid.at(1, 2) = 1;
  NeuralPointCloud cloud = lift(feats, depth, cam, valid);
  REQUIRE(cloud.size() == 1);
  CHECK((cloud.positions[0] - cam.position()).norm() < 1e-12);
  CHECK(cloud.channels == 2);
  CHECK(cloud.features[0].size() == 2);
  CHECK(cloud.features[0][0] == 0.5);
}

TEST_CASE("center pixel lifts onto the optical axis at the given depth") {
  Camera cam = make_frontal_camera(9, 9, 40.0, 3.0, 0.05, 10.0);
  FeatureImage feats(1, 9, 9, 1.0);
  FloatMap depth(9, 9, 2.5);
  PixelMask valid(9, 9, 0);
  valid.at(4, 4) = 1;
  NeuralPointCloud cloud = lift(feats, depth, cam, valid);
  REQUIRE(cloud.size() == 1);
  CHECK(std::abs(cloud.positions[0].x()) < 1e-12);
  CHECK(std::abs(cloud.positions[0].y()) < 1e-12);
  CHECK(cloud.positions[0].z() == doctest::Approx(0.5).epsilon(1e-12));  // 3.0 - 2.5
}

TEST_CASE("an all-invalid mask lifts to an empty cloud") {
  Camera cam = make_frontal_camera(4, 4, 40.0, 2.0, 0.05, 10.0);
  FeatureImage feats(3, 4, 4, 0.1);
  FloatMap depth(4, 4, 1.0);
  PixelMask valid(4, 4, 0);
  NeuralPointCloud cloud = lift(feats, depth, cam, valid);
  CHECK(cloud.size() == 0);
  CHECK(cloud.channels == 3);
}

TEST_CASE("lift keeps features attached to their pixels") {
  harness::Rng rng(82);
  Camera cam = make_frontal_camera(6, 5, 40.0, 2.0, 0.05, 10.0);
  FeatureImage feats(3, 6, 5);
  for (double& v : feats.data) v = rng.normal();
  FloatMap depth(6, 5, 1.5);
  PixelMask valid(6, 5, 1);
  NeuralPointCloud cloud = lift(feats, depth, cam, valid);
  REQUIRE(cloud.size() == 30);
  // Row-major pixel order: point index = y * width + x.
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 6; ++x) {
      const Eigen::VectorXd& f = cloud.features[static_cast<std::size_t>(y) * 6 + x];
      for (int c = 0; c < 3; ++c) CHECK(f[c] == feats.at(c, y, x));
    }
}

TEST_CASE("lifted points reproject onto their source pixels") {
  harness::Rng rng(83);
  Camera cam = make_frontal_camera(12, 10, 45.0, 2.6, 0.05, 10.0);
  FeatureImage feats(1, 12, 10, 1.0);
  FloatMap depth(12, 10);
  for (double& v : depth.data) v = rng.uniform(0.8, 4.0);
  PixelMask valid(12, 10, 1);
  NeuralPointCloud cloud = lift(feats, depth, cam, valid);
  REQUIRE(cloud.size() == 120);
  std::size_t i = 0;
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 12; ++x, ++i) {
      Eigen::Vector2d px = project(cam, cloud.positions[i]);
      CHECK(std::abs(px.x() - (x + 0.5)) < 0.5);
      CHECK(std::abs(px.y() - (y + 0.5)) < 0.5);
    }
}

TEST_CASE("rasterizing an empty cloud yields a zero tri-plane") {
  NeuralPointCloud empty;
  empty.channels = 3;
  TriPlane t = rasterize(empty, 3, 16, 1.0);
  CHECK(t.channels == 3);
  CHECK(t.resolution == 16);
  for (int k = 0; k < 3; ++k)
    for (float v : t.planes[k]) CHECK(v == 0.0f);
}

TEST_CASE("a single point paints every texel of every plane") {
  NeuralPointCloud one;
  one.channels = 2;
  one.positions.emplace_back(0.3, -0.2, 0.7);
  one.features.push_back((Eigen::VectorXd(2) << 1.5, -2.5).finished());
  TriPlane t = rasterize(one, 2, 8, 1.0);
  for (int k = 0; k < 3; ++k)
    for (int row = 0; row < 8; ++row)
      for (int col = 0; col < 8; ++col) {
        CHECK(t.at(k, 0, row, col) == 1.5f);
        CHECK(t.at(k, 1, row, col) == -2.5f);
      }
}

TEST_CASE("equidistant points resolve to the lowest index") {
  NeuralPointCloud cloud;
  cloud.channels = 1;
  // Both points sit 0.75 from the texel center at x = -0.5 (dyadic values,
  // so the squared distances are exactly equal).
  cloud.positions.emplace_back(0.25, 0.0, 0.0);
  cloud.features.push_back(Eigen::VectorXd::Constant(1, 10.0));
  cloud.positions.emplace_back(-1.25, 0.0, 0.0);  // same |dx| to center -0.5
  cloud.features.push_back(Eigen::VectorXd::Constant(1, 20.0));
  TriPlane t = rasterize(cloud, 1, 2, 1.0);
  // XY plane, column at x = -0.5: distances are 0.75 for both points (y tie
  // at 0). The lower index (feature 10) must win.
  auto expect = harness::brute_force_nn(cloud, 2, 1.0);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 4; ++i) {
      int idx = expect[k][i];
      CHECK(t.planes[k][i] == static_cast<float>(cloud.features[idx][0]));
    }
  CHECK(t.at(0, 0, 0, 0) == 10.0f);
  CHECK(t.at(0, 0, 1, 0) == 10.0f);
}

TEST_CASE("rasterize matches the brute-force oracle on random clouds") {
  harness::Rng rng(84);
  for (int trial = 0; trial < 50; ++trial) {
    int n = rng.uniform_int(1, 60);
    int res = rng.uniform_int(4, 16);
    NeuralPointCloud cloud;
    cloud.channels = 2;
    for (int i = 0; i < n; ++i) {
      cloud.positions.emplace_back(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2),
                                   rng.uniform(-1.2, 1.2));
      cloud.features.push_back((Eigen::VectorXd(2) << rng.normal(), rng.normal()).finished());
    }
    TriPlane got = rasterize(cloud, 2, res, 1.0);
    auto expect = harness::brute_force_nn(cloud, res, 1.0);
    for (int k = 0; k < 3; ++k)
      for (int row = 0; row < res; ++row)
        for (int col = 0; col < res; ++col) {
          int idx = expect[k][static_cast<std::size_t>(row) * res + col];
          for (int c = 0; c < 2; ++c)
            CHECK(got.at(k, c, row, col) == static_cast<float>(cloud.features[idx][c]));
        }
  }
}

TEST_CASE("point clouds round trip through npc files") {
  std::string dir = harness::scratch_dir("lifting_npc");
  harness::Rng rng(85);
  NeuralPointCloud cloud;
  cloud.channels = 4;
  for (int i = 0; i < 25; ++i) {
    cloud.positions.emplace_back(rng.normal(), rng.normal(), rng.normal());
    Eigen::VectorXd f(4);
    for (int c = 0; c < 4; ++c) f[c] = rng.normal();
    cloud.features.push_back(f);
  }
  npc_save(cloud, dir + "/c.npc");
  NeuralPointCloud back = npc_load(dir + "/c.npc");
  REQUIRE(back.size() == cloud.size());
  CHECK(back.channels == 4);
  npc_save(back, dir + "/c2.npc");
  CHECK(harness::files_identical(dir + "/c.npc", dir + "/c2.npc"));
}

TEST_CASE("lift validates input shapes") {
  Camera cam = make_frontal_camera(4, 4, 40.0, 2.0, 0.05, 10.0);
  FeatureImage feats(2, 4, 4, 0.0);
  FloatMap depth(4, 4, 1.0);
  PixelMask valid(4, 4, 1);
  FloatMap bad_depth(5, 4, 1.0);
  PixelMask bad_mask(4, 5, 1);
  CHECK_THROWS_AS(lift(feats, bad_depth, cam, valid), ShapeError);
  CHECK_THROWS_AS(lift(feats, depth, cam, bad_mask), ShapeError);
}

TEST_CASE("rasterize validates parameters") {
  NeuralPointCloud cloud;
  cloud.channels = 2;
  cloud.positions.emplace_back(0, 0, 0);
  cloud.features.push_back(Eigen::VectorXd::Zero(2));
  CHECK_THROWS_AS(rasterize(cloud, 3, 8, 1.0), ShapeError);      // channel mismatch
  CHECK_THROWS_AS(rasterize(cloud, 2, 1, 1.0), ParameterError);  // resolution < 2
  CHECK_THROWS_AS(rasterize(cloud, 2, 8, 0.0), ParameterError);  // extent <= 0
}
