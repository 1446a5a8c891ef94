#include <cstring>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "triavatar/errors.hpp"
#include "triavatar/triplane.hpp"

using namespace triavatar;

namespace {

// World coordinate of texel center i along a plane axis.
double texel_center(double extent, int resolution, int i) {
  return -extent + (i + 0.5) * 2.0 * extent / resolution;
}

}  // namespace

TEST_CASE("construction at the canonical and smallest shapes") {
  TriPlane big = triplane_new(32, 256, 1.0, 0.0);
  CHECK(big.channels == 32);
  CHECK(big.resolution == 256);
  CHECK(big.extent == 1.0);
  for (int k = 0; k < 3; ++k) CHECK(big.planes[k].size() == 32u * 256u * 256u);
  CHECK(sample_point(big, {0.1, -0.2, 0.3}).isZero());

  TriPlane small = triplane_new(1, 2, 1.0, 7.0);
  CHECK(small.planes[0].size() == 4u);
  CHECK(small.at(2, 0, 1, 1) == 7.0f);
}

TEST_CASE("invalid construction parameters are rejected") {
  CHECK_THROWS_AS(triplane_new(0, 8, 1.0, 0.0), ParameterError);
  CHECK_THROWS_AS(triplane_new(1, 1, 1.0, 0.0), ParameterError);
  CHECK_THROWS_AS(triplane_new(1, 8, 0.0, 0.0), ParameterError);
  CHECK_THROWS_AS(triplane_new(1, 8, -2.0, 0.0), ParameterError);
}

TEST_CASE("constant fill samples to three times the fill everywhere") {
  TriPlane t = triplane_new(3, 16, 1.0, 0.25);
  harness::Rng rng(41);
  for (int trial = 0; trial < 25; ++trial) {
    // Including points outside the cube: clamped taps still see the constant.
    Eigen::Vector3d p(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    Eigen::VectorXd f = sample_point(t, p);
    REQUIRE(f.size() == 3);
    for (int c = 0; c < 3; ++c) CHECK(f[c] == doctest::Approx(0.75).epsilon(1e-12));
  }
}

TEST_CASE("sampling at a texel center returns the node value exactly") {
  TriPlane t = triplane_new(1, 8, 1.0, 0.0);
  t.at(0, 0, 5, 2) = 1.375f;  // XY plane, row = y index, col = x index
  double x = texel_center(1.0, 8, 2);
  double y = texel_center(1.0, 8, 5);
  Eigen::VectorXd f = sample_point(t, {x, y, 0.123});
  CHECK(f[0] == 1.375);  // other planes contribute zero
}

TEST_CASE("bilinear interpolation at a cell center averages the corners") {
  TriPlane t = triplane_new(1, 2, 1.0, 0.0);
  // XY plane nodes: rows are y, cols are x -> corners 0,0 (bottom) and 1,1 (top)
  t.at(0, 0, 1, 0) = 1.0f;
  t.at(0, 0, 1, 1) = 1.0f;
  Eigen::VectorXd f = sample_point(t, {0.0, 0.0, 0.0});
  CHECK(f[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("addition: identity, linearity, associativity") {
  harness::Rng rng(42);
  TriPlane a = harness::random_triplane(rng, 2, 8, 1.0, 1.0);
  TriPlane zero = triplane_new(2, 8, 1.0, 0.0);
  TriPlane same = triplane_add(a, zero);
  for (int k = 0; k < 3; ++k)
    CHECK(std::memcmp(same.planes[k].data(), a.planes[k].data(),
                      a.planes[k].size() * sizeof(float)) == 0);

  TriPlane b = harness::random_triplane(rng, 2, 8, 1.0, 1.0);
  TriPlane sum = triplane_add(a, b);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Vector3d p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    Eigen::VectorXd lhs = sample_point(sum, p);
    Eigen::VectorXd rhs = sample_point(a, p) + sample_point(b, p);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-6);
  }

  // Dyadic features make float addition exact, so grouping cannot matter.
  auto dyadic = [&rng](int seed_unused) {
    TriPlane t = triplane_new(2, 8, 1.0, 0.0);
    (void)seed_unused;
    for (auto& plane : t.planes)
      for (float& v : plane) v = static_cast<float>(rng.uniform_int(-128, 128)) / 256.0f;
    return t;
  };
  TriPlane x = dyadic(0), y = dyadic(1), z = dyadic(2);
  TriPlane left = triplane_add(triplane_add(x, y), z);
  TriPlane right = triplane_add(x, triplane_add(y, z));
  for (int k = 0; k < 3; ++k)
    CHECK(std::memcmp(left.planes[k].data(), right.planes[k].data(),
                      left.planes[k].size() * sizeof(float)) == 0);
}

TEST_CASE("addition rejects mismatched shapes") {
  TriPlane a = triplane_new(2, 8, 1.0, 0.0);
  TriPlane b = triplane_new(2, 16, 1.0, 0.0);
  TriPlane c = triplane_new(3, 8, 1.0, 0.0);
  TriPlane d = triplane_new(2, 8, 2.0, 0.0);
  CHECK_THROWS_AS(triplane_add(a, b), ShapeError);
  CHECK_THROWS_AS(triplane_add(a, c), ShapeError);
  CHECK_THROWS_AS(triplane_add(a, d), ShapeError);
}

TEST_CASE("tv loss of a constant grid is zero") {
  TriPlane t = triplane_new(4, 16, 1.0, 3.5);
  CHECK(tv_loss(t) == 0.0);
}

TEST_CASE("tv loss of a hand-built 2x2 plane") {
  TriPlane t = triplane_new(1, 2, 1.0, 0.0);
  // One plane holds [[0, 1], [0, 1]]: two horizontal unit jumps, no vertical.
  t.at(0, 0, 0, 1) = 1.0f;
  t.at(0, 0, 1, 1) = 1.0f;
  // 4 adjacent pairs per plane (2 horizontal + 2 vertical), 12 total.
  CHECK(tv_loss(t) == doctest::Approx(2.0 / 12.0).epsilon(1e-12));
}

TEST_CASE("tv loss scales quadratically with the features") {
  harness::Rng rng(43);
  TriPlane t = harness::random_triplane(rng, 2, 12, 1.0, 1.0);
  TriPlane scaled = t;
  // Doubling is exact in float, so the quadratic scaling law holds bitwise:
  // every squared difference grows by exactly 4x before the (exact) sum of
  // power-of-two multiples.
  for (auto& plane : scaled.planes)
    for (float& v : plane) v *= 2.0f;
  CHECK(tv_loss(scaled) == 4.0 * tv_loss(t));
}

TEST_CASE("save/load round trips bit-exactly") {
  std::string dir = harness::scratch_dir("triplane_io");
  harness::Rng rng(44);
  TriPlane t = harness::random_triplane(rng, 3, 16, 1.25, 0.7);
  triplane_save(t, dir + "/t.tpl");
  TriPlane back = triplane_load(dir + "/t.tpl");
  CHECK(back.channels == t.channels);
  CHECK(back.resolution == t.resolution);
  CHECK(back.extent == t.extent);
  for (int k = 0; k < 3; ++k)
    CHECK(std::memcmp(back.planes[k].data(), t.planes[k].data(),
                      t.planes[k].size() * sizeof(float)) == 0);
  triplane_save(back, dir + "/t2.tpl");
  CHECK(harness::files_identical(dir + "/t.tpl", dir + "/t2.tpl"));
}

TEST_CASE("malformed tri-plane files raise FormatError") {
  std::string dir = harness::scratch_dir("triplane_bad");
  TriPlane t = triplane_new(2, 4, 1.0, 0.5);
  triplane_save(t, dir + "/good.tpl");

  {  // wrong magic
    std::ifstream in(dir + "/good.tpl", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    bytes[0] = 'Q';
    std::ofstream out(dir + "/magic.tpl", std::ios::binary);
    out << bytes;
  }
  CHECK_THROWS_AS(triplane_load(dir + "/magic.tpl"), FormatError);

  {  // payload shorter than the header promises
    std::ifstream in(dir + "/good.tpl", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    bytes.resize(bytes.size() - 6);
    std::ofstream out(dir + "/short.tpl", std::ios::binary);
    out << bytes;
  }
  CHECK_THROWS_AS(triplane_load(dir + "/short.tpl"), FormatError);

  CHECK_THROWS_AS(triplane_load(dir + "/does_not_exist.tpl"), InputError);
}
