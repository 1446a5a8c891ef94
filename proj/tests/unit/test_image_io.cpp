#include <cmath>
#include <cstring>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "triavatar/errors.hpp"
#include "triavatar/image.hpp"

using namespace triavatar;

TEST_CASE("png round trip is exact on the 8-bit lattice") {
  std::string dir = harness::scratch_dir("image_png");
  harness::Rng rng(71);
  Image img(13, 9);
  for (double& v : img.data) v = rng.uniform_int(0, 255) / 255.0;
  png_save(img, dir + "/img.png");
  Image back = png_load(dir + "/img.png");
  REQUIRE(back.width == 13);
  REQUIRE(back.height == 9);
  for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(back.data[i] == img.data[i]);
}

TEST_CASE("png write quantizes with round(255 v) and clamps") {
  std::string dir = harness::scratch_dir("image_quant");
  Image img(4, 1);
  img.at(0, 0, 0) = 0.2;     // 51/255 exactly
  img.at(0, 0, 1) = 0.0039;  // rounds to 1
  img.at(0, 0, 2) = 0.0019;  // rounds to 0
  img.at(0, 1, 0) = -0.5;    // clamps to 0
  img.at(0, 1, 1) = 1.5;     // clamps to 255
  img.at(0, 1, 2) = 0.5;     // rounds to 128
  png_save(img, dir + "/img.png");
  Image back = png_load(dir + "/img.png");
  CHECK(back.at(0, 0, 0) == 51.0 / 255.0);
  CHECK(back.at(0, 0, 1) == 1.0 / 255.0);
  CHECK(back.at(0, 0, 2) == 0.0);
  CHECK(back.at(0, 1, 0) == 0.0);
  CHECK(back.at(0, 1, 1) == 1.0);
  CHECK(back.at(0, 1, 2) == 128.0 / 255.0);
}

TEST_CASE("png loader rejects missing and non-png files") {
  std::string dir = harness::scratch_dir("image_badpng");
  CHECK_THROWS_AS(png_load(dir + "/missing.png"), InputError);
  std::ofstream(dir + "/fake.png") << "not a png at all";
  CHECK_THROWS_AS(png_load(dir + "/fake.png"), FormatError);
}

TEST_CASE("float maps round trip bit-exactly") {
  std::string dir = harness::scratch_dir("image_fmp");
  harness::Rng rng(72);
  FloatMap m(6, 11);
  for (double& v : m.data) v = rng.normal() * 10.0;
  fmp_save(m, dir + "/m.fmp");
  FloatMap back = fmp_load(dir + "/m.fmp");
  REQUIRE(back.width == 6);
  REQUIRE(back.height == 11);
  for (std::size_t i = 0; i < m.data.size(); ++i)
    CHECK(static_cast<float>(m.data[i]) == static_cast<float>(back.data[i]));
  fmp_save(back, dir + "/m2.fmp");
  CHECK(harness::files_identical(dir + "/m.fmp", dir + "/m2.fmp"));
}

TEST_CASE("malformed float maps raise FormatError") {
  std::string dir = harness::scratch_dir("image_badfmp");
  FloatMap m(3, 3, 1.0);
  fmp_save(m, dir + "/good.fmp");

  {
    std::ifstream in(dir + "/good.fmp", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    bytes[1] = 'X';
    std::ofstream(dir + "/magic.fmp", std::ios::binary) << bytes;
  }
  CHECK_THROWS_AS(fmp_load(dir + "/magic.fmp"), FormatError);

  {
    std::ifstream in(dir + "/good.fmp", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    bytes.resize(bytes.size() - 2);
    std::ofstream(dir + "/short.fmp", std::ios::binary) << bytes;
  }
  CHECK_THROWS_AS(fmp_load(dir + "/short.fmp"), FormatError);

  {
    std::ifstream in(dir + "/good.fmp", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    bytes += '\0';
    std::ofstream(dir + "/long.fmp", std::ios::binary) << bytes;
  }
  CHECK_THROWS_AS(fmp_load(dir + "/long.fmp"), FormatError);
}

TEST_CASE("feature images round trip and view images losslessly") {
  std::string dir = harness::scratch_dir("image_fim");
  harness::Rng rng(73);
  FeatureImage f(5, 7, 4);
  for (double& v : f.data) v = rng.normal();
  fim_save(f, dir + "/f.fim");
  FeatureImage back = fim_load(dir + "/f.fim");
  REQUIRE(back.channels == 5);
  REQUIRE(back.width == 7);
  REQUIRE(back.height == 4);
  for (std::size_t i = 0; i < f.data.size(); ++i)
    CHECK(static_cast<float>(f.data[i]) == static_cast<float>(back.data[i]));

  Image img(6, 3);
  for (double& v : img.data) v = rng.uniform();
  FeatureImage asf = feature_from_image(img);
  REQUIRE(asf.channels == 3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 6; ++x)
      for (int c = 0; c < 3; ++c) CHECK(asf.at(c, y, x) == img.at(y, x, c));
  Image round = image_from_feature(asf);
  CHECK(std::memcmp(round.data.data(), img.data.data(), img.data.size() * 8) == 0);

  FeatureImage wide(5, 6, 3, 0.25);
  CHECK_THROWS_AS(image_from_feature(wide), ShapeError);
}

TEST_CASE("feature concat stacks channels in order") {
  FeatureImage a(2, 3, 2, 0.0);
  FeatureImage b(1, 3, 2, 0.0);
  a.at(0, 1, 2) = 5.0;
  a.at(1, 0, 0) = 6.0;
  b.at(0, 1, 1) = 7.0;
  FeatureImage c = feature_concat(a, b);
  REQUIRE(c.channels == 3);
  CHECK(c.at(0, 1, 2) == 5.0);
  CHECK(c.at(1, 0, 0) == 6.0);
  CHECK(c.at(2, 1, 1) == 7.0);

  FeatureImage wrong(1, 4, 2, 0.0);
  CHECK_THROWS_AS(feature_concat(a, wrong), ShapeError);
}

TEST_CASE("nearest resampling picks the covering source pixel") {
  FeatureImage f(1, 2, 2, 0.0);
  f.at(0, 0, 0) = 1.0;
  f.at(0, 0, 1) = 2.0;
  f.at(0, 1, 0) = 3.0;
  f.at(0, 1, 1) = 4.0;
  FeatureImage same = resample_nearest(f, 2, 2);
  CHECK(std::memcmp(same.data.data(), f.data.data(), f.data.size() * 8) == 0);
  FeatureImage up = resample_nearest(f, 4, 4);
  CHECK(up.at(0, 0, 0) == 1.0);
  CHECK(up.at(0, 0, 3) == 2.0);
  CHECK(up.at(0, 3, 0) == 3.0);
  CHECK(up.at(0, 3, 3) == 4.0);
}

TEST_CASE("bilinear upsample: identity at same size, averages at midpoints") {
  Image img(2, 1);
  for (int c = 0; c < 3; ++c) {
    img.at(0, 0, c) = 0.0;
    img.at(0, 1, c) = 1.0;
  }
  Image same = upsample_bilinear(img, 2, 1);
  CHECK(std::memcmp(same.data.data(), img.data.data(), img.data.size() * 8) == 0);
  Image up = upsample_bilinear(img, 4, 1);
  // Pixel centers 0.5/4->0.25 maps left of source center 0.5 -> clamped blend
  CHECK(up.at(0, 0, 0) == 0.0);
  CHECK(up.at(0, 3, 0) == 1.0);
  CHECK(up.at(0, 1, 0) > 0.0);
  CHECK(up.at(0, 2, 0) < 1.0);
  CHECK(up.at(0, 1, 0) + up.at(0, 2, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mask png round trip and threshold") {
  std::string dir = harness::scratch_dir("image_mask");
  PixelMask m(5, 4, 0);
  m.at(0, 0) = 1;
  m.at(3, 4) = 1;
  m.at(2, 2) = 1;
  mask_save_png(m, dir + "/m.png");
  PixelMask back = mask_load_png(dir + "/m.png");
  REQUIRE(back.width == 5);
  REQUIRE(back.height == 4);
  for (std::size_t i = 0; i < m.data.size(); ++i) CHECK(back.data[i] == m.data[i]);

  // Gray-level threshold: red channel >= 128 reads as 1.
  Image gray(2, 1);
  gray.at(0, 0, 0) = 127.0 / 255.0;
  gray.at(0, 1, 0) = 128.0 / 255.0;
  png_save(gray, dir + "/gray.png");
  PixelMask thr = mask_load_png(dir + "/gray.png");
  CHECK(thr.at(0, 0) == 0);
  CHECK(thr.at(0, 1) == 1);
}
