#include "triavatar/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

#include "binary_io.hpp"
#include "triavatar/errors.hpp"

namespace triavatar {

namespace {

void check_dims(int width, int height, const char* what) {
  if (width <= 0 || height <= 0) {
    throw ShapeError(std::string(what) + ": dimensions must be positive, got " +
                     std::to_string(width) + "x" + std::to_string(height));
  }
}

std::uint8_t quantize(double v) {
  double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Reads any 8/16-bit gray/palette/RGB/RGBA PNG, expanded to 8-bit RGB rows.
std::vector<std::uint8_t> png_read_rgb(const std::string& path, int& width, int& height) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw InputError("cannot open '" + path + "' for reading");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("png_create_info_struct failed");
  }

  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("'" + path + "': not a valid PNG file");
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  png_byte color_type = png_get_color_type(png, info);
  png_byte bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  std::size_t rowbytes = png_get_rowbytes(png, info);
  pixels.assign(rowbytes * height, 0);
  rows.resize(height);
  for (int y = 0; y < height; ++y) rows[y] = pixels.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (rowbytes != static_cast<std::size_t>(width) * 3)
    throw FormatError("'" + path + "': unexpected PNG row layout");
  return pixels;
}

void png_write_rgb(const std::string& path, const std::vector<std::uint8_t>& pixels, int width,
                   int height) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw InputError("cannot open '" + path + "' for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("png_create_info_struct failed");
  }

  std::vector<png_bytep> rows(height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("failed to write PNG '" + path + "'");
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(y) * width * 3);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

FeatureImage feature_from_image(const Image& img) {
  FeatureImage f(3, img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) f.at(c, y, x) = img.at(y, x, c);
  return f;
}

Image image_from_feature(const FeatureImage& f) {
  if (f.channels != 3)
    throw ShapeError("image_from_feature: need 3 channels, got " + std::to_string(f.channels));
  Image img(f.width, f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = f.at(c, y, x);
  return img;
}

FeatureImage feature_concat(const FeatureImage& a, const FeatureImage& b) {
  if (a.width != b.width || a.height != b.height)
    throw ShapeError("feature_concat: spatial shapes differ (" + std::to_string(a.width) + "x" +
                     std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                     std::to_string(b.height) + ")");
  FeatureImage out(a.channels + b.channels, a.width, a.height);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
  return out;
}

FeatureImage resample_nearest(const FeatureImage& f, int width, int height) {
  check_dims(width, height, "resample_nearest");
  if (width == f.width && height == f.height) return f;
  FeatureImage out(f.channels, width, height);
  for (int y = 0; y < height; ++y) {
    int sy = std::min(static_cast<int>((y + 0.5) * f.height / height), f.height - 1);
    for (int x = 0; x < width; ++x) {
      int sx = std::min(static_cast<int>((x + 0.5) * f.width / width), f.width - 1);
      for (int c = 0; c < f.channels; ++c) out.at(c, y, x) = f.at(c, sy, sx);
    }
  }
  return out;
}

Image upsample_bilinear(const Image& img, int width, int height) {
  check_dims(width, height, "upsample_bilinear");
  if (width == img.width && height == img.height) return img;
  Image out(width, height);
  for (int y = 0; y < height; ++y) {
    double sy = (y + 0.5) * img.height / height - 0.5;
    double fy = std::clamp(sy, 0.0, static_cast<double>(img.height - 1));
    int y0 = std::min(static_cast<int>(std::floor(fy)), img.height - 1);
    int y1 = std::min(y0 + 1, img.height - 1);
    double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      double sx = (x + 0.5) * img.width / width - 0.5;
      double fx = std::clamp(sx, 0.0, static_cast<double>(img.width - 1));
      int x0 = std::min(static_cast<int>(std::floor(fx)), img.width - 1);
      int x1 = std::min(x0 + 1, img.width - 1);
      double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        double top = (1.0 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c);
        double bot = (1.0 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c);
        out.at(y, x, c) = (1.0 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

Image png_load(const std::string& path) {
  int width = 0, height = 0;
  std::vector<std::uint8_t> pixels = png_read_rgb(path, width, height);
  Image img(width, height);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = pixels[i] / 255.0;
  return img;
}

void png_save(const Image& img, const std::string& path) {
  check_dims(img.width, img.height, "png_save");
  std::vector<std::uint8_t> pixels(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) pixels[i] = quantize(img.data[i]);
  png_write_rgb(path, pixels, img.width, img.height);
}

PixelMask mask_load_png(const std::string& path) {
  int width = 0, height = 0;
  std::vector<std::uint8_t> pixels = png_read_rgb(path, width, height);
  PixelMask mask(width, height);
  for (std::size_t i = 0; i < mask.data.size(); ++i) mask.data[i] = pixels[3 * i] >= 128 ? 1 : 0;
  return mask;
}

void mask_save_png(const PixelMask& mask, const std::string& path) {
  check_dims(mask.width, mask.height, "mask_save_png");
  std::vector<std::uint8_t> pixels(3 * mask.data.size());
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    std::uint8_t v = mask.data[i] ? 255 : 0;
    pixels[3 * i] = pixels[3 * i + 1] = pixels[3 * i + 2] = v;
  }
  png_write_rgb(path, pixels, mask.width, mask.height);
}

FloatMap fmp_load(const std::string& path) {
  detail::ByteReader r(path);
  r.expect_magic("FMP1", "float map");
  std::uint32_t height = r.read_u32("height");
  std::uint32_t width = r.read_u32("width");
  if (height == 0 || width == 0 || height > (1u << 20) || width > (1u << 20))
    throw FormatError("'" + path + "': implausible float-map dimensions", r.offset());
  FloatMap map(static_cast<int>(width), static_cast<int>(height));
  for (double& v : map.data) v = r.read_f32("payload");
  r.expect_eof();
  return map;
}

void fmp_save(const FloatMap& map, const std::string& path) {
  check_dims(map.width, map.height, "fmp_save");
  detail::ByteWriter w(path);
  w.write_magic("FMP1");
  w.write_u32(static_cast<std::uint32_t>(map.height));
  w.write_u32(static_cast<std::uint32_t>(map.width));
  for (double v : map.data) w.write_f32(static_cast<float>(v));
  w.close();
}

FeatureImage fim_load(const std::string& path) {
  detail::ByteReader r(path);
  r.expect_magic("FIM1", "feature image");
  std::uint32_t channels = r.read_u32("channels");
  std::uint32_t height = r.read_u32("height");
  std::uint32_t width = r.read_u32("width");
  if (channels == 0 || height == 0 || width == 0 || channels > 4096 || height > (1u << 20) ||
      width > (1u << 20))
    throw FormatError("'" + path + "': implausible feature-image dimensions", r.offset());
  FeatureImage f(static_cast<int>(channels), static_cast<int>(width), static_cast<int>(height));
  for (double& v : f.data) v = r.read_f32("payload");
  r.expect_eof();
  return f;
}

void fim_save(const FeatureImage& f, const std::string& path) {
  check_dims(f.width, f.height, "fim_save");
  if (f.channels <= 0) throw ShapeError("fim_save: channel count must be positive");
  detail::ByteWriter w(path);
  w.write_magic("FIM1");
  w.write_u32(static_cast<std::uint32_t>(f.channels));
  w.write_u32(static_cast<std::uint32_t>(f.height));
  w.write_u32(static_cast<std::uint32_t>(f.width));
  for (double v : f.data) w.write_f32(static_cast<float>(v));
  w.close();
}

}  // namespace triavatar
