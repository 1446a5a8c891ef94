#pragma once

// Image containers and file I/O: 8-bit PNG for RGB, a raw float-map format
// ("FMP1") for depth/alpha, and a multi-channel feature-image format ("FIM1").

#include <cstdint>
#include <string>
#include <vector>

namespace triavatar {

// RGB image, values nominally in [0,1], row-major interleaved.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // height*width*3

  Image() = default;
  Image(int w, int h, double fill = 0.0) : width(w), height(h), data(3ull * w * h, fill) {}

  double& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  double at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  bool same_shape(const Image& o) const { return width == o.width && height == o.height; }
};

// Single-channel float map (depth, alpha, ...).
struct FloatMap {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // height*width

  FloatMap() = default;
  FloatMap(int w, int h, double fill = 0.0) : width(w), height(h), data(1ull * w * h, fill) {}

  double& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Binary mask, values 0 or 1.
struct PixelMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  PixelMask() = default;
  PixelMask(int w, int h, std::uint8_t fill = 0) : width(w), height(h), data(1ull * w * h, fill) {}

  std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Channel-major feature stack, data[c][y][x].
struct FeatureImage {
  int channels = 0;
  int width = 0;
  int height = 0;
  std::vector<double> data;

  FeatureImage() = default;
  FeatureImage(int c, int w, int h, double fill = 0.0)
      : channels(c), width(w), height(h), data(static_cast<std::size_t>(c) * w * h, fill) {}

  double& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

// Views an RGB image as a 3-channel feature stack and back.
FeatureImage feature_from_image(const Image& img);
Image image_from_feature(const FeatureImage& f);  // requires channels == 3

// Stacks a on top of b channel-wise; spatial dimensions must agree.
FeatureImage feature_concat(const FeatureImage& a, const FeatureImage& b);

// Nearest-pixel resampling (pixel centers at half-integers).
FeatureImage resample_nearest(const FeatureImage& f, int width, int height);

// Bilinear resize with clamped borders; identity when sizes already match.
Image upsample_bilinear(const Image& img, int width, int height);

// PNG I/O. Writing quantizes with round(255*v) after clamping to [0,1];
// reading accepts 8-bit gray/RGB/RGBA and returns RGB in [0,1].
Image png_load(const std::string& path);
void png_save(const Image& img, const std::string& path);

// Masks ride in PNGs: a pixel is 1 where the red channel is >= 128.
PixelMask mask_load_png(const std::string& path);
void mask_save_png(const PixelMask& mask, const std::string& path);

// Float maps: magic "FMP1", u32 height, u32 width, then h*w f32, row-major,
// all little-endian.
FloatMap fmp_load(const std::string& path);
void fmp_save(const FloatMap& map, const std::string& path);

// Feature images: magic "FIM1", u32 channels, u32 height, u32 width, then
// channel-major row-major f32 payload.
FeatureImage fim_load(const std::string& path);
void fim_save(const FeatureImage& f, const std::string& path);

}  // namespace triavatar
