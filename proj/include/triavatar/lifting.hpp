#pragma once

// Appearance-branch machinery: masking, lifting image features through a
// depth map into a neural point cloud, and rasterizing the cloud onto a
// tri-plane by nearest-neighbor feature transfer.

#include <string>
#include <vector>

#include <Eigen/Core>

#include "triavatar/geometry.hpp"
#include "triavatar/image.hpp"
#include "triavatar/triplane.hpp"

namespace triavatar {

struct NeuralPointCloud {
  std::vector<Eigen::Vector3d> positions;
  std::vector<Eigen::VectorXd> features;  // all the same width
  int channels = 0;

  std::size_t size() const { return positions.size(); }
};

// Zeroes every channel of pixels where mask == 0.
Image mask_apply(const Image& img, const PixelMask& mask);
FeatureImage mask_apply(const FeatureImage& img, const PixelMask& mask);

// One point per valid pixel: position = origin + depth * direction along the
// pixel ray, feature = the pixel's feature column.
NeuralPointCloud lift(const FeatureImage& features, const FloatMap& depth, const Camera& cam,
                      const PixelMask& valid);

// Writes every texel of every plane with the feature of the cloud point whose
// projection onto that plane is nearest (2D Euclidean; ties -> lowest point
// index). Empty cloud -> zero tri-plane.
TriPlane rasterize(const NeuralPointCloud& cloud, int channels, int resolution, double extent);

void npc_save(const NeuralPointCloud& cloud, const std::string& path);
NeuralPointCloud npc_load(const std::string& path);

}  // namespace triavatar
