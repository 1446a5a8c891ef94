#pragma once

// Reproducible evaluation metrics (PSNR, SSIM, L1, AKD, AED/APD) and the
// Procrustes-aligned comparison protocol.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "triavatar/geometry.hpp"
#include "triavatar/image.hpp"

namespace triavatar {

// N x 2 image coordinates in pixels.
using KeypointSet = Eigen::MatrixX2d;

// 10*log10(1/MSE), capped at 99 dB (the zero-MSE convention).
double psnr(const Image& a, const Image& b);

// Mean structural similarity: 11x11 Gaussian window (sigma 1.5), C1=(0.01)^2,
// C2=(0.03)^2 on [0,1] range, valid-mode windows, averaged over channels.
double ssim(const Image& a, const Image& b);

// Mean Euclidean distance over corresponding keypoints.
double akd(const KeypointSet& pred, const KeypointSet& gt);

// Euclidean norm of the coefficient difference (AED on expression blocks,
// APD on pose blocks).
double coeff_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct AlignedPair {
  Image gt_image;          // gt warped into the prediction's frame
  KeypointSet gt_keypoints;  // gt keypoints mapped by the fitted transform
  SimilarityTransform transform;
};

// Fits gt keypoints onto pred keypoints with a 2D similarity transform and
// warps the gt image accordingly (bilinear, black fill).
AlignedPair aligned_compare(const Image& pred, const KeypointSet& pred_kps, const Image& gt,
                            const KeypointSet& gt_kps);

KeypointSet keypoints_load(const std::string& path);
void keypoints_save(const KeypointSet& kps, const std::string& path);

struct PairMetrics {
  std::string id;
  double psnr = 0.0;
  double ssim = 0.0;
  double l1 = 0.0;
  std::optional<double> akd;
  std::optional<double> aed;
  std::optional<double> apd;
};

struct MetricReport {
  std::vector<PairMetrics> pairs;
  int skipped = 0;

  // Arithmetic means over the pairs that carry each metric.
  std::optional<double> mean(const char* metric) const;
};

// Fixed-order text report (diffable golden format).
void report_save(const MetricReport& report, const std::string& path);

}  // namespace triavatar
