#pragma once

// Training objectives: pixel/perceptual reconstruction terms, the neutral-
// expression constraint, TV smoothness (in triplane.hpp), the adversarial
// term, and the stage-1/stage-2 weighted compositions.

#include <vector>

#include "triavatar/image.hpp"
#include "triavatar/morphable.hpp"
#include "triavatar/renderer.hpp"

namespace triavatar {

struct LossWeights {
  double lambda_1 = 1.0;
  double lambda_p = 1.0;
  double lambda_tv = 1.0;
  double lambda_neutral = 1.0;
  double lambda_adv = 0.1;

  void validate() const;
};

// Renders of T_c, T_c+T_e, and T_c+T_e+T_p at the same camera.
struct SupervisionTriplet {
  RenderOutput i_c;
  RenderOutput i_ce;
  RenderOutput i_cep;
};

// Deterministic image -> feature-map-list interface standing in for the
// pretrained perceptual network.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::vector<FeatureImage> extract(const Image& img) const = 0;
};

// Returns the image itself as a single 3-channel level; perceptual() with
// this extractor reduces to l1_image().
class IdentityExtractor final : public FeatureExtractor {
 public:
  std::vector<FeatureImage> extract(const Image& img) const override;
};

// 3-level average-pooling pyramid (full, half, quarter resolution). A
// dependency-free stand-in; makes no claim to perceptual fidelity.
class PyramidExtractor final : public FeatureExtractor {
 public:
  std::vector<FeatureImage> extract(const Image& img) const override;
};

// Scalar scorer standing in for the GAN discriminator; the input is the
// 6-channel concatenation built by adversarial_loss.
class DiscriminatorScorer {
 public:
  virtual ~DiscriminatorScorer() = default;
  virtual double score(const FeatureImage& stacked) const = 0;
};

double l1_image(const Image& a, const Image& b);

// Sum over extractor levels of the mean absolute feature difference.
double perceptual(const Image& a, const Image& b, const FeatureExtractor& phi);

// || I_neu - I_c (.) M_neu || + || phi(I_neu) - phi(I_c (.) M_neu) ||, where
// (.) zeroes render pixels outside the mesh mask.
double neutral_loss(const RenderOutput& i_c, const MeshRender& i_neu, const FeatureExtractor& phi);

struct ReconstructionLosses {
  double l1_total = 0.0;
  double lp_total = 0.0;
};
ReconstructionLosses reconstruction_losses(const SupervisionTriplet& trip, const Image& target,
                                           const FeatureExtractor& phi);

// softplus(D(upsample(low) concat high)); upsampling is bilinear to the
// high-res size, low channels stacked first.
double adversarial_loss(const Image& low_res, const Image& high_res,
                        const DiscriminatorScorer& d);

double stage1_total(double l1, double lp, double tv, double neutral, const LossWeights& w);
double stage2_total(double stage1, double adv, const LossWeights& w);

}  // namespace triavatar
