#include "triavatar/losses.hpp"

#include <cmath>

#include "triavatar/errors.hpp"

namespace triavatar {

namespace {

void check_same(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(what) + ": image shapes differ (" + std::to_string(a.width) +
                     "x" + std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                     std::to_string(b.height) + ")");
}

// 2x2 average pooling with edge replication for odd sizes.
Image pool_half(const Image& img) {
  int w = std::max(1, (img.width + 1) / 2);
  int h = std::max(1, (img.height + 1) / 2);
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    int y0 = 2 * y;
    int y1 = std::min(2 * y + 1, img.height - 1);
    for (int x = 0; x < w; ++x) {
      int x0 = 2 * x;
      int x1 = std::min(2 * x + 1, img.width - 1);
      for (int c = 0; c < 3; ++c) {
        out.at(y, x, c) = 0.25 * (img.at(y0, x0, c) + img.at(y0, x1, c) + img.at(y1, x0, c) +
                                  img.at(y1, x1, c));
      }
    }
  }
  return out;
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

Image masked_rgb(const RenderOutput& render, const PixelMask& mask) {
  if (render.rgb.width != mask.width || render.rgb.height != mask.height)
    throw ShapeError("neutral_loss: render and mesh mask shapes differ");
  Image out = render.rgb;
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      if (!mask.at(y, x))
        for (int c = 0; c < 3; ++c) out.at(y, x, c) = 0.0;
  return out;
}

}  // namespace

void LossWeights::validate() const {
  for (double v : {lambda_1, lambda_p, lambda_tv, lambda_neutral, lambda_adv})
    if (!std::isfinite(v) || v < 0.0)
      throw ParameterError("LossWeights: all weights must be finite and non-negative");
}

std::vector<FeatureImage> IdentityExtractor::extract(const Image& img) const {
  return {feature_from_image(img)};
}

std::vector<FeatureImage> PyramidExtractor::extract(const Image& img) const {
  std::vector<FeatureImage> levels;
  levels.push_back(feature_from_image(img));
  Image half = pool_half(img);
  levels.push_back(feature_from_image(half));
  levels.push_back(feature_from_image(pool_half(half)));
  return levels;
}

double l1_image(const Image& a, const Image& b) {
  check_same(a, b, "l1_image");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) sum += std::abs(a.data[i] - b.data[i]);
  return sum / static_cast<double>(a.data.size());
}

double perceptual(const Image& a, const Image& b, const FeatureExtractor& phi) {
  check_same(a, b, "perceptual");
  std::vector<FeatureImage> fa = phi.extract(a);
  std::vector<FeatureImage> fb = phi.extract(b);
  if (fa.size() != fb.size())
    throw NumericError("perceptual: extractor produced different level counts");
  double total = 0.0;
  for (std::size_t lvl = 0; lvl < fa.size(); ++lvl) {
    const FeatureImage& x = fa[lvl];
    const FeatureImage& y = fb[lvl];
    if (x.channels != y.channels || x.width != y.width || x.height != y.height)
      throw ShapeError("perceptual: level " + std::to_string(lvl) + " feature shapes differ");
    double sum = 0.0;
    for (std::size_t i = 0; i < x.data.size(); ++i) sum += std::abs(x.data[i] - y.data[i]);
    if (!std::isfinite(sum))
      throw NumericError("perceptual: non-finite features at level " + std::to_string(lvl));
    total += sum / static_cast<double>(x.data.size());
  }
  return total;
}

double neutral_loss(const RenderOutput& i_c, const MeshRender& i_neu,
                    const FeatureExtractor& phi) {
  Image masked = masked_rgb(i_c, i_neu.mask);
  check_same(i_neu.image, masked, "neutral_loss");
  return l1_image(i_neu.image, masked) + perceptual(i_neu.image, masked, phi);
}

ReconstructionLosses reconstruction_losses(const SupervisionTriplet& trip, const Image& target,
                                           const FeatureExtractor& phi) {
  ReconstructionLosses out;
  for (const RenderOutput* r : {&trip.i_c, &trip.i_ce, &trip.i_cep}) {
    out.l1_total += l1_image(r->rgb, target);
    out.lp_total += perceptual(r->rgb, target, phi);
  }
  return out;
}

double adversarial_loss(const Image& low_res, const Image& high_res,
                        const DiscriminatorScorer& d) {
  Image up = upsample_bilinear(low_res, high_res.width, high_res.height);
  FeatureImage stacked = feature_concat(feature_from_image(up), feature_from_image(high_res));
  double score = d.score(stacked);
  if (!std::isfinite(score)) throw NumericError("adversarial_loss: scorer returned non-finite");
  return softplus(score);
}

double stage1_total(double l1, double lp, double tv, double neutral, const LossWeights& w) {
  w.validate();
  for (double v : {l1, lp, tv, neutral})
    if (!std::isfinite(v)) throw NumericError("stage1_total: non-finite loss part");
  return w.lambda_1 * l1 + w.lambda_p * lp + w.lambda_tv * tv + w.lambda_neutral * neutral;
}

double stage2_total(double stage1, double adv, const LossWeights& w) {
  w.validate();
  if (!std::isfinite(stage1) || !std::isfinite(adv))
    throw NumericError("stage2_total: non-finite loss part");
  return stage1 + w.lambda_adv * adv;
}

}  // namespace triavatar
