#pragma once

// The tri-plane field decoder: a small MLP mapping an aggregated tri-plane
// feature vector to (density, rgb). Softplus hidden activations, softplus on
// the density output, sigmoid on the color outputs.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace triavatar {

enum class Activation : std::uint8_t { Softplus = 0 };

struct DecoderLayer {
  // Canonical storage is float32 (what the file format holds); the double
  // mirrors are what evaluation uses.
  Eigen::MatrixXf weight;  // out x in
  Eigen::VectorXf bias;    // out
  Eigen::MatrixXd weight_d;
  Eigen::VectorXd bias_d;
};

struct DecoderWeights {
  std::vector<DecoderLayer> layers;
  Activation hidden_activation = Activation::Softplus;

  int input_width() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols()); }
  int output_width() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows()); }

  // Validates the dimension chain and the 4-wide output, refreshes the double
  // mirrors. Call after constructing or mutating layers by hand.
  void finalize();
};

struct DecodeResult {
  double density = 0.0;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
};

DecodeResult decode(const DecoderWeights& w, const Eigen::VectorXd& feature);

// Reusable evaluation workspace: no allocation per call, caches the sigmoid of
// every pre-activation so the backward pass needs no transcendentals.
class DecoderEval {
 public:
  explicit DecoderEval(const DecoderWeights& w);

  // Evaluates the decoder; the internal caches afterwards describe this call.
  void forward(const double* feature, double& density, double* color);

  // Reverse-mode: given d(density) and d(color), accumulate the feature
  // gradient of the most recent forward() into d_feature (+=).
  void backward(double d_density, const double* d_color, double* d_feature) const;

  int input_width() const { return static_cast<int>(acts_.front().size()); }

 private:
  const DecoderWeights* w_;
  std::vector<Eigen::VectorXd> acts_;  // acts_[0] = input, acts_[i] = post-activation of layer i-1
  std::vector<Eigen::VectorXd> sig_;   // sigmoid of each layer's pre-activation
  std::vector<Eigen::VectorXd> exp_;   // exp(-|z|) scratch for the softplus path
  mutable std::vector<Eigen::VectorXd> dz_;  // scratch for backward
};

void decoder_save(const DecoderWeights& w, const std::string& path);
DecoderWeights decoder_load(const std::string& path);

// Deterministic Gaussian-initialized decoder (seeded), hidden layers of the
// given width. Used by tests and asset generation.
DecoderWeights make_default_decoder(int input_width, int hidden_width = 64, int hidden_layers = 2,
                                    std::uint64_t seed = 1);

}  // namespace triavatar
