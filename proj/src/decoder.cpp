#include "triavatar/decoder.hpp"

#include <cmath>

#include "binary_io.hpp"
#include "rng.hpp"
#include "triavatar/errors.hpp"

namespace triavatar {

namespace {

constexpr std::uint32_t kMaxWidth = 1u << 16;

inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void validate_chain(const std::vector<DecoderLayer>& layers, const std::string& context) {
  if (layers.empty()) throw FormatError(context + ": decoder has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.weight.rows() < 1 || l.weight.cols() < 1)
      throw FormatError(context + ": layer " + std::to_string(i) + " has empty dimensions");
    if (l.bias.size() != l.weight.rows())
      throw FormatError(context + ": layer " + std::to_string(i) + " bias length " +
                        std::to_string(l.bias.size()) + " != output width " +
                        std::to_string(l.weight.rows()));
    if (i > 0 && layers[i - 1].weight.rows() != l.weight.cols())
      throw FormatError(context + ": layer " + std::to_string(i) + " input width " +
                        std::to_string(l.weight.cols()) + " does not match layer " +
                        std::to_string(i - 1) + " output width " +
                        std::to_string(layers[i - 1].weight.rows()));
    if (!l.weight.allFinite() || !l.bias.allFinite())
      throw FormatError(context + ": layer " + std::to_string(i) + " contains non-finite values");
  }
  if (layers.back().weight.rows() != 4)
    throw FormatError(context + ": final layer output width must be 4, got " +
                      std::to_string(layers.back().weight.rows()));
}

}  // namespace

void DecoderWeights::finalize() {
  validate_chain(layers, "decoder");
  for (auto& l : layers) {
    l.weight_d = l.weight.cast<double>();
    l.bias_d = l.bias.cast<double>();
  }
}

DecodeResult decode(const DecoderWeights& w, const Eigen::VectorXd& feature) {
  if (feature.size() != w.input_width())
    throw ShapeError("decode: feature length " + std::to_string(feature.size()) +
                     " != decoder input width " + std::to_string(w.input_width()));
  DecoderEval eval(w);
  DecodeResult out;
  eval.forward(feature.data(), out.density, out.color.data());
  return out;
}

DecoderEval::DecoderEval(const DecoderWeights& w) : w_(&w) {
  if (w.layers.empty() || w.layers.front().weight_d.size() == 0)
    throw ParameterError("DecoderEval: weights not finalized");
  acts_.resize(w.layers.size() + 1);
  sig_.resize(w.layers.size());
  dz_.resize(w.layers.size());
  exp_.resize(w.layers.size());
  acts_[0].resize(w.input_width());
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    acts_[i + 1].resize(w.layers[i].weight.rows());
    sig_[i].resize(w.layers[i].weight.rows());
    dz_[i].resize(w.layers[i].weight.rows());
    exp_[i].resize(w.layers[i].weight.rows());
  }
}

void DecoderEval::forward(const double* feature, double& density, double* color) {
  const auto& layers = w_->layers;
  const std::size_t n = layers.size();
  acts_[0] = Eigen::Map<const Eigen::VectorXd>(feature, acts_[0].size());
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd& z = acts_[i + 1];
    z.noalias() = layers[i].weight_d * acts_[i];
    z += layers[i].bias_d;
    // sigmoid(z) = (1 + tanh(z/2)) / 2: stable in both tails, vectorizes, and
    // doubles as the softplus derivative cached for backward().
    sig_[i].array() = 0.5 * (1.0 + (0.5 * z.array()).tanh());
    if (i + 1 < n) {
      exp_[i].array() = (-z.array().abs()).exp();
      z.array() = z.array().max(0.0) + (1.0 + exp_[i].array()).log();
    } else {
      // Final layer: channel 0 density (softplus), channels 1..3 color
      // (sigmoid).
      z[0] = softplus(z[0]);
      for (int j = 1; j < 4; ++j) z[j] = sig_[i][j];
    }
    if (!z.allFinite())
      throw NumericError("decode: non-finite intermediate at layer " + std::to_string(i));
  }
  const Eigen::VectorXd& out = acts_[n];
  density = out[0];
  color[0] = out[1];
  color[1] = out[2];
  color[2] = out[3];
}

void DecoderEval::backward(double d_density, const double* d_color, double* d_feature) const {
  const auto& layers = w_->layers;
  const std::size_t n = layers.size();
  // Final layer: d/dz softplus = sigmoid(z); d/dz sigmoid = s(1-s).
  Eigen::VectorXd& dz_last = dz_[n - 1];
  dz_last[0] = d_density * sig_[n - 1][0];
  for (int j = 1; j < 4; ++j) {
    double s = sig_[n - 1][j];
    dz_last[j] = d_color[j - 1] * s * (1.0 - s);
  }
  for (std::size_t i = n - 1; i > 0; --i) {
    Eigen::VectorXd& da = dz_[i - 1];
    da.noalias() = layers[i].weight_d.transpose() * dz_[i];
    for (int j = 0; j < da.size(); ++j) da[j] *= sig_[i - 1][j];
  }
  Eigen::Map<Eigen::VectorXd> df(d_feature, acts_[0].size());
  df.noalias() += layers[0].weight_d.transpose() * dz_[0];
}

void decoder_save(const DecoderWeights& w, const std::string& path) {
  validate_chain(w.layers, "decoder_save");
  detail::ByteWriter out(path);
  out.write_magic("DEC1");
  out.write_u32(static_cast<std::uint32_t>(w.layers.size()));
  for (const auto& l : w.layers) {
    out.write_u32(static_cast<std::uint32_t>(l.weight.rows()));
    out.write_u32(static_cast<std::uint32_t>(l.weight.cols()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out.write_f32(l.weight(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.write_f32(l.bias[r]);
  }
  out.write_u8(static_cast<std::uint8_t>(w.hidden_activation));
  out.close();
}

DecoderWeights decoder_load(const std::string& path) {
  detail::ByteReader r(path);
  r.expect_magic("DEC1");
  std::uint32_t layer_count = r.read_u32();
  if (layer_count == 0 || layer_count > 64)
    throw FormatError("'" + path + "': bad layer count " + std::to_string(layer_count),
                      r.offset() - 4);
  DecoderWeights w;
  w.layers.resize(layer_count);
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    std::size_t layer_off = r.offset();
    std::uint32_t out_w = r.read_u32();
    std::uint32_t in_w = r.read_u32();
    if (out_w == 0 || in_w == 0 || out_w > kMaxWidth || in_w > kMaxWidth)
      throw FormatError("'" + path + "': layer " + std::to_string(i) + " has bad dimensions " +
                            std::to_string(out_w) + "x" + std::to_string(in_w),
                        layer_off);
    if (i > 0 && static_cast<std::uint32_t>(w.layers[i - 1].weight.rows()) != in_w)
      throw FormatError("'" + path + "': layer " + std::to_string(i) + " input width " +
                            std::to_string(in_w) + " does not match layer " +
                            std::to_string(i - 1) + " output width " +
                            std::to_string(w.layers[i - 1].weight.rows()),
                        layer_off);
    DecoderLayer& l = w.layers[i];
    l.weight.resize(out_w, in_w);
    for (std::uint32_t rr = 0; rr < out_w; ++rr)
      for (std::uint32_t cc = 0; cc < in_w; ++cc) l.weight(rr, cc) = r.read_f32();
    l.bias.resize(out_w);
    for (std::uint32_t rr = 0; rr < out_w; ++rr) l.bias[rr] = r.read_f32();
  }
  std::uint8_t act = r.read_u8();
  if (act != 0)
    throw FormatError("'" + path + "': unknown activation tag " + std::to_string(act),
                      r.offset() - 1);
  w.hidden_activation = Activation::Softplus;
  r.expect_eof();
  if (w.layers.back().weight.rows() != 4)
    throw FormatError("'" + path + "': final layer output width must be 4, got " +
                      std::to_string(w.layers.back().weight.rows()));
  w.finalize();
  return w;
}

DecoderWeights make_default_decoder(int input_width, int hidden_width, int hidden_layers,
                                    std::uint64_t seed) {
  if (input_width < 1 || hidden_width < 1 || hidden_layers < 0)
    throw ParameterError("make_default_decoder: non-positive dimensions");
  detail::SplitMix64 rng(seed);
  DecoderWeights w;
  std::vector<int> widths;
  widths.push_back(input_width);
  for (int i = 0; i < hidden_layers; ++i) widths.push_back(hidden_width);
  widths.push_back(4);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    DecoderLayer l;
    int in_w = widths[i], out_w = widths[i + 1];
    l.weight.resize(out_w, in_w);
    double scale = 1.0 / std::sqrt(static_cast<double>(in_w));
    for (int rr = 0; rr < out_w; ++rr)
      for (int cc = 0; cc < in_w; ++cc)
        l.weight(rr, cc) = static_cast<float>(rng.normal() * scale);
    l.bias = Eigen::VectorXf::Zero(out_w);
    w.layers.push_back(std::move(l));
  }
  w.finalize();
  return w;
}

}  // namespace triavatar
