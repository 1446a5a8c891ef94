#include "triavatar/metrics.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "triavatar/errors.hpp"

namespace triavatar {

namespace {

constexpr double kPsnrCap = 99.0;
constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void check_same(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(what) + ": image shapes differ (" + std::to_string(a.width) +
                     "x" + std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                     std::to_string(b.height) + ")");
}

const double* gaussian_window() {
  static double w[kWindow * kWindow];
  static bool init = false;
  if (!init) {
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
      for (int j = 0; j < kWindow; ++j) {
        double di = i - (kWindow - 1) / 2.0;
        double dj = j - (kWindow - 1) / 2.0;
        w[i * kWindow + j] = std::exp(-(di * di + dj * dj) / (2.0 * kSigma * kSigma));
        sum += w[i * kWindow + j];
      }
    }
    for (double& v : w) v /= sum;
    init = true;
  }
  return w;
}

// Bilinear sample with pixel centers at half-integers; black outside.
void sample_bilinear_black(const Image& img, double sx, double sy, double* rgb) {
  double u = sx - 0.5;
  double v = sy - 0.5;
  int x0 = static_cast<int>(std::floor(u));
  int y0 = static_cast<int>(std::floor(v));
  double fx = u - x0;
  double fy = v - y0;
  for (int c = 0; c < 3; ++c) rgb[c] = 0.0;
  for (int dy = 0; dy <= 1; ++dy) {
    int y = y0 + dy;
    if (y < 0 || y >= img.height) continue;
    double wy = dy ? fy : 1.0 - fy;
    for (int dx = 0; dx <= 1; ++dx) {
      int x = x0 + dx;
      if (x < 0 || x >= img.width) continue;
      double wx = dx ? fx : 1.0 - fx;
      for (int c = 0; c < 3; ++c) rgb[c] += wy * wx * img.at(y, x, c);
    }
  }
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  check_same(a, b, "psnr");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    double d = a.data[i] - b.data[i];
    sum += d * d;
  }
  double mse = sum / static_cast<double>(a.data.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& a, const Image& b) {
  check_same(a, b, "ssim");
  if (a.width < kWindow || a.height < kWindow)
    throw ParameterError("ssim: images must be at least " + std::to_string(kWindow) + "x" +
                         std::to_string(kWindow) + ", got " + std::to_string(a.width) + "x" +
                         std::to_string(a.height));
  const double* win = gaussian_window();
  const int out_h = a.height - kWindow + 1;
  const int out_w = a.width - kWindow + 1;
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    double channel_sum = 0.0;
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
        for (int i = 0; i < kWindow; ++i) {
          for (int j = 0; j < kWindow; ++j) {
            double w = win[i * kWindow + j];
            double va = a.at(y + i, x + j, c);
            double vb = b.at(y + i, x + j, c);
            mu_a += w * va;
            mu_b += w * vb;
            aa += w * va * va;
            bb += w * vb * vb;
            ab += w * va * vb;
          }
        }
        double var_a = aa - mu_a * mu_a;
        double var_b = bb - mu_b * mu_b;
        double cov = ab - mu_a * mu_b;
        double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
        double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
        channel_sum += num / den;
      }
    }
    total += channel_sum / (static_cast<double>(out_h) * out_w);
  }
  return total / 3.0;
}

double akd(const KeypointSet& pred, const KeypointSet& gt) {
  if (pred.rows() != gt.rows())
    throw ShapeError("akd: keypoint counts differ (" + std::to_string(pred.rows()) + " vs " +
                     std::to_string(gt.rows()) + ")");
  if (pred.rows() == 0) throw ShapeError("akd: empty keypoint sets");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i)
    sum += (pred.row(i) - gt.row(i)).norm();
  return sum / static_cast<double>(pred.rows());
}

double coeff_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size())
    throw ShapeError("coeff_distance: lengths differ (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  return (a - b).norm();
}

AlignedPair aligned_compare(const Image& pred, const KeypointSet& pred_kps, const Image& gt,
                            const KeypointSet& gt_kps) {
  check_same(pred, gt, "aligned_compare");
  if (pred_kps.rows() != gt_kps.rows())
    throw ShapeError("aligned_compare: keypoint counts differ");
  SimilarityTransform t = procrustes_align(gt_kps, pred_kps, true);

  AlignedPair out;
  out.transform = t;
  out.gt_keypoints = apply_similarity(t, gt_kps);

  // Inverse warp: each output pixel pulls from T^-1(center) in the gt image.
  const double inv_s = 1.0 / t.scale;
  const Eigen::Matrix2d r_inv = t.rotation.transpose();
  const Eigen::Vector2d t_vec(t.translation[0], t.translation[1]);
  out.gt_image = Image(pred.width, pred.height, 0.0);
  for (int y = 0; y < pred.height; ++y) {
    for (int x = 0; x < pred.width; ++x) {
      Eigen::Vector2d q(x + 0.5, y + 0.5);
      Eigen::Vector2d s = inv_s * (r_inv * (q - t_vec));
      double rgb[3];
      sample_bilinear_black(gt, s.x(), s.y(), rgb);
      for (int c = 0; c < 3; ++c) out.gt_image.at(y, x, c) = rgb[c];
    }
  }
  return out;
}

KeypointSet keypoints_load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  std::vector<Eigen::Vector2d> pts;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string::size_type hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double x, y;
    if (!(ls >> x)) continue;  // blank line
    if (!(ls >> y))
      throw FormatError("'" + path + "' line " + std::to_string(line_no) +
                        ": expected `x y` pair");
    std::string extra;
    if (ls >> extra)
      throw FormatError("'" + path + "' line " + std::to_string(line_no) +
                        ": trailing content after `x y` pair");
    if (!std::isfinite(x) || !std::isfinite(y))
      throw FormatError("'" + path + "' line " + std::to_string(line_no) +
                        ": non-finite coordinate");
    pts.emplace_back(x, y);
  }
  KeypointSet out(pts.size(), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) out.row(i) = pts[i].transpose();
  return out;
}

void keypoints_save(const KeypointSet& kps, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out.precision(17);
  for (Eigen::Index i = 0; i < kps.rows(); ++i) out << kps(i, 0) << " " << kps(i, 1) << "\n";
  if (!out) throw InputError("failed writing '" + path + "'");
}

std::optional<double> MetricReport::mean(const char* metric) const {
  double sum = 0.0;
  int count = 0;
  for (const PairMetrics& p : pairs) {
    std::optional<double> v;
    if (!std::strcmp(metric, "psnr")) v = p.psnr;
    else if (!std::strcmp(metric, "ssim")) v = p.ssim;
    else if (!std::strcmp(metric, "l1")) v = p.l1;
    else if (!std::strcmp(metric, "akd")) v = p.akd;
    else if (!std::strcmp(metric, "aed")) v = p.aed;
    else if (!std::strcmp(metric, "apd")) v = p.apd;
    if (v) {
      sum += *v;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

void report_save(const MetricReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out.precision(17);
  out << "# metric report (low-resolution renders; not comparable to super-resolved results)\n";
  out << "# aed/apd are Euclidean coefficient distances\n";
  out << "# reserved external slots: csim fid lpips\n";
  for (const PairMetrics& p : report.pairs) {
    out << "pair " << p.id << " psnr " << p.psnr << " ssim " << p.ssim << " l1 " << p.l1;
    if (p.akd) out << " akd " << *p.akd;
    if (p.aed) out << " aed " << *p.aed;
    if (p.apd) out << " apd " << *p.apd;
    out << "\n";
  }
  out << "means";
  for (const char* m : {"psnr", "ssim", "l1", "akd", "aed", "apd"}) {
    std::optional<double> v = report.mean(m);
    if (v) out << " " << m << " " << *v;
  }
  out << "\n";
  out << "skipped " << report.skipped << "\n";
  if (!out) throw InputError("failed writing '" + path + "'");
}

}  // namespace triavatar
