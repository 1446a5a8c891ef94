#include "triavatar/geometry.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <vector>

#include "triavatar/errors.hpp"

namespace triavatar {

void Camera::validate() const {
  if (width <= 0 || height <= 0)
    throw ParameterError("camera width/height must be positive");
  if (fx() <= 0.0 || fy() <= 0.0)
    throw ParameterError("camera focal lengths must be positive");
  if (!(near > 0.0) || !(near < far))
    throw ParameterError("camera requires 0 < near < far");
  const Eigen::Matrix3d r = rotation();
  if ((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6)
    throw ParameterError("camera rotation is not orthonormal");
  if (r.determinant() < 0.0)
    throw ParameterError("camera rotation has negative determinant");
  const Eigen::RowVector4d last = pose.row(3);
  if ((last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-9)
    throw ParameterError("camera pose last row must be [0 0 0 1]");
}

Camera make_frontal_camera(int width, int height, double fov_y_deg, double distance,
                           double near, double far) {
  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.near = near;
  cam.far = far;
  const double f = 0.5 * height / std::tan(0.5 * fov_y_deg * std::numbers::pi / 180.0);
  cam.intrinsics << f, 0, 0.5 * width, 0, f, 0.5 * height, 0, 0, 1;
  cam.pose = Eigen::Matrix4d::Identity();
  cam.pose(2, 3) = distance;
  cam.validate();
  return cam;
}

Ray ray_through(const Camera& camera, double px, double py) {
  // Camera space: x right, y up, looking down -z. Pixel rows grow downward.
  const Eigen::Vector3d dir_cam((px - camera.cx()) / camera.fx(),
                                -(py - camera.cy()) / camera.fy(), -1.0);
  Ray ray;
  ray.origin = camera.position();
  ray.direction = (camera.rotation() * dir_cam).normalized();
  return ray;
}

Ray ray_for_pixel(const Camera& camera, int px, int py) {
  if (px < 0 || px >= camera.width || py < 0 || py >= camera.height)
    throw BoundsError("pixel (" + std::to_string(px) + ", " + std::to_string(py) +
                      ") outside " + std::to_string(camera.width) + "x" +
                      std::to_string(camera.height) + " image");
  return ray_through(camera, px + 0.5, py + 0.5);
}

SimilarityTransform SimilarityTransform::identity(int dim) {
  SimilarityTransform t;
  t.scale = 1.0;
  t.rotation = Eigen::MatrixXd::Identity(dim, dim);
  t.translation = Eigen::VectorXd::Zero(dim);
  return t;
}

SimilarityTransform procrustes_align(const Eigen::MatrixXd& source_points,
                                     const Eigen::MatrixXd& target_points,
                                     bool with_scale) {
  const auto n = source_points.rows();
  const auto k = source_points.cols();
  if (k != 2 && k != 3) throw ParameterError("procrustes_align expects 2D or 3D points");
  if (target_points.rows() != n || target_points.cols() != k)
    throw ShapeError("procrustes_align point sets must have equal shapes");
  if (n < k + 1) throw ParameterError("procrustes_align needs at least k+1 points");

  const Eigen::RowVectorXd src_mean = source_points.colwise().mean();
  const Eigen::RowVectorXd dst_mean = target_points.colwise().mean();
  const Eigen::MatrixXd src_c = source_points.rowwise() - src_mean;
  const Eigen::MatrixXd dst_c = target_points.rowwise() - dst_mean;

  const double src_var = src_c.squaredNorm() / static_cast<double>(n);
  if (src_var < 1e-24)
    throw DegenerateError("procrustes_align: source points are coincident");

  // Cross-covariance; SVD with a det correction on the smallest singular
  // direction picks the best proper rotation.
  const Eigen::MatrixXd cov = dst_c.transpose() * src_c / static_cast<double>(n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::VectorXd d = Eigen::VectorXd::Ones(k);
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(k - 1) = -1.0;

  SimilarityTransform t;
  t.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  t.scale = with_scale ? svd.singularValues().dot(d) / src_var : 1.0;
  t.translation = dst_mean.transpose() - t.scale * t.rotation * src_mean.transpose();
  return t;
}

Eigen::MatrixXd apply_similarity(const SimilarityTransform& t,
                                 const Eigen::MatrixXd& points) {
  if (points.cols() != t.dim())
    throw ShapeError("apply_similarity: points are " + std::to_string(points.cols()) +
                     "D but transform is " + std::to_string(t.dim()) + "D");
  Eigen::MatrixXd out = t.scale * (points * t.rotation.transpose());
  out.rowwise() += t.translation.transpose();
  return out;
}

namespace {

std::map<std::string, std::vector<double>> parse_key_numbers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open camera file '" + path + "'");
  std::map<std::string, std::vector<double>> fields;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    std::string eq;
    if (!(ls >> eq) || eq != "=")
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected 'key = values'");
    std::vector<double> values;
    double v;
    while (ls >> v) values.push_back(v);
    if (!ls.eof())
      throw FormatError(path + ":" + std::to_string(lineno) + ": non-numeric value");
    if (fields.count(key))
      throw FormatError(path + ":" + std::to_string(lineno) + ": duplicate field '" + key + "'");
    fields[key] = std::move(values);
  }
  return fields;
}

const std::vector<double>& field(const std::map<std::string, std::vector<double>>& fields,
                                 const std::string& path, const std::string& key,
                                 std::size_t count) {
  auto it = fields.find(key);
  if (it == fields.end())
    throw FormatError(path + ": missing field '" + key + "'");
  if (it->second.size() != count)
    throw FormatError(path + ": field '" + key + "' expects " + std::to_string(count) +
                      " numbers, got " + std::to_string(it->second.size()));
  return it->second;
}

}  // namespace

Camera camera_load(const std::string& path) {
  const auto fields = parse_key_numbers(path);
  static const char* known[] = {"intrinsics", "pose", "width", "height", "near", "far"};
  for (const auto& [key, _] : fields) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw FormatError(path + ": unknown field '" + key + "'");
  }

  Camera cam;
  const auto& k9 = field(fields, path, "intrinsics", 9);
  const auto& p16 = field(fields, path, "pose", 16);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) cam.intrinsics(i, j) = k9[i * 3 + j];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) cam.pose(i, j) = p16[i * 4 + j];
  cam.width = static_cast<int>(field(fields, path, "width", 1)[0]);
  cam.height = static_cast<int>(field(fields, path, "height", 1)[0]);
  cam.near = field(fields, path, "near", 1)[0];
  cam.far = field(fields, path, "far", 1)[0];
  try {
    cam.validate();
  } catch (const ParameterError& e) {
    throw FormatError(path + ": " + e.what());
  }
  return cam;
}

void camera_save(const Camera& camera, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out.precision(17);
  out << "intrinsics =";
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out << ' ' << camera.intrinsics(i, j);
  out << "\npose =";
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out << ' ' << camera.pose(i, j);
  out << "\nwidth = " << camera.width << "\nheight = " << camera.height
      << "\nnear = " << camera.near << "\nfar = " << camera.far << "\n";
  if (!out) throw FormatError("write failed for '" + path + "'");
}

}  // namespace triavatar
