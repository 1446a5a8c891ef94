#pragma once

// Cameras, rays and similarity transforms shared by the volumetric renderer,
// the mesh renderer, pixel lifting and the evaluation protocol.

#include <Eigen/Dense>
#include <string>

namespace triavatar {

// Pinhole camera. Pose is camera-to-world; camera space has x right, y up,
// and the view direction along -z, so depth along a ray is positive.
struct Camera {
  Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity();  // fx 0 cx; 0 fy cy; 0 0 1
  Eigen::Matrix4d pose = Eigen::Matrix4d::Identity();        // camera-to-world
  int width = 0;
  int height = 0;
  double near = 0.1;
  double far = 100.0;

  Eigen::Vector3d position() const { return pose.block<3, 1>(0, 3); }
  Eigen::Matrix3d rotation() const { return pose.block<3, 3>(0, 0); }
  double fx() const { return intrinsics(0, 0); }
  double fy() const { return intrinsics(1, 1); }
  double cx() const { return intrinsics(0, 2); }
  double cy() const { return intrinsics(1, 2); }

  // Throws ParameterError when an invariant is violated (non-orthonormal
  // rotation, det != +1, non-positive focal lengths, near >= far).
  void validate() const;
};

// Builds a camera from a vertical field of view, looking down -z from
// (0, 0, distance) with identity rotation.
Camera make_frontal_camera(int width, int height, double fov_y_deg, double distance,
                           double near, double far);

struct Ray {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();  // unit length
};

// World-space ray through the center of pixel (px, py). Throws BoundsError
// for pixels outside the image.
Ray ray_for_pixel(const Camera& camera, int px, int py);

// Continuous variant; (px, py) are pixel coordinates (center of pixel (i, j)
// is at (j + 0.5, i + 0.5)). No bounds check.
Ray ray_through(const Camera& camera, double px, double py);

struct SimilarityTransform {
  double scale = 1.0;
  Eigen::MatrixXd rotation;     // k x k, orthonormal, det +1
  Eigen::VectorXd translation;  // k

  int dim() const { return static_cast<int>(translation.size()); }
  static SimilarityTransform identity(int dim);
};

// Least-squares similarity alignment: minimizes sum_i |s R src_i + t - dst_i|^2
// over rotations with det +1 (reflections corrected by flipping the smallest
// singular direction). Points are rows; k must be 2 or 3 and N >= k+1.
// with_scale=false pins s = 1. Throws DegenerateError when all source points
// coincide.
SimilarityTransform procrustes_align(const Eigen::MatrixXd& source_points,
                                     const Eigen::MatrixXd& target_points,
                                     bool with_scale);

// Maps each row p to s R p + t. Throws ShapeError on dimension mismatch.
Eigen::MatrixXd apply_similarity(const SimilarityTransform& t,
                                 const Eigen::MatrixXd& points);

// Text camera files: `key = value` lines with fields intrinsics (9 numbers,
// row-major), pose (16 numbers, row-major), width, height, near, far.
Camera camera_load(const std::string& path);
void camera_save(const Camera& camera, const std::string& path);

}  // namespace triavatar
