#pragma once

// Linear 3D morphable face model: mean shape/texture plus identity,
// expression, and texture bases, and a deterministic z-buffer mesh renderer
// producing an image, a facial-region mask, and a depth map.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "triavatar/geometry.hpp"
#include "triavatar/image.hpp"

namespace triavatar {

struct MorphableBasis {
  Eigen::MatrixXd mean_shape;    // V x 3, world units
  Eigen::MatrixXd mean_texture;  // V x 3, [0,1]
  Eigen::MatrixXd id_basis;      // 3V x K_id, vertex-major rows (x0,y0,z0,x1,...)
  Eigen::MatrixXd exp_basis;     // 3V x K_exp
  Eigen::MatrixXd tex_basis;     // 3V x K_tex
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::vector<std::uint8_t> facial_vertex_mask;  // V flags

  int vertex_count() const { return static_cast<int>(mean_shape.rows()); }
  int k_id() const { return static_cast<int>(id_basis.cols()); }
  int k_exp() const { return static_cast<int>(exp_basis.cols()); }
  int k_tex() const { return static_cast<int>(tex_basis.cols()); }
  void validate() const;
};

struct Coefficients {
  Eigen::VectorXd alpha;  // identity
  Eigen::VectorXd beta;   // expression; all-zero = neutral
  Eigen::VectorXd delta;  // texture
};

struct AssembledMesh {
  Eigen::MatrixXd vertices;  // V x 3
  Eigen::MatrixXd colors;    // V x 3, clamped to [0,1]
};

struct MeshRender {
  Image image;
  PixelMask mask;  // 1 where the covering triangle is wholly facial-region
  FloatMap depth;  // camera-space depth; far where nothing was rasterized
};

AssembledMesh assemble_shape(const MorphableBasis& b, const Coefficients& c);

// Perspective projection + z-buffer rasterization (pixel-center coverage,
// top-left fill rule, perspective-correct vertex-color interpolation).
MeshRender render_mesh(const MorphableBasis& b, const Coefficients& c, const Camera& cam,
                       int width, int height);

// The expression branch's conditioning image: render_mesh with (alpha_s,
// beta_t, delta = 0) at the frontal camera.
MeshRender frontal_expression_render(const MorphableBasis& b, const Eigen::VectorXd& alpha_s,
                                     const Eigen::VectorXd& beta_t, const Camera& c_front,
                                     int width, int height);

void basis_save(const MorphableBasis& b, const std::string& path);
MorphableBasis basis_load(const std::string& path);

// Text coefficient files: `alpha: ...`, `beta: ...`, `delta: ...` lines, plus
// an optional `pose: ...` line carried for pose-distance evaluation.
struct CoefficientFile {
  Coefficients coeffs;
  Eigen::VectorXd pose;  // empty when absent
};
CoefficientFile coeffs_load(const std::string& path);
void coeffs_save(const CoefficientFile& c, const std::string& path);

// Procedural icosphere-head basis (K_id = K_exp = K_tex = 4) used by tests
// and shipped fixtures; deterministic for a fixed seed.
MorphableBasis make_synthetic_basis(std::uint64_t seed = 7);

}  // namespace triavatar
