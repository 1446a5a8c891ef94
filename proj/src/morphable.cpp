#include "triavatar/morphable.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "binary_io.hpp"
#include "rng.hpp"
#include "triavatar/errors.hpp"

namespace triavatar {

namespace {

constexpr std::uint32_t kMaxCount = 1u << 24;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void check_coeff(const Eigen::VectorXd& v, int want, const char* name) {
  if (static_cast<int>(v.size()) != want)
    throw ShapeError(std::string("assemble_shape: ") + name + " has length " +
                     std::to_string(v.size()) + ", basis expects " + std::to_string(want));
}

struct ProjectedVertex {
  double x = 0.0;
  double y = 0.0;
  double depth = 0.0;  // camera-space depth (positive in front)
  bool valid = false;
};

inline double edge_function(double ax, double ay, double bx, double by, double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

// Top-left fill rule for an orientation where the interior is on the
// positive side of every edge (y grows downward).
inline bool edge_accepts(double e, double dx, double dy) {
  if (e > 0.0) return true;
  if (e < 0.0) return false;
  return dy == 0.0 ? dx > 0.0 : dy < 0.0;
}

}  // namespace

void MorphableBasis::validate() const {
  const int v = vertex_count();
  if (mean_shape.cols() != 3 || mean_texture.cols() != 3)
    throw ShapeError("basis: mean shape/texture must be Vx3");
  if (mean_texture.rows() != v) throw ShapeError("basis: mean texture row count != V");
  if (id_basis.rows() != 3 * v || exp_basis.rows() != 3 * v || tex_basis.rows() != 3 * v)
    throw ShapeError("basis: basis row counts must equal 3V");
  if (static_cast<int>(facial_vertex_mask.size()) != v)
    throw ShapeError("basis: facial mask length != V");
  for (const auto& tri : triangles)
    for (std::uint32_t idx : tri)
      if (idx >= static_cast<std::uint32_t>(v))
        throw ShapeError("basis: triangle index " + std::to_string(idx) + " out of range");
}

AssembledMesh assemble_shape(const MorphableBasis& b, const Coefficients& c) {
  b.validate();
  check_coeff(c.alpha, b.k_id(), "alpha");
  check_coeff(c.beta, b.k_exp(), "beta");
  check_coeff(c.delta, b.k_tex(), "delta");
  const int v = b.vertex_count();

  Eigen::VectorXd shape_disp = Eigen::VectorXd::Zero(3 * v);
  if (b.k_id() > 0) shape_disp.noalias() += b.id_basis * c.alpha;
  if (b.k_exp() > 0) shape_disp.noalias() += b.exp_basis * c.beta;
  Eigen::VectorXd tex_disp = Eigen::VectorXd::Zero(3 * v);
  if (b.k_tex() > 0) tex_disp.noalias() += b.tex_basis * c.delta;

  AssembledMesh out;
  out.vertices = b.mean_shape;
  out.colors = b.mean_texture;
  for (int i = 0; i < v; ++i) {
    for (int k = 0; k < 3; ++k) {
      out.vertices(i, k) += shape_disp[3 * i + k];
      out.colors(i, k) = clamp01(out.colors(i, k) + tex_disp[3 * i + k]);
    }
  }
  return out;
}

MeshRender render_mesh(const MorphableBasis& b, const Coefficients& c, const Camera& cam,
                       int width, int height) {
  if (width <= 0 || height <= 0)
    throw ParameterError("render_mesh: output dimensions must be positive");
  cam.validate();
  AssembledMesh mesh = assemble_shape(b, c);

  MeshRender out;
  out.image = Image(width, height, 0.0);
  out.mask = PixelMask(width, height, 0);
  out.depth = FloatMap(width, height, cam.far);

  const int v = b.vertex_count();
  const Eigen::Matrix3d rot_t = cam.rotation().transpose();
  const Eigen::Vector3d pos = cam.position();
  std::vector<ProjectedVertex> proj(v);
  for (int i = 0; i < v; ++i) {
    Eigen::Vector3d p_cam = rot_t * (mesh.vertices.row(i).transpose() - pos);
    double depth = -p_cam.z();
    if (depth <= 0.0) continue;  // behind the camera
    proj[i].x = cam.cx() + cam.fx() * p_cam.x() / depth;
    proj[i].y = cam.cy() - cam.fy() * p_cam.y() / depth;
    proj[i].depth = depth;
    proj[i].valid = true;
  }

  for (const auto& tri : b.triangles) {
    ProjectedVertex pv[3] = {proj[tri[0]], proj[tri[1]], proj[tri[2]]};
    if (!pv[0].valid || !pv[1].valid || !pv[2].valid) continue;
    // Reorder so the interior lies on the positive side of every edge.
    int i1 = 1, i2 = 2;
    double area = edge_function(pv[0].x, pv[0].y, pv[1].x, pv[1].y, pv[2].x, pv[2].y);
    if (area == 0.0) continue;
    if (area < 0.0) {
      std::swap(i1, i2);
      std::swap(pv[1], pv[2]);
      area = -area;
    }
    const std::uint32_t vid[3] = {tri[0], tri[i1], tri[i2]};
    const bool facial = b.facial_vertex_mask[vid[0]] && b.facial_vertex_mask[vid[1]] &&
                        b.facial_vertex_mask[vid[2]];

    const double min_x = std::min({pv[0].x, pv[1].x, pv[2].x});
    const double max_x = std::max({pv[0].x, pv[1].x, pv[2].x});
    const double min_y = std::min({pv[0].y, pv[1].y, pv[2].y});
    const double max_y = std::max({pv[0].y, pv[1].y, pv[2].y});
    const int x_begin = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
    const int x_end = std::min(width - 1, static_cast<int>(std::ceil(max_x - 0.5)));
    const int y_begin = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
    const int y_end = std::min(height - 1, static_cast<int>(std::ceil(max_y - 0.5)));

    const double inv_d[3] = {1.0 / pv[0].depth, 1.0 / pv[1].depth, 1.0 / pv[2].depth};
    for (int py = y_begin; py <= y_end; ++py) {
      const double cy = py + 0.5;
      for (int px = x_begin; px <= x_end; ++px) {
        const double cx = px + 0.5;
        const double e0 = edge_function(pv[1].x, pv[1].y, pv[2].x, pv[2].y, cx, cy);
        const double e1 = edge_function(pv[2].x, pv[2].y, pv[0].x, pv[0].y, cx, cy);
        const double e2 = edge_function(pv[0].x, pv[0].y, pv[1].x, pv[1].y, cx, cy);
        if (!edge_accepts(e0, pv[2].x - pv[1].x, pv[2].y - pv[1].y) ||
            !edge_accepts(e1, pv[0].x - pv[2].x, pv[0].y - pv[2].y) ||
            !edge_accepts(e2, pv[1].x - pv[0].x, pv[1].y - pv[0].y))
          continue;
        const double l0 = e0 / area, l1 = e1 / area, l2 = e2 / area;
        const double inv_depth = l0 * inv_d[0] + l1 * inv_d[1] + l2 * inv_d[2];
        if (inv_depth <= 0.0) continue;
        const double depth = 1.0 / inv_depth;
        if (depth >= out.depth.at(py, px)) continue;
        out.depth.at(py, px) = depth;
        out.mask.at(py, px) = facial ? 1 : 0;
        for (int ch = 0; ch < 3; ++ch) {
          const double num = l0 * inv_d[0] * mesh.colors(vid[0], ch) +
                             l1 * inv_d[1] * mesh.colors(vid[1], ch) +
                             l2 * inv_d[2] * mesh.colors(vid[2], ch);
          out.image.at(py, px, ch) = num * depth;
        }
      }
    }
  }
  return out;
}

MeshRender frontal_expression_render(const MorphableBasis& b, const Eigen::VectorXd& alpha_s,
                                     const Eigen::VectorXd& beta_t, const Camera& c_front,
                                     int width, int height) {
  Coefficients c;
  c.alpha = alpha_s;
  c.beta = beta_t;
  c.delta = Eigen::VectorXd::Zero(b.k_tex());
  return render_mesh(b, c, c_front, width, height);
}

void basis_save(const MorphableBasis& b, const std::string& path) {
  b.validate();
  detail::ByteWriter w(path);
  w.write_magic("MMB1");
  const int v = b.vertex_count();
  w.write_u32(static_cast<std::uint32_t>(v));
  w.write_u32(static_cast<std::uint32_t>(b.triangles.size()));
  w.write_u32(static_cast<std::uint32_t>(b.k_id()));
  w.write_u32(static_cast<std::uint32_t>(b.k_exp()));
  w.write_u32(static_cast<std::uint32_t>(b.k_tex()));
  for (int i = 0; i < v; ++i)
    for (int k = 0; k < 3; ++k) w.write_f32(static_cast<float>(b.mean_shape(i, k)));
  for (int i = 0; i < v; ++i)
    for (int k = 0; k < 3; ++k) w.write_f32(static_cast<float>(b.mean_texture(i, k)));
  for (const Eigen::MatrixXd* basis : {&b.id_basis, &b.exp_basis, &b.tex_basis})
    for (Eigen::Index col = 0; col < basis->cols(); ++col)
      for (Eigen::Index row = 0; row < basis->rows(); ++row)
        w.write_f32(static_cast<float>((*basis)(row, col)));
  for (const auto& tri : b.triangles)
    for (std::uint32_t idx : tri) w.write_u32(idx);
  for (std::uint8_t flag : b.facial_vertex_mask) w.write_u8(flag);
  w.close();
}

MorphableBasis basis_load(const std::string& path) {
  detail::ByteReader r(path);
  r.expect_magic("MMB1");
  std::uint32_t v = r.read_u32();
  std::uint32_t f = r.read_u32();
  std::uint32_t k_id = r.read_u32();
  std::uint32_t k_exp = r.read_u32();
  std::uint32_t k_tex = r.read_u32();
  if (v > kMaxCount || f > kMaxCount || k_id > 4096 || k_exp > 4096 || k_tex > 4096)
    throw FormatError("'" + path + "': implausible basis dimensions", r.offset());
  MorphableBasis b;
  b.mean_shape.resize(v, 3);
  b.mean_texture.resize(v, 3);
  for (std::uint32_t i = 0; i < v; ++i)
    for (int k = 0; k < 3; ++k) b.mean_shape(i, k) = r.read_f32();
  for (std::uint32_t i = 0; i < v; ++i)
    for (int k = 0; k < 3; ++k) b.mean_texture(i, k) = r.read_f32();
  for (Eigen::MatrixXd* basis : {&b.id_basis, &b.exp_basis, &b.tex_basis}) {
    std::uint32_t cols = basis == &b.id_basis ? k_id : (basis == &b.exp_basis ? k_exp : k_tex);
    basis->resize(3 * v, cols);
    for (std::uint32_t col = 0; col < cols; ++col)
      for (std::uint32_t row = 0; row < 3 * v; ++row) (*basis)(row, col) = r.read_f32();
  }
  b.triangles.resize(f);
  for (std::uint32_t i = 0; i < f; ++i) {
    std::size_t tri_off = r.offset();
    for (int k = 0; k < 3; ++k) {
      std::uint32_t idx = r.read_u32();
      if (idx >= v)
        throw FormatError("'" + path + "': triangle " + std::to_string(i) + " index " +
                              std::to_string(idx) + " out of range (V=" + std::to_string(v) + ")",
                          tri_off);
      b.triangles[i][k] = idx;
    }
  }
  b.facial_vertex_mask.resize(v);
  for (std::uint32_t i = 0; i < v; ++i) {
    std::uint8_t flag = r.read_u8();
    if (flag > 1)
      throw FormatError("'" + path + "': facial mask byte must be 0 or 1", r.offset() - 1);
    b.facial_vertex_mask[i] = flag;
  }
  r.expect_eof();
  return b;
}

CoefficientFile coeffs_load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  CoefficientFile out;
  bool seen[4] = {false, false, false, false};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string::size_type hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key.back() != ':')
      throw FormatError("'" + path + "' line " + std::to_string(line_no) +
                        ": expected `name: values`");
    key.pop_back();
    int slot;
    Eigen::VectorXd* dst;
    if (key == "alpha") { slot = 0; dst = &out.coeffs.alpha; }
    else if (key == "beta") { slot = 1; dst = &out.coeffs.beta; }
    else if (key == "delta") { slot = 2; dst = &out.coeffs.delta; }
    else if (key == "pose") { slot = 3; dst = &out.pose; }
    else
      throw FormatError("'" + path + "' line " + std::to_string(line_no) + ": unknown block '" +
                        key + "'");
    if (seen[slot])
      throw FormatError("'" + path + "' line " + std::to_string(line_no) + ": duplicate block '" +
                        key + "'");
    seen[slot] = true;
    std::vector<double> values;
    double v;
    while (ls >> v) values.push_back(v);
    if (!ls.eof())
      throw FormatError("'" + path + "' line " + std::to_string(line_no) +
                        ": non-numeric value in block '" + key + "'");
    for (double x : values)
      if (!std::isfinite(x))
        throw FormatError("'" + path + "' line " + std::to_string(line_no) +
                          ": non-finite value in block '" + key + "'");
    *dst = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  }
  return out;
}

void coeffs_save(const CoefficientFile& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out.precision(17);
  auto write_block = [&](const char* name, const Eigen::VectorXd& v) {
    out << name << ":";
    for (Eigen::Index i = 0; i < v.size(); ++i) out << " " << v[i];
    out << "\n";
  };
  write_block("alpha", c.coeffs.alpha);
  write_block("beta", c.coeffs.beta);
  write_block("delta", c.coeffs.delta);
  if (c.pose.size() > 0) write_block("pose", c.pose);
  if (!out) throw InputError("failed writing '" + path + "'");
}

MorphableBasis make_synthetic_basis(std::uint64_t seed) {
  // Icosahedron subdivided twice and projected to a radius-0.5 sphere.
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> verts = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  std::vector<std::array<std::uint32_t, 3>> tris = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& p : verts) p.normalize();

  for (int pass = 0; pass < 2; ++pass) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
    auto mid = [&](std::uint32_t a, std::uint32_t b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Eigen::Vector3d m = (verts[a] + verts[b]).normalized();
      verts.push_back(m);
      std::uint32_t idx = static_cast<std::uint32_t>(verts.size() - 1);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<std::uint32_t, 3>> next;
    next.reserve(tris.size() * 4);
    for (const auto& t : tris) {
      std::uint32_t a = mid(t[0], t[1]), b = mid(t[1], t[2]), c = mid(t[2], t[0]);
      next.push_back({t[0], a, c});
      next.push_back({t[1], b, a});
      next.push_back({t[2], c, b});
      next.push_back({a, b, c});
    }
    tris = std::move(next);
  }

  const int v = static_cast<int>(verts.size());
  const double radius = 0.5;
  auto snap = [](double x) { return static_cast<double>(static_cast<float>(x)); };

  MorphableBasis b;
  b.mean_shape.resize(v, 3);
  b.mean_texture.resize(v, 3);
  for (int i = 0; i < v; ++i) {
    Eigen::Vector3d p = verts[i] * radius;
    for (int k = 0; k < 3; ++k) b.mean_shape(i, k) = snap(p[k]);
    // Skin-like base shade with a vertical gradient.
    b.mean_texture(i, 0) = snap(clamp01(0.78 + 0.10 * p.y()));
    b.mean_texture(i, 1) = snap(clamp01(0.60 + 0.08 * p.y()));
    b.mean_texture(i, 2) = snap(clamp01(0.50 + 0.06 * p.z()));
  }

  // Smooth sinusoidal displacement fields, deterministic in the seed.
  detail::SplitMix64 rng(seed);
  auto fill_basis = [&](Eigen::MatrixXd& basis, int cols, double amplitude) {
    basis.resize(3 * v, cols);
    for (int col = 0; col < cols; ++col) {
      Eigen::Vector3d freq(1.0 + 2.0 * rng.uniform(), 1.0 + 2.0 * rng.uniform(),
                           1.0 + 2.0 * rng.uniform());
      Eigen::Vector3d phase(6.28318530717958647692 * rng.uniform(),
                            6.28318530717958647692 * rng.uniform(),
                            6.28318530717958647692 * rng.uniform());
      for (int i = 0; i < v; ++i) {
        Eigen::Vector3d p = verts[i] * radius;
        for (int k = 0; k < 3; ++k)
          basis(3 * i + k, col) =
              snap(amplitude * std::sin(freq[k] * (p.x() + p.y() + p.z()) + phase[k] + k));
      }
    }
  };
  fill_basis(b.id_basis, 4, 0.05);
  fill_basis(b.exp_basis, 4, 0.03);
  fill_basis(b.tex_basis, 4, 0.10);

  b.triangles = std::move(tris);
  b.facial_vertex_mask.resize(v);
  for (int i = 0; i < v; ++i) b.facial_vertex_mask[i] = b.mean_shape(i, 2) > 0.15 ? 1 : 0;
  b.validate();
  return b;
}

}  // namespace triavatar
