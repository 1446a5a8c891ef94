#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "triavatar/decoder.hpp"
#include "triavatar/errors.hpp"
#include "triavatar/geometry.hpp"
#include "triavatar/image.hpp"
#include "triavatar/lifting.hpp"
#include "triavatar/metrics.hpp"
#include "triavatar/morphable.hpp"
#include "triavatar/renderer.hpp"
#include "triavatar/triplane.hpp"

namespace py = pybind11;
using namespace triavatar;

namespace {

py::array_t<double> image_to_numpy(const Image& img) {
  py::array_t<double> out({img.height, img.width, 3});
  std::copy(img.data.begin(), img.data.end(), out.mutable_data());
  return out;
}

Image image_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 3 || a.shape(2) != 3)
    throw ShapeError("image array must have shape (H, W, 3)");
  Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), img.data.begin());
  return img;
}

py::array_t<double> floatmap_to_numpy(const FloatMap& m) {
  py::array_t<double> out({m.height, m.width});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

FloatMap floatmap_from_numpy(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw ShapeError("float map array must have shape (H, W)");
  FloatMap m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), m.data.begin());
  return m;
}

py::array_t<double> feature_to_numpy(const FeatureImage& f) {
  py::array_t<double> out({f.channels, f.height, f.width});
  std::copy(f.data.begin(), f.data.end(), out.mutable_data());
  return out;
}

FeatureImage feature_from_numpy(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 3) throw ShapeError("feature array must have shape (C, H, W)");
  FeatureImage f(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(2)),
                 static_cast<int>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), f.data.begin());
  return f;
}

PixelMask mask_from_numpy(
    const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw ShapeError("mask array must have shape (H, W)");
  PixelMask m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  for (py::ssize_t i = 0; i < a.size(); ++i) m.data[i] = a.data()[i] ? 1 : 0;
  return m;
}

py::array_t<std::uint8_t> mask_to_numpy(const PixelMask& m) {
  py::array_t<std::uint8_t> out({m.height, m.width});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

RenderConfig make_render_config(int samples, bool stratified, const Eigen::Vector3d& background,
                                std::uint64_t seed, int threads) {
  RenderConfig cfg;
  cfg.samples_per_ray = samples;
  cfg.stratified = stratified;
  cfg.background_color = background;
  cfg.seed = seed;
  cfg.threads = threads;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "tri-plane head-avatar engine core";

  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<DegenerateError>(m, "DegenerateError", PyExc_ValueError);
  py::register_exception<BoundsError>(m, "BoundsError", PyExc_IndexError);

  py::class_<TriPlane>(m, "TriPlane")
      .def(py::init([](int channels, int resolution, double extent, double fill) {
             return triplane_new(channels, resolution, extent, fill);
           }),
           py::arg("channels"), py::arg("resolution"), py::arg("extent") = 1.0,
           py::arg("fill") = 0.0)
      .def_readonly("channels", &TriPlane::channels)
      .def_readonly("resolution", &TriPlane::resolution)
      .def_readonly("extent", &TriPlane::extent)
      .def("sample",
           [](const TriPlane& t, const Eigen::Vector3d& p) { return sample_point(t, p); },
           py::arg("point"))
      .def("plane",
           [](const TriPlane& t, int plane) {
             if (plane < 0 || plane > 2) throw ParameterError("plane index must be 0, 1, or 2");
             py::array_t<float> out({t.channels, t.resolution, t.resolution});
             std::copy(t.planes[plane].begin(), t.planes[plane].end(), out.mutable_data());
             return out;
           },
           py::arg("plane"))
      .def("set_plane",
           [](TriPlane& t, int plane,
              const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
             if (plane < 0 || plane > 2) throw ParameterError("plane index must be 0, 1, or 2");
             if (a.ndim() != 3 || a.shape(0) != t.channels || a.shape(1) != t.resolution ||
                 a.shape(2) != t.resolution)
               throw ShapeError("plane array must have shape (C, R, R)");
             std::copy(a.data(), a.data() + a.size(), t.planes[plane].begin());
           },
           py::arg("plane"), py::arg("values"))
      .def("save", &triplane_save, py::arg("path"))
      .def_static("load", &triplane_load, py::arg("path"))
      .def("__add__", &triplane_add)
      .def("__repr__", [](const TriPlane& t) {
        return "TriPlane(channels=" + std::to_string(t.channels) +
               ", resolution=" + std::to_string(t.resolution) +
               ", extent=" + std::to_string(t.extent) + ")";
      });

  m.def("tv_loss", &tv_loss, py::arg("triplane"));

  py::class_<DecoderWeights>(m, "Decoder")
      .def_static("load", &decoder_load, py::arg("path"))
      .def_static("make_default", &make_default_decoder, py::arg("input_width"),
                  py::arg("hidden_width") = 64, py::arg("hidden_layers") = 2, py::arg("seed") = 1)
      .def("save", &decoder_save, py::arg("path"))
      .def_property_readonly("input_width", &DecoderWeights::input_width)
      .def("decode",
           [](const DecoderWeights& w,
              const py::array_t<double, py::array::c_style | py::array::forcecast>& feats) {
             if (feats.ndim() != 2) throw ShapeError("features must have shape (N, C)");
             const auto n = feats.shape(0);
             if (feats.shape(1) != w.input_width())
               throw ShapeError("feature width does not match decoder input width");
             py::array_t<double> sigma(n);
             py::array_t<double> rgb({n, py::ssize_t(3)});
             Eigen::VectorXd f(w.input_width());
             for (py::ssize_t i = 0; i < n; ++i) {
               for (int c = 0; c < w.input_width(); ++c) f[c] = feats.at(i, c);
               DecodeResult r = decode(w, f);
               sigma.mutable_at(i) = r.density;
               for (int c = 0; c < 3; ++c) rgb.mutable_at(i, c) = r.color[c];
             }
             return py::make_tuple(sigma, rgb);
           },
           py::arg("features"));

  py::class_<Camera>(m, "Camera")
      .def(py::init<>())
      .def_readwrite("intrinsics", &Camera::intrinsics)
      .def_readwrite("pose", &Camera::pose)
      .def_readwrite("width", &Camera::width)
      .def_readwrite("height", &Camera::height)
      .def_readwrite("near", &Camera::near)
      .def_readwrite("far", &Camera::far)
      .def("validate", &Camera::validate)
      .def("save", &camera_save, py::arg("path"))
      .def_static("load", &camera_load, py::arg("path"))
      .def_static("frontal", &make_frontal_camera, py::arg("width"), py::arg("height"),
                  py::arg("fov_y_deg") = 30.0, py::arg("distance") = 4.0, py::arg("near") = 0.05,
                  py::arg("far") = 100.0);

  m.def("render",
        [](const TriPlane& t, const DecoderWeights& w, const Camera& cam, int samples,
           bool stratified, const Eigen::Vector3d& background, std::uint64_t seed, int threads) {
          RenderOutput out =
              render(t, w, cam, make_render_config(samples, stratified, background, seed, threads));
          py::dict d;
          d["rgb"] = image_to_numpy(out.rgb);
          d["depth"] = floatmap_to_numpy(out.depth);
          d["alpha"] = floatmap_to_numpy(out.alpha);
          return d;
        },
        py::arg("triplane"), py::arg("decoder"), py::arg("camera"), py::arg("samples") = 64,
        py::arg("stratified") = false, py::arg("background") = Eigen::Vector3d::Zero().eval(),
        py::arg("seed") = 0, py::arg("threads") = 1);

  m.def("fit_triplane",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& target,
           const Camera& cam, const DecoderWeights& w, const TriPlane& init, int steps,
           double step_size, int samples, double lambda_tv) {
          RenderConfig cfg;
          cfg.samples_per_ray = samples;
          FitResult r = fit_triplane(image_from_numpy(target), cam, w, init, steps, step_size, cfg,
                                     lambda_tv);
          return py::make_tuple(r.triplane, r.trace);
        },
        py::arg("target"), py::arg("camera"), py::arg("decoder"), py::arg("init"),
        py::arg("steps") = 200, py::arg("step_size") = 2.0, py::arg("samples") = 64,
        py::arg("lambda_tv") = 0.0);

  m.def("lift",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& features,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& depth,
           const Camera& cam,
           const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& valid) {
          NeuralPointCloud cloud = lift(feature_from_numpy(features), floatmap_from_numpy(depth),
                                        cam, mask_from_numpy(valid));
          const py::ssize_t n = static_cast<py::ssize_t>(cloud.size());
          py::array_t<double> pos({n, py::ssize_t(3)});
          py::array_t<double> feats({n, py::ssize_t(cloud.channels)});
          for (py::ssize_t i = 0; i < n; ++i) {
            for (int c = 0; c < 3; ++c) pos.mutable_at(i, c) = cloud.positions[i][c];
            for (int c = 0; c < cloud.channels; ++c) feats.mutable_at(i, c) = cloud.features[i][c];
          }
          return py::make_tuple(pos, feats);
        },
        py::arg("features"), py::arg("depth"), py::arg("camera"), py::arg("valid"));

  m.def("rasterize",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& positions,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& features,
           int channels, int resolution, double extent) {
          if (positions.ndim() != 2 || positions.shape(1) != 3)
            throw ShapeError("positions must have shape (N, 3)");
          if (features.ndim() != 2 || features.shape(0) != positions.shape(0))
            throw ShapeError("features must have shape (N, C)");
          NeuralPointCloud cloud;
          cloud.channels = static_cast<int>(features.shape(1));
          for (py::ssize_t i = 0; i < positions.shape(0); ++i) {
            cloud.positions.emplace_back(positions.at(i, 0), positions.at(i, 1),
                                         positions.at(i, 2));
            Eigen::VectorXd f(cloud.channels);
            for (int c = 0; c < cloud.channels; ++c) f[c] = features.at(i, c);
            cloud.features.push_back(std::move(f));
          }
          return rasterize(cloud, channels, resolution, extent);
        },
        py::arg("positions"), py::arg("features"), py::arg("channels"), py::arg("resolution"),
        py::arg("extent") = 1.0);

  py::class_<MorphableBasis>(m, "MorphableBasis")
      .def_static("load", &basis_load, py::arg("path"))
      .def_static("synthetic", &make_synthetic_basis, py::arg("seed") = 7)
      .def("save", &basis_save, py::arg("path"))
      .def_property_readonly("vertex_count", &MorphableBasis::vertex_count)
      .def_property_readonly("k_id", &MorphableBasis::k_id)
      .def_property_readonly("k_exp", &MorphableBasis::k_exp)
      .def_property_readonly("k_tex", &MorphableBasis::k_tex);

  m.def("render_mesh",
        [](const MorphableBasis& b, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
           const Eigen::VectorXd& delta, const Camera& cam, int width, int height) {
          Coefficients c{alpha, beta, delta};
          MeshRender r = render_mesh(b, c, cam, width, height);
          py::dict d;
          d["image"] = image_to_numpy(r.image);
          d["mask"] = mask_to_numpy(r.mask);
          d["depth"] = floatmap_to_numpy(r.depth);
          return d;
        },
        py::arg("basis"), py::arg("alpha"), py::arg("beta"), py::arg("delta"), py::arg("camera"),
        py::arg("width"), py::arg("height"));

  m.def("psnr",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
          return psnr(image_from_numpy(a), image_from_numpy(b));
        },
        py::arg("a"), py::arg("b"));
  m.def("ssim",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
          return ssim(image_from_numpy(a), image_from_numpy(b));
        },
        py::arg("a"), py::arg("b"));
  m.def("akd", &akd, py::arg("a"), py::arg("b"));

  m.def("png_load", [](const std::string& path) { return image_to_numpy(png_load(path)); },
        py::arg("path"));
  m.def("png_save",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& img,
           const std::string& path) { png_save(image_from_numpy(img), path); },
        py::arg("image"), py::arg("path"));
}
