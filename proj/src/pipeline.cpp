#include "triavatar/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "triavatar/decoder.hpp"
#include "triavatar/errors.hpp"
#include "triavatar/lifting.hpp"
#include "triavatar/metrics.hpp"
#include "triavatar/morphable.hpp"
#include "triavatar/triplane.hpp"

namespace fs = std::filesystem;

namespace triavatar {

namespace {

bool parse_bool(const std::string& v, const std::string& context) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw FormatError(context + ": expected true/false, got '" + v + "'");
}

double parse_double(const std::string& v, const std::string& context) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(d)) throw std::invalid_argument("");
    return d;
  } catch (const std::exception&) {
    throw FormatError(context + ": expected a number, got '" + v + "'");
  }
}

int parse_int(const std::string& v, const std::string& context) {
  try {
    std::size_t pos = 0;
    long l = std::stol(v, &pos);
    if (pos != v.size() || l < -(1l << 31) || l > (1l << 31)) throw std::invalid_argument("");
    return static_cast<int>(l);
  } catch (const std::exception&) {
    throw FormatError(context + ": expected an integer, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& v, const std::string& context) {
  try {
    std::size_t pos = 0;
    unsigned long long l = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return l;
  } catch (const std::exception&) {
    throw FormatError(context + ": expected an unsigned integer, got '" + v + "'");
  }
}

// One `section.key` assignment into the config struct.
void assign(PipelineConfig& cfg, const std::string& section, const std::string& key,
            const std::string& value, const std::string& context) {
  auto ctx = [&]() { return context + " [" + section + "] " + key; };
  if (section == "paths") {
    static const std::map<std::string, std::string PipelineConfig::*> path_keys = {
        {"triplane_c", &PipelineConfig::triplane_c},
        {"triplane_e", &PipelineConfig::triplane_e},
        {"triplane_p", &PipelineConfig::triplane_p},
        {"decoder", &PipelineConfig::decoder},
        {"basis", &PipelineConfig::basis},
        {"camera", &PipelineConfig::camera},
        {"target_camera", &PipelineConfig::target_camera},
        {"coeffs", &PipelineConfig::coeffs},
        {"target_coeffs", &PipelineConfig::target_coeffs},
        {"feature_image", &PipelineConfig::feature_image},
        {"feature_mask", &PipelineConfig::feature_mask},
        {"target", &PipelineConfig::target},
        {"cloud", &PipelineConfig::cloud},
        {"depth", &PipelineConfig::depth},
        {"pred_dir", &PipelineConfig::pred_dir},
        {"gt_dir", &PipelineConfig::gt_dir},
        {"out_dir", &PipelineConfig::out_dir}};
    auto it = path_keys.find(key);
    if (it == path_keys.end()) throw FormatError(ctx() + ": unknown key");
    cfg.*(it->second) = value;
  } else if (section == "render") {
    if (key == "samples") cfg.render.samples_per_ray = parse_int(value, ctx());
    else if (key == "stratified") cfg.render.stratified = parse_bool(value, ctx());
    else if (key == "seed") cfg.render.seed = parse_u64(value, ctx());
    else if (key == "threads") cfg.render.threads = parse_int(value, ctx());
    else if (key == "background") {
      std::istringstream bs(value);
      double r, g, b;
      if (!(bs >> r >> g >> b)) throw FormatError(ctx() + ": expected three numbers");
      std::string extra;
      if (bs >> extra) throw FormatError(ctx() + ": expected exactly three numbers");
      cfg.render.background_color = Eigen::Vector3d(r, g, b);
    } else
      throw FormatError(ctx() + ": unknown key");
  } else if (section == "losses") {
    if (key == "lambda_1") cfg.losses.lambda_1 = parse_double(value, ctx());
    else if (key == "lambda_p") cfg.losses.lambda_p = parse_double(value, ctx());
    else if (key == "lambda_tv") cfg.losses.lambda_tv = parse_double(value, ctx());
    else if (key == "lambda_neutral") cfg.losses.lambda_neutral = parse_double(value, ctx());
    else if (key == "lambda_adv") cfg.losses.lambda_adv = parse_double(value, ctx());
    else throw FormatError(ctx() + ": unknown key");
  } else if (section == "fit") {
    if (key == "steps") cfg.fit.steps = parse_int(value, ctx());
    else if (key == "step_size") cfg.fit.step_size = parse_double(value, ctx());
    else if (key == "resolution") cfg.fit.resolution = parse_int(value, ctx());
    else if (key == "channels") cfg.fit.channels = parse_int(value, ctx());
    else if (key == "extent") cfg.fit.extent = parse_double(value, ctx());
    else if (key == "lambda_tv") cfg.fit.lambda_tv = parse_double(value, ctx());
    else throw FormatError(ctx() + ": unknown key");
  } else if (section == "frontal") {
    if (key == "fov") cfg.frontal.fov_deg = parse_double(value, ctx());
    else if (key == "distance") cfg.frontal.distance = parse_double(value, ctx());
    else if (key == "size") cfg.frontal.size = parse_int(value, ctx());
    else throw FormatError(ctx() + ": unknown key");
  } else if (section == "eval") {
    if (key == "align") cfg.eval_align = parse_bool(value, ctx());
    else throw FormatError(ctx() + ": unknown key");
  } else {
    throw FormatError(context + ": unknown section [" + section + "]");
  }
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void require_path(const std::string& p, const char* what) {
  if (p.empty()) throw ParameterError(std::string("missing required input: ") + what);
}

fs::path out_path(const PipelineConfig& cfg, const char* name) {
  fs::create_directories(cfg.out_dir);
  return fs::path(cfg.out_dir) / name;
}

TriPlane load_or_zero(const std::string& path, const TriPlane& like) {
  if (path.empty()) return triplane_new(like.channels, like.resolution, like.extent, 0.0);
  TriPlane t = triplane_load(path);
  if (!t.same_shape(like))
    throw ShapeError("tri-plane '" + path + "' shape differs from the canonical tri-plane");
  return t;
}

}  // namespace

PipelineConfig config_load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path + "' for reading");
  PipelineConfig cfg;
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string::size_type hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    std::string context = "'" + path + "' line " + std::to_string(line_no);
    if (t.front() == '[') {
      if (t.back() != ']')
        throw FormatError(context + ": malformed section header '" + t + "'");
      section = t.substr(1, t.size() - 2);
      continue;
    }
    std::string::size_type eq = t.find('=');
    if (eq == std::string::npos)
      throw FormatError(context + ": expected `key = value`");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw FormatError(context + ": empty key");
    if (section.empty())
      throw FormatError(context + ": key '" + key + "' outside any [section]");
    assign(cfg, section, key, value, context);
  }
  return cfg;
}

void config_override(PipelineConfig& cfg, const std::string& assignment) {
  std::string::size_type eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ParameterError("override '" + assignment + "': expected section.key=value");
  std::string key_path = trim(assignment.substr(0, eq));
  std::string value = trim(assignment.substr(eq + 1));
  std::string::size_type dot = key_path.find('.');
  if (dot == std::string::npos)
    throw ParameterError("override '" + assignment + "': expected section.key=value");
  assign(cfg, key_path.substr(0, dot), key_path.substr(dot + 1), value,
         "override '" + assignment + "'");
}

Camera frontal_camera(const PipelineConfig& cfg) {
  return make_frontal_camera(cfg.frontal.size, cfg.frontal.size, cfg.frontal.fov_deg,
                             cfg.frontal.distance, 0.05, 100.0);
}

void cmd_render(const PipelineConfig& cfg) {
  require_path(cfg.triplane_c, "paths.triplane_c");
  require_path(cfg.decoder, "paths.decoder");
  require_path(cfg.camera, "paths.camera");
  TriPlane t = triplane_load(cfg.triplane_c);
  DecoderWeights w = decoder_load(cfg.decoder);
  Camera cam = camera_load(cfg.camera);
  RenderOutput out = render(t, w, cam, cfg.render);
  png_save(out.rgb, out_path(cfg, "render.png").string());
  fmp_save(out.depth, out_path(cfg, "depth.fmp").string());
  fmp_save(out.alpha, out_path(cfg, "alpha.fmp").string());
}

void cmd_reenact(const PipelineConfig& cfg) {
  require_path(cfg.triplane_c, "paths.triplane_c");
  require_path(cfg.decoder, "paths.decoder");
  require_path(cfg.target_camera, "paths.target_camera");
  TriPlane t_c = triplane_load(cfg.triplane_c);
  DecoderWeights w = decoder_load(cfg.decoder);
  Camera cam_t = camera_load(cfg.target_camera);

  TriPlane t_e = load_or_zero(cfg.triplane_e, t_c);
  TriPlane composed = triplane_add(t_c, t_e);

  TriPlane t_p = load_or_zero(cfg.triplane_p, t_c);
  if (!cfg.feature_image.empty()) {
    // Appearance path: depth from the canonical tri-plane at the source
    // camera, features lifted through it, rasterized onto T_p.
    require_path(cfg.camera, "paths.camera (source, required with feature_image)");
    Camera cam_s = camera_load(cfg.camera);
    FeatureImage features = fim_load(cfg.feature_image);
    if (!cfg.feature_mask.empty()) {
      PixelMask mask = mask_load_png(cfg.feature_mask);
      features = mask_apply(features, mask);
    }
    RenderOutput source_view = render(t_c, w, cam_s, cfg.render);
    if (features.width != cam_s.width || features.height != cam_s.height)
      features = resample_nearest(features, cam_s.width, cam_s.height);
    // Lift only pixels where the canonical field actually absorbed the ray.
    PixelMask valid(cam_s.width, cam_s.height, 0);
    for (int y = 0; y < cam_s.height; ++y)
      for (int x = 0; x < cam_s.width; ++x)
        valid.at(y, x) = source_view.alpha.at(y, x) > 0.5 ? 1 : 0;
    NeuralPointCloud lifted = lift(features, source_view.depth, cam_s, valid);
    npc_save(lifted, out_path(cfg, "cloud.npc").string());
    t_p = rasterize(lifted, t_c.channels, t_c.resolution, t_c.extent);
  }
  composed = triplane_add(composed, t_p);

  RenderOutput out = render(composed, w, cam_t, cfg.render);
  png_save(out.rgb, out_path(cfg, "reenact.png").string());
  fmp_save(out.depth, out_path(cfg, "reenact_depth.fmp").string());
  fmp_save(out.alpha, out_path(cfg, "reenact_alpha.fmp").string());

  // Frontal conditioning sidecar when the 3DMM inputs are present.
  if (!cfg.basis.empty() && !cfg.coeffs.empty() && !cfg.target_coeffs.empty()) {
    MorphableBasis basis = basis_load(cfg.basis);
    CoefficientFile source = coeffs_load(cfg.coeffs);
    CoefficientFile target = coeffs_load(cfg.target_coeffs);
    Eigen::VectorXd alpha_s = source.coeffs.alpha.size() ? source.coeffs.alpha
                                                         : Eigen::VectorXd::Zero(basis.k_id());
    Eigen::VectorXd beta_t = target.coeffs.beta.size() ? target.coeffs.beta
                                                       : Eigen::VectorXd::Zero(basis.k_exp());
    Camera c_front = frontal_camera(cfg);
    MeshRender i_exp = frontal_expression_render(basis, alpha_s, beta_t, c_front,
                                                 cfg.frontal.size, cfg.frontal.size);
    png_save(i_exp.image, out_path(cfg, "i_exp.png").string());
  }
}

void cmd_fit(const PipelineConfig& cfg) {
  require_path(cfg.target, "paths.target");
  require_path(cfg.camera, "paths.camera");
  require_path(cfg.decoder, "paths.decoder");
  Image target = png_load(cfg.target);
  Camera cam = camera_load(cfg.camera);
  DecoderWeights w = decoder_load(cfg.decoder);

  TriPlane init = cfg.triplane_c.empty()
                      ? triplane_new(cfg.fit.channels > 0 ? cfg.fit.channels : w.input_width(),
                                     cfg.fit.resolution, cfg.fit.extent, 0.0)
                      : triplane_load(cfg.triplane_c);
  FitResult fitted = fit_triplane(target, cam, w, init, cfg.fit.steps, cfg.fit.step_size,
                                  cfg.render, cfg.fit.lambda_tv);
  triplane_save(fitted.triplane, out_path(cfg, "fitted.tpl").string());
  std::ofstream trace(out_path(cfg, "trace.txt"));
  trace.precision(17);
  for (double v : fitted.trace) trace << v << "\n";
  if (!trace) throw InputError("failed writing fit trace");
}

void cmd_mmrender(const PipelineConfig& cfg, bool frontal) {
  require_path(cfg.basis, "paths.basis");
  require_path(cfg.coeffs, "paths.coeffs");
  MorphableBasis basis = basis_load(cfg.basis);
  CoefficientFile cf = coeffs_load(cfg.coeffs);
  Coefficients c;
  c.alpha = cf.coeffs.alpha.size() ? cf.coeffs.alpha : Eigen::VectorXd::Zero(basis.k_id());
  c.beta = cf.coeffs.beta.size() ? cf.coeffs.beta : Eigen::VectorXd::Zero(basis.k_exp());
  c.delta = cf.coeffs.delta.size() ? cf.coeffs.delta : Eigen::VectorXd::Zero(basis.k_tex());

  MeshRender out;
  if (frontal) {
    Camera c_front = frontal_camera(cfg);
    out = frontal_expression_render(basis, c.alpha, c.beta, c_front, cfg.frontal.size,
                                    cfg.frontal.size);
  } else {
    require_path(cfg.camera, "paths.camera");
    Camera cam = camera_load(cfg.camera);
    out = render_mesh(basis, c, cam, cam.width, cam.height);
  }
  png_save(out.image, out_path(cfg, "mesh.png").string());
  mask_save_png(out.mask, out_path(cfg, "mesh_mask.png").string());
  fmp_save(out.depth, out_path(cfg, "mesh_depth.fmp").string());
}

void cmd_eval(const PipelineConfig& cfg) {
  require_path(cfg.pred_dir, "paths.pred_dir");
  require_path(cfg.gt_dir, "paths.gt_dir");
  if (!fs::is_directory(cfg.pred_dir))
    throw InputError("pred_dir '" + cfg.pred_dir + "' is not a directory");
  if (!fs::is_directory(cfg.gt_dir))
    throw InputError("gt_dir '" + cfg.gt_dir + "' is not a directory");

  auto list_pngs = [](const std::string& dir) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".png")
        names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
  };
  std::vector<std::string> pred_names = list_pngs(cfg.pred_dir);
  std::vector<std::string> gt_names = list_pngs(cfg.gt_dir);

  std::vector<std::string> orphans;
  for (const auto& n : pred_names)
    if (!std::binary_search(gt_names.begin(), gt_names.end(), n))
      orphans.push_back(cfg.pred_dir + "/" + n);
  for (const auto& n : gt_names)
    if (!std::binary_search(pred_names.begin(), pred_names.end(), n))
      orphans.push_back(cfg.gt_dir + "/" + n);
  if (!orphans.empty()) {
    std::string msg = "unpaired files:";
    for (const auto& o : orphans) msg += "\n  " + o;
    throw InputError(msg);
  }
  if (pred_names.empty()) throw InputError("no .png pairs found");

  MetricReport report;
  for (const std::string& name : pred_names) {
    fs::path pred_png = fs::path(cfg.pred_dir) / name;
    fs::path gt_png = fs::path(cfg.gt_dir) / name;
    Image pred = png_load(pred_png.string());
    Image gt = png_load(gt_png.string());
    if (!pred.same_shape(gt)) {
      ++report.skipped;
      continue;
    }

    PairMetrics pm;
    pm.id = name.substr(0, name.size() - 4);

    fs::path pred_kp = fs::path(cfg.pred_dir) / (pm.id + ".kp.txt");
    fs::path gt_kp = fs::path(cfg.gt_dir) / (pm.id + ".kp.txt");
    bool have_kps = fs::exists(pred_kp) && fs::exists(gt_kp);
    if (have_kps) {
      KeypointSet pred_pts = keypoints_load(pred_kp.string());
      KeypointSet gt_pts = keypoints_load(gt_kp.string());
      if (cfg.eval_align) {
        AlignedPair aligned = aligned_compare(pred, pred_pts, gt, gt_pts);
        gt = aligned.gt_image;
        gt_pts = aligned.gt_keypoints;
      }
      pm.akd = akd(pred_pts, gt_pts);
    }

    fs::path pred_coef = fs::path(cfg.pred_dir) / (pm.id + ".coef.txt");
    fs::path gt_coef = fs::path(cfg.gt_dir) / (pm.id + ".coef.txt");
    if (fs::exists(pred_coef) && fs::exists(gt_coef)) {
      CoefficientFile a = coeffs_load(pred_coef.string());
      CoefficientFile b = coeffs_load(gt_coef.string());
      if (a.coeffs.beta.size() && b.coeffs.beta.size())
        pm.aed = coeff_distance(a.coeffs.beta, b.coeffs.beta);
      if (a.pose.size() && b.pose.size()) pm.apd = coeff_distance(a.pose, b.pose);
    }

    pm.psnr = psnr(pred, gt);
    pm.ssim = ssim(pred, gt);
    pm.l1 = l1_image(pred, gt);
    report.pairs.push_back(std::move(pm));
  }
  report_save(report, out_path(cfg, "report.txt").string());
}

void cmd_lift(const PipelineConfig& cfg) {
  require_path(cfg.feature_image, "paths.feature_image");
  require_path(cfg.depth, "paths.depth");
  require_path(cfg.camera, "paths.camera");
  FeatureImage features = fim_load(cfg.feature_image);
  FloatMap depth = fmp_load(cfg.depth);
  Camera cam = camera_load(cfg.camera);
  if (!cfg.feature_mask.empty())
    features = mask_apply(features, mask_load_png(cfg.feature_mask));
  if (features.width != depth.width || features.height != depth.height)
    features = resample_nearest(features, depth.width, depth.height);
  PixelMask valid(depth.width, depth.height, 1);
  NeuralPointCloud lifted = lift(features, depth, cam, valid);
  npc_save(lifted, out_path(cfg, "cloud.npc").string());
}

void cmd_rasterize(const PipelineConfig& cfg, int channels, int resolution, double extent) {
  require_path(cfg.cloud, "paths.cloud");
  NeuralPointCloud cloud = npc_load(cfg.cloud);
  if (channels <= 0) channels = cloud.channels;
  TriPlane t = rasterize(cloud, channels, resolution, extent);
  triplane_save(t, out_path(cfg, "raster.tpl").string());
}

}  // namespace triavatar
