#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "triavatar/decoder.hpp"
#include "triavatar/errors.hpp"
#include "triavatar/pipeline.hpp"
#include "triavatar/triplane.hpp"

namespace {

using triavatar::PipelineConfig;

constexpr int kExitUsage = 2;
constexpr int kExitInput = 3;
constexpr int kExitNumeric = 4;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  bool has_seed = false;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "pipeline config file");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--set", args.overrides, "override config values (section.key=value)")
      ->type_name("KEY=VALUE");
  cmd->add_option("--seed", args.seed, "stratified jitter seed")
      ->each([&args](const std::string&) { args.has_seed = true; });
}

PipelineConfig build_config(const CommonArgs& args) {
  PipelineConfig cfg;
  std::string path = args.config_path;
  if (path.empty()) {
    const char* env = std::getenv("TRIAVATAR_CONFIG");
    if (env && *env) path = env;
  }
  if (!path.empty()) cfg = triavatar::config_load(path);
  for (const std::string& o : args.overrides) triavatar::config_override(cfg, o);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.has_seed) cfg.render.seed = args.seed;
  return cfg;
}

void maybe_set(std::string& dst, const std::string& src) {
  if (!src.empty()) dst = src;
}

// Runs a command body, mapping library errors onto the documented exit codes.
int guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const triavatar::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const triavatar::ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const triavatar::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tri-plane head-avatar engine"};
  app.require_subcommand(1);

  int exit_code = 0;
  auto run = [&exit_code](const std::function<void()>& body) {
    exit_code = guarded(body);
  };

  // render
  auto* render_cmd = app.add_subcommand("render", "volumetric render of a tri-plane");
  auto render_args = std::make_shared<CommonArgs>();
  auto render_opts = std::make_shared<std::map<std::string, std::string>>();
  add_common(render_cmd, *render_args);
  render_cmd->add_option("--triplane", (*render_opts)["triplane"], "tri-plane file (T_c)");
  render_cmd->add_option("--decoder", (*render_opts)["decoder"], "decoder weights file");
  render_cmd->add_option("--camera", (*render_opts)["camera"], "camera file");
  render_cmd->callback([=, &exit_code]() {
    exit_code = guarded([&]() {
      PipelineConfig cfg = build_config(*render_args);
      maybe_set(cfg.triplane_c, (*render_opts)["triplane"]);
      maybe_set(cfg.decoder, (*render_opts)["decoder"]);
      maybe_set(cfg.camera, (*render_opts)["camera"]);
      triavatar::cmd_render(cfg);
    });
  });

  // reenact
  auto* reenact_cmd = app.add_subcommand("reenact", "compose tri-planes and render at the target view");
  auto reenact_args = std::make_shared<CommonArgs>();
  auto reenact_opts = std::make_shared<std::map<std::string, std::string>>();
  add_common(reenact_cmd, *reenact_args);
  reenact_cmd->add_option("--triplane-c", (*reenact_opts)["tc"], "canonical tri-plane T_c");
  reenact_cmd->add_option("--triplane-e", (*reenact_opts)["te"], "expression tri-plane T_e");
  reenact_cmd->add_option("--triplane-p", (*reenact_opts)["tp"], "appearance tri-plane T_p");
  reenact_cmd->add_option("--decoder", (*reenact_opts)["decoder"], "decoder weights file");
  reenact_cmd->add_option("--camera", (*reenact_opts)["camera"], "source camera C_s");
  reenact_cmd->add_option("--target-camera", (*reenact_opts)["target_camera"], "target camera C_t");
  reenact_cmd->add_option("--features", (*reenact_opts)["features"], "source feature image (FIM1)");
  reenact_cmd->add_option("--feature-mask", (*reenact_opts)["feature_mask"], "mask PNG for the features");
  reenact_cmd->add_option("--basis", (*reenact_opts)["basis"], "morphable basis (for the I_exp sidecar)");
  reenact_cmd->add_option("--coeffs", (*reenact_opts)["coeffs"], "source coefficient file");
  reenact_cmd->add_option("--target-coeffs", (*reenact_opts)["target_coeffs"], "target coefficient file");
  reenact_cmd->callback([=, &exit_code]() {
    exit_code = guarded([&]() {
      PipelineConfig cfg = build_config(*reenact_args);
      maybe_set(cfg.triplane_c, (*reenact_opts)["tc"]);
      maybe_set(cfg.triplane_e, (*reenact_opts)["te"]);
      maybe_set(cfg.triplane_p, (*reenact_opts)["tp"]);
      maybe_set(cfg.decoder, (*reenact_opts)["decoder"]);
      maybe_set(cfg.camera, (*reenact_opts)["camera"]);
      maybe_set(cfg.target_camera, (*reenact_opts)["target_camera"]);
      maybe_set(cfg.feature_image, (*reenact_opts)["features"]);
      maybe_set(cfg.feature_mask, (*reenact_opts)["feature_mask"]);
      maybe_set(cfg.basis, (*reenact_opts)["basis"]);
      maybe_set(cfg.coeffs, (*reenact_opts)["coeffs"]);
      maybe_set(cfg.target_coeffs, (*reenact_opts)["target_coeffs"]);
      triavatar::cmd_reenact(cfg);
    });
  });

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "gradient-descent tri-plane fitting to a target image");
  auto fit_args = std::make_shared<CommonArgs>();
  auto fit_opts = std::make_shared<std::map<std::string, std::string>>();
  add_common(fit_cmd, *fit_args);
  fit_cmd->add_option("--target", (*fit_opts)["target"], "target image (PNG)");
  fit_cmd->add_option("--camera", (*fit_opts)["camera"], "camera file");
  fit_cmd->add_option("--decoder", (*fit_opts)["decoder"], "decoder weights file");
  fit_cmd->add_option("--init", (*fit_opts)["init"], "initial tri-plane (default: zeros)");
  fit_cmd->callback([=, &exit_code]() {
    exit_code = guarded([&]() {
      PipelineConfig cfg = build_config(*fit_args);
      maybe_set(cfg.target, (*fit_opts)["target"]);
      maybe_set(cfg.camera, (*fit_opts)["camera"]);
      maybe_set(cfg.decoder, (*fit_opts)["decoder"]);
      maybe_set(cfg.triplane_c, (*fit_opts)["init"]);
      triavatar::cmd_fit(cfg);
    });
  });

  // mmrender
  auto* mm_cmd = app.add_subcommand("mmrender", "3DMM mesh render (image, facial mask, depth)");
  auto mm_args = std::make_shared<CommonArgs>();
  auto mm_opts = std::make_shared<std::map<std::string, std::string>>();
  auto mm_frontal = std::make_shared<bool>(false);
  add_common(mm_cmd, *mm_args);
  mm_cmd->add_option("--basis", (*mm_opts)["basis"], "morphable basis file");
  mm_cmd->add_option("--coeffs", (*mm_opts)["coeffs"], "coefficient file");
  mm_cmd->add_option("--camera", (*mm_opts)["camera"], "camera file");
  mm_cmd->add_flag("--frontal", *mm_frontal, "render at C_front with zero texture offset");
  mm_cmd->callback([=, &exit_code]() {
    exit_code = guarded([&]() {
      PipelineConfig cfg = build_config(*mm_args);
      maybe_set(cfg.basis, (*mm_opts)["basis"]);
      maybe_set(cfg.coeffs, (*mm_opts)["coeffs"]);
      maybe_set(cfg.camera, (*mm_opts)["camera"]);
      triavatar::cmd_mmrender(cfg, *mm_frontal);
    });
  });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "paired image metrics report");
  auto eval_args = std::make_shared<CommonArgs>();
  auto eval_opts = std::make_shared<std::map<std::string, std::string>>();
  auto no_align = std::make_shared<bool>(false);
  add_common(eval_cmd, *eval_args);
  eval_cmd->add_option("--pred", (*eval_opts)["pred"], "directory of predicted images");
  eval_cmd->add_option("--gt", (*eval_opts)["gt"], "directory of ground-truth images");
  eval_cmd->add_flag("--no-align", *no_align, "skip Procrustes alignment");
  eval_cmd->callback([=, &exit_code]() {
    exit_code = guarded([&]() {
      PipelineConfig cfg = build_config(*eval_args);
      maybe_set(cfg.pred_dir, (*eval_opts)["pred"]);
      maybe_set(cfg.gt_dir, (*eval_opts)["gt"]);
      if (*no_align) cfg.eval_align = false;
      triavatar::cmd_eval(cfg);
    });
  });

  // lift
  auto* lift_cmd = app.add_subcommand("lift", "lift image features through a depth map");
  auto lift_args = std::make_shared<CommonArgs>();
  auto lift_opts = std::make_shared<std::map<std::string, std::string>>();
  add_common(lift_cmd, *lift_args);
  lift_cmd->add_option("--features", (*lift_opts)["features"], "feature image (FIM1)");
  lift_cmd->add_option("--depth", (*lift_opts)["depth"], "depth map (FMP1)");
  lift_cmd->add_option("--camera", (*lift_opts)["camera"], "camera file");
  lift_cmd->add_option("--mask", (*lift_opts)["mask"], "mask PNG applied to the features");
  lift_cmd->callback([=, &exit_code]() {
    exit_code = guarded([&]() {
      PipelineConfig cfg = build_config(*lift_args);
      maybe_set(cfg.feature_image, (*lift_opts)["features"]);
      maybe_set(cfg.depth, (*lift_opts)["depth"]);
      maybe_set(cfg.camera, (*lift_opts)["camera"]);
      maybe_set(cfg.feature_mask, (*lift_opts)["mask"]);
      triavatar::cmd_lift(cfg);
    });
  });

  // rasterize
  auto* raster_cmd = app.add_subcommand("rasterize", "rasterize a point cloud onto a tri-plane");
  auto raster_args = std::make_shared<CommonArgs>();
  auto raster_opts = std::make_shared<std::map<std::string, std::string>>();
  auto raster_channels = std::make_shared<int>(0);
  auto raster_resolution = std::make_shared<int>(256);
  auto raster_extent = std::make_shared<double>(1.0);
  add_common(raster_cmd, *raster_args);
  raster_cmd->add_option("--cloud", (*raster_opts)["cloud"], "point cloud file (NPC1)");
  raster_cmd->add_option("--channels", *raster_channels, "tri-plane channels (default: cloud width)");
  raster_cmd->add_option("--resolution", *raster_resolution, "tri-plane resolution");
  raster_cmd->add_option("--extent", *raster_extent, "tri-plane half-extent");
  raster_cmd->callback([=, &exit_code]() {
    exit_code = guarded([&]() {
      PipelineConfig cfg = build_config(*raster_args);
      maybe_set(cfg.cloud, (*raster_opts)["cloud"]);
      triavatar::cmd_rasterize(cfg, *raster_channels, *raster_resolution, *raster_extent);
    });
  });

  // tpl — inspect/convert tri-plane files
  auto* tpl_cmd = app.add_subcommand("tpl", "tri-plane file utilities");
  tpl_cmd->require_subcommand(1);

  auto* tpl_info = tpl_cmd->add_subcommand("info", "print tri-plane header fields");
  auto tpl_info_path = std::make_shared<std::string>();
  tpl_info->add_option("file", *tpl_info_path, "tri-plane file")->required();
  tpl_info->callback([=, &exit_code]() {
    exit_code = guarded([&]() {
      triavatar::TriPlane t = triavatar::triplane_load(*tpl_info_path);
      double lo = t.planes[0][0], hi = t.planes[0][0];
      for (const auto& plane : t.planes)
        for (float v : plane) {
          lo = std::min(lo, static_cast<double>(v));
          hi = std::max(hi, static_cast<double>(v));
        }
      std::cout << "channels " << t.channels << "\n"
                << "resolution " << t.resolution << "\n"
                << "extent " << t.extent << "\n"
                << "min " << lo << "\n"
                << "max " << hi << "\n";
    });
  });

  auto* tpl_new_cmd = tpl_cmd->add_subcommand("new", "write a constant-fill tri-plane");
  auto tpl_new_path = std::make_shared<std::string>();
  auto tpl_new_channels = std::make_shared<int>(32);
  auto tpl_new_resolution = std::make_shared<int>(256);
  auto tpl_new_extent = std::make_shared<double>(1.0);
  auto tpl_new_fill = std::make_shared<double>(0.0);
  tpl_new_cmd->add_option("file", *tpl_new_path, "output file")->required();
  tpl_new_cmd->add_option("--channels", *tpl_new_channels, "channel count");
  tpl_new_cmd->add_option("--resolution", *tpl_new_resolution, "grid resolution");
  tpl_new_cmd->add_option("--extent", *tpl_new_extent, "half-extent");
  tpl_new_cmd->add_option("--fill", *tpl_new_fill, "constant fill value");
  tpl_new_cmd->callback([=, &exit_code]() {
    exit_code = guarded([&]() {
      triavatar::triplane_save(
          triavatar::triplane_new(*tpl_new_channels, *tpl_new_resolution, *tpl_new_extent,
                                  *tpl_new_fill),
          *tpl_new_path);
    });
  });

  auto* tpl_add = tpl_cmd->add_subcommand("add", "sum two tri-plane files");
  auto tpl_add_a = std::make_shared<std::string>();
  auto tpl_add_b = std::make_shared<std::string>();
  auto tpl_add_out = std::make_shared<std::string>();
  tpl_add->add_option("a", *tpl_add_a, "first tri-plane")->required();
  tpl_add->add_option("b", *tpl_add_b, "second tri-plane")->required();
  tpl_add->add_option("out", *tpl_add_out, "output file")->required();
  tpl_add->callback([=, &exit_code]() {
    exit_code = guarded([&]() {
      triavatar::triplane_save(triavatar::triplane_add(triavatar::triplane_load(*tpl_add_a),
                                                       triavatar::triplane_load(*tpl_add_b)),
                               *tpl_add_out);
    });
  });

  auto* tpl_sample = tpl_cmd->add_subcommand("sample", "sample the summed feature at a point");
  auto tpl_sample_path = std::make_shared<std::string>();
  auto tpl_sample_xyz = std::make_shared<std::vector<double>>();
  tpl_sample->add_option("file", *tpl_sample_path, "tri-plane file")->required();
  tpl_sample->add_option("point", *tpl_sample_xyz, "x y z")->expected(3)->required();
  tpl_sample->callback([=, &exit_code]() {
    exit_code = guarded([&]() {
      triavatar::TriPlane t = triavatar::triplane_load(*tpl_sample_path);
      Eigen::Vector3d p((*tpl_sample_xyz)[0], (*tpl_sample_xyz)[1], (*tpl_sample_xyz)[2]);
      Eigen::VectorXd f = triavatar::sample_point(t, p);
      std::cout.precision(17);
      for (Eigen::Index i = 0; i < f.size(); ++i)
        std::cout << f[i] << (i + 1 < f.size() ? " " : "\n");
    });
  });

  auto* tpl_slice = tpl_cmd->add_subcommand("slice", "export one plane channel as a float map");
  auto tpl_slice_path = std::make_shared<std::string>();
  auto tpl_slice_out = std::make_shared<std::string>();
  auto tpl_slice_plane = std::make_shared<int>(0);
  auto tpl_slice_channel = std::make_shared<int>(0);
  tpl_slice->add_option("file", *tpl_slice_path, "tri-plane file")->required();
  tpl_slice->add_option("out", *tpl_slice_out, "output float map (FMP1)")->required();
  tpl_slice->add_option("--plane", *tpl_slice_plane, "plane index (0=XY, 1=XZ, 2=YZ)");
  tpl_slice->add_option("--channel", *tpl_slice_channel, "channel index");
  tpl_slice->callback([=, &exit_code]() {
    exit_code = guarded([&]() {
      triavatar::TriPlane t = triavatar::triplane_load(*tpl_slice_path);
      if (*tpl_slice_plane < 0 || *tpl_slice_plane > 2)
        throw triavatar::ParameterError("plane index must be 0, 1, or 2");
      if (*tpl_slice_channel < 0 || *tpl_slice_channel >= t.channels)
        throw triavatar::ParameterError("channel index out of range");
      triavatar::FloatMap map(t.resolution, t.resolution);
      for (int row = 0; row < t.resolution; ++row)
        for (int col = 0; col < t.resolution; ++col)
          map.at(row, col) = t.at(*tpl_slice_plane, *tpl_slice_channel, row, col);
      triavatar::fmp_save(map, *tpl_slice_out);
    });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  return exit_code;
}
