#pragma once

// Operator-facing pipeline: configuration document, command implementations,
// and the output-file conventions shared by the CLI and the bindings.

#include <string>

#include "triavatar/geometry.hpp"
#include "triavatar/losses.hpp"
#include "triavatar/renderer.hpp"

namespace triavatar {

struct PipelineConfig {
  // [paths]
  std::string triplane_c;
  std::string triplane_e;
  std::string triplane_p;
  std::string decoder;
  std::string basis;
  std::string camera;         // source camera C_s
  std::string target_camera;  // target camera C_t
  std::string coeffs;         // source coefficients (alpha_s, ...)
  std::string target_coeffs;  // target coefficients (beta_t, ...)
  std::string feature_image;
  std::string feature_mask;
  std::string target;  // fit target image
  std::string cloud;
  std::string depth;
  std::string pred_dir;
  std::string gt_dir;
  std::string out_dir = "out";

  // [render]
  RenderConfig render;

  // [losses]
  LossWeights losses;

  // [fit]
  struct Fit {
    int steps = 200;
    double step_size = 2.0;
    int resolution = 64;
    int channels = 0;  // 0 = decoder input width
    double extent = 1.0;
    double lambda_tv = 0.001;
  } fit;

  // [frontal] — the pre-defined frontal camera C_front
  struct Frontal {
    double fov_deg = 30.0;
    double distance = 4.0;
    int size = 128;
  } frontal;

  // [eval]
  bool eval_align = true;
};

// Parses the `key = value` config document (sections in brackets, # comments).
PipelineConfig config_load(const std::string& path);

// Applies one `section.key=value` override on top of a parsed config.
void config_override(PipelineConfig& cfg, const std::string& assignment);

Camera frontal_camera(const PipelineConfig& cfg);

// Command bodies; they throw the library error types on failure and write
// fixed-name artifacts into cfg.out_dir.
void cmd_render(const PipelineConfig& cfg);
void cmd_reenact(const PipelineConfig& cfg);
void cmd_fit(const PipelineConfig& cfg);
void cmd_mmrender(const PipelineConfig& cfg, bool frontal);
void cmd_eval(const PipelineConfig& cfg);
void cmd_lift(const PipelineConfig& cfg);
void cmd_rasterize(const PipelineConfig& cfg, int channels, int resolution, double extent);

}  // namespace triavatar
