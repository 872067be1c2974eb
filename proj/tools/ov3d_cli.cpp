// Command-line front end: inflate, eval, fog, pseudo-depth, bev.
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include <spdlog/spdlog.h>

#include "ov3d/bev.hpp"
#include "ov3d/pipeline.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

std::array<double, 3> parse_rgb(const std::string& s) {
  std::array<double, 3> out{};
  std::stringstream ss(s);
  std::string item;
  for (std::size_t k = 0; k < 3; ++k) {
    if (!std::getline(ss, item, ',')) throw ov3d::ConfigError("ambient must be r,g,b");
    out[k] = std::stod(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-free lifting of 2D open-vocabulary detections to 3D boxes"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log dropped detections and other details");

  auto* inflate = app.add_subcommand("inflate", "Lift detections of a dataset root into 3D boxes");
  std::string cfg_path, root, out_path, drop_log;
  inflate->add_option("--config", cfg_path, "Pipeline configuration JSON")->required()->check(CLI::ExistingFile);
  inflate->add_option("--root", root, "Dataset root holding frames.json")->required()->check(CLI::ExistingDirectory);
  inflate->add_option("--out", out_path, "Predictions JSON to write")->required();
  inflate->add_option("--drop-log", drop_log, "Write dropped detections here, one per line");

  auto* eval = app.add_subcommand("eval", "Evaluate predictions against ground truth");
  std::string pred_path, gt_path, eval_cfg, report_path, table_path;
  std::vector<std::string> classes;
  eval->add_option("--pred", pred_path, "Predictions JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--gt", gt_path, "Ground-truth JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--classes", classes, "Classes to evaluate (default: all GT labels)")->delimiter(',');
  eval->add_option("--config", eval_cfg, "Pipeline configuration (its eval and classes sections are used)")
      ->check(CLI::ExistingFile);
  eval->add_option("--out", report_path, "Metrics report JSON to write");
  eval->add_option("--table", table_path, "Text table to write (always printed to stdout)");

  auto* fog = app.add_subcommand("fog", "Apply depth-aware fog to every image of a dataset root");
  double fog_beta = ov3d::FogParams{}.beta;
  std::string fog_in, fog_out, ambient = "255,255,255";
  fog->add_option("--beta", fog_beta, "Fog density, 1/m")->required()->check(CLI::NonNegativeNumber);
  fog->add_option("--in", fog_in, "Input dataset root")->required()->check(CLI::ExistingDirectory);
  fog->add_option("--out", fog_out, "Output directory")->required();
  fog->add_option("--ambient", ambient, "Atmospheric light r,g,b")->capture_default_str();

  auto* pseudo = app.add_subcommand("pseudo-depth", "Build a fogged RGB-D copy with pseudo-LiDAR sweeps");
  int stride = ov3d::kDefaultPseudoStride;
  double pseudo_beta = ov3d::FogParams{}.beta;
  std::string pseudo_in, pseudo_out;
  pseudo->add_option("--stride", stride, "Keep every k-th pixel (row-major)")->capture_default_str()->check(CLI::PositiveNumber);
  pseudo->add_option("--beta", pseudo_beta, "Fog density, 1/m")->capture_default_str()->check(CLI::NonNegativeNumber);
  pseudo->add_option("--in", pseudo_in, "Input dataset root")->required()->check(CLI::ExistingDirectory);
  pseudo->add_option("--out", pseudo_out, "Output dataset root")->required();
  pseudo->add_option("--ambient", ambient, "Atmospheric light r,g,b")->capture_default_str();

  auto* bev = app.add_subcommand("bev", "Render a bird's-eye-view SVG of one frame");
  std::string frame_id, bev_pred, bev_gt, bev_out, bev_root;
  ov3d::BevOptions bev_opts;
  bev->add_option("--frame", frame_id, "Frame id")->required();
  bev->add_option("--pred", bev_pred, "Predictions JSON")->check(CLI::ExistingFile);
  bev->add_option("--gt", bev_gt, "Ground-truth JSON")->check(CLI::ExistingFile);
  bev->add_option("--out", bev_out, "SVG file to write")->required();
  bev->add_option("--root", bev_root, "Dataset root; centers the view on the frame's ego pose")
      ->check(CLI::ExistingDirectory);
  bev->add_option("--scale", bev_opts.meters_per_pixel, "Meters per pixel")->capture_default_str()->check(CLI::PositiveNumber);
  bev->add_option("--range", bev_opts.range, "Half-width of the view, meters")->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

  try {
    if (*inflate) {
      const ov3d::PipelineConfig cfg = ov3d::read_config(cfg_path);
      const ov3d::InflateResult result = ov3d::run_inflate(cfg, root);
      ov3d::write_boxes(out_path, result.predictions);
      if (!drop_log.empty()) {
        std::string text;
        for (const auto& d : result.drops) {
          text += d.frame_id + "\t" + d.camera + "\t" + std::to_string(d.detection_index) + "\t" + d.reason + "\n";
        }
        ov3d::write_text(drop_log, text);
      }
      std::cerr << result.predictions.size() << " boxes written, " << result.drops.size()
                << " detections dropped\n";
    } else if (*eval) {
      ov3d::MatchConfig match;
      if (!eval_cfg.empty()) {
        const ov3d::PipelineConfig cfg = ov3d::read_config(eval_cfg);
        match = cfg.eval;
        if (classes.empty()) classes = cfg.classes;
      }
      const ov3d::MetricsReport report = ov3d::run_eval(pred_path, gt_path, match, classes);
      const std::string table = ov3d::format_table(report);
      std::cout << table;
      if (!report_path.empty()) ov3d::write_text(report_path, ov3d::to_json(report).dump(2) + "\n");
      if (!table_path.empty()) ov3d::write_text(table_path, table);
    } else if (*fog) {
      const auto log = ov3d::fog_dataset(fog_in, fog_out, {fog_beta, parse_rgb(ambient)});
      std::cerr << log.written << " images fogged, " << log.skipped.size() << " skipped\n";
    } else if (*pseudo) {
      const auto log = ov3d::build_pseudo_dataset(pseudo_in, pseudo_out, {pseudo_beta, parse_rgb(ambient)}, stride);
      std::cerr << log.written << " frames written, " << log.skipped.size() << " skipped\n";
    } else if (*bev) {
      std::vector<ov3d::SceneBox> preds, gts;
      if (!bev_pred.empty()) preds = ov3d::read_boxes(bev_pred);
      if (!bev_gt.empty()) gts = ov3d::read_boxes(bev_gt);
      if (!bev_root.empty()) {
        for (const auto& f : ov3d::read_frames(bev_root)) {
          if (f.frame_id == frame_id) {
            bev_opts.ego_from_global = f.ego_from_global();
            break;
          }
        }
        if (!bev_opts.ego_from_global) throw ov3d::ParseError("frame '" + frame_id + "' not found under " + bev_root);
      }
      ov3d::emit_bev(preds, gts, frame_id, bev_out, bev_opts);
    }
  } catch (const ov3d::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
