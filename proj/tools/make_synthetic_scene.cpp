// Writes a small planted-box dataset (frames.json, calibration, LiDAR, depth,
// masks, images and gt.json) for trying out the CLI.

#include <CLI11.hpp>

#include <iostream>

#include "synthetic_scene.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic planted-box dataset"};
  std::string out;
  int frames = 3;
  int noise = 300;
  app.add_option("--out", out, "Output dataset root")->required();
  app.add_option("--frames", frames, "Number of frames")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--noise", noise, "Outlier points per frame")->capture_default_str()->check(CLI::NonNegativeNumber);
  CLI11_PARSE(app, argc, argv);

  std::vector<ov3d::synth::SceneSpec> specs;
  for (int i = 0; i < frames; ++i) {
    auto s = ov3d::synth::default_scene("frame-" + std::to_string(i), 7u + static_cast<unsigned>(i));
    s.noise_points = noise;
    for (auto& b : s.boxes) b.center_xy.x() += 2.0 * i;
    specs.push_back(std::move(s));
  }
  try {
    ov3d::synth::write_dataset(out, specs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cout << "wrote " << frames << " frames to " << out << "\n";
  return 0;
}
