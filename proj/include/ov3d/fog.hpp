#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ov3d/lift.hpp"

namespace ov3d {

/// 8-bit RGB, row-major, interleaved.
struct RgbImage {
  int width{0}, height{0};
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t fill = 0) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t& at(int col, int row, int ch) { return pixels[(static_cast<std::size_t>(row) * width + col) * 3 + ch]; }
  std::uint8_t at(int col, int row, int ch) const {
    return pixels[(static_cast<std::size_t>(row) * width + col) * 3 + ch];
  }
};

struct FogParams {
  double beta{0.03};  // 1/m
  std::array<double, 3> ambient{255.0, 255.0, 255.0};
};

/// exp(-beta * d); invalid depth (d <= 0) counts as infinitely far.
double transmittance(double beta, double depth);

/// I * t + A * (1 - t), unrounded.
double fog_channel(double intensity, double ambient, double beta, double depth);

/// Per-pixel fog blend, rounded half-up and clamped to [0, 255].
RgbImage apply_fog(const RgbImage& img, const DepthMap& depth, const FogParams& params);

}  // namespace ov3d
