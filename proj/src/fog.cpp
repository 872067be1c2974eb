#include "ov3d/fog.hpp"

#include <algorithm>
#include <cmath>

namespace ov3d {

double transmittance(double beta, double depth) {
  if (beta == 0.0) return 1.0;
  if (!(depth > 0.0) || !std::isfinite(depth)) return 0.0;
  return std::exp(-beta * depth);
}

double fog_channel(double intensity, double ambient, double beta, double depth) {
  const double t = transmittance(beta, depth);
  return ambient + (intensity - ambient) * t;
}

RgbImage apply_fog(const RgbImage& img, const DepthMap& depth, const FogParams& params) {
  if (img.width != depth.width || img.height != depth.height) {
    throw DimensionMismatchError("apply_fog: image and depth dimensions differ");
  }
  if (!(params.beta >= 0.0)) throw ConfigError("fog beta must be >= 0");
  RgbImage out(img.width, img.height);
  for (int row = 0; row < img.height; ++row) {
    for (int col = 0; col < img.width; ++col) {
      const double d = depth.at(col, row);
      for (int ch = 0; ch < 3; ++ch) {
        const double v = fog_channel(img.at(col, row, ch), params.ambient[static_cast<std::size_t>(ch)], params.beta, d);
        out.at(col, row, ch) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

}  // namespace ov3d
