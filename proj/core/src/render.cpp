#include "e2x/render.hpp"

#include <algorithm>
#include <cmath>

namespace e2x {

void validate(const RenderParams& params) {
  if (!(params.alpha >= 0.0 && params.alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "overlay alpha must lie in [0, 1]");
  }
  if (!(params.gamma > 0.0) || !std::isfinite(params.gamma)) {
    throw Error(ErrorCode::kInvalidArgument, "overlay gamma must be positive");
  }
}

NormalizedMap normalize_map(const ImportanceMap& map) {
  validate(map);
  double peak = 0.0;
  for (double v : map.values()) peak = std::max(peak, std::abs(v));
  NormalizedMap out{map, peak == 0.0};
  if (out.degenerate) return out;
  for (double& v : out.map.values()) v /= peak;
  return out;
}

namespace {

std::uint8_t blend(std::uint8_t dst, double src, double a) {
  return static_cast<std::uint8_t>(std::lround(src * a + dst * (1.0 - a)));
}

}  // namespace

RgbaImage render_overlay(const RgbaImage& backdrop, const ImportanceMap& normalized,
                         const RenderParams& params) {
  validate(params);
  validate(normalized);
  const Shape& s = normalized.shape();
  if (s.channels != 1 || s.height != backdrop.height() || s.width != backdrop.width()) {
    throw Error(ErrorCode::kShapeMismatch, "overlay map must be one channel of the image size");
  }
  RgbaImage out(s.height, s.width);
  for (int r = 0; r < s.height; ++r) {
    for (int c = 0; c < s.width; ++c) {
      const double v = normalized.at(r, c, 0);
      if (v < -1.0 - 1e-12 || v > 1.0 + 1e-12) {
        throw Error(ErrorCode::kInvalidArgument, "overlay values must be normalized to [-1, 1]");
      }
      const double a = std::pow(std::min(std::abs(v), 1.0), params.gamma) * params.alpha;
      const double red = v > 0.0 ? 255.0 : 0.0, blue = v < 0.0 ? 255.0 : 0.0;
      out.set(r, c, blend(backdrop.at(r, c, 0), red, a), blend(backdrop.at(r, c, 1), 0.0, a),
              blend(backdrop.at(r, c, 2), blue, a), 255);
    }
  }
  return out;
}

}  // namespace e2x
