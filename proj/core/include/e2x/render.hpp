#pragma once

#include "e2x/io.hpp"
#include "e2x/types.hpp"

namespace e2x {

struct RenderParams {
  double alpha = 0.6;  // overlay opacity in [0, 1]
  double gamma = 1.0;  // emphasis exponent, > 0
};

void validate(const RenderParams& params);

struct NormalizedMap {
  ImportanceMap map;
  bool degenerate = false;  // input was all zeros
};

/// Divides by the largest absolute value. An all-zero map comes back
/// unchanged with `degenerate` set.
NormalizedMap normalize_map(const ImportanceMap& map);

/// Red for positive, blue for negative, with opacity |v|^gamma * alpha,
/// composited source-over onto `backdrop`. The map must have one channel,
/// values in [-1, 1] and the backdrop's size.
RgbaImage render_overlay(const RgbaImage& backdrop, const ImportanceMap& normalized,
                         const RenderParams& params);

}  // namespace e2x
