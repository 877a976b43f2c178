#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "e2x/detection.hpp"
#include "e2x/types.hpp"

namespace e2x {

/// Synthetic test scene: a shaded, textured background with a few textured
/// rectangles, in the model domain (roughly [-0.5, 0.5] per channel).
struct Scene {
  Image image;
  std::vector<GroundTruth> objects;
};

struct SceneParams {
  int height = 48;
  int width = 48;
  int channels = 3;
  int num_objects = 3;
  int num_classes = 3;  // class 0 is background and never placed
  double noise = 0.3;  // per-pixel texture amplitude
};

Scene make_scene(const SceneParams& params, std::uint64_t seed, const std::string& image_id = "");

/// Uniform random image in [-0.5, 0.5), for property tests.
Image random_image(const Shape& shape, std::uint64_t seed, double scale = 1.0);

}  // namespace e2x
