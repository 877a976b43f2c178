#include "e2x/scene.hpp"

#include <algorithm>

#include "e2x/rng.hpp"

namespace e2x {

Image random_image(const Shape& shape, std::uint64_t seed, double scale) {
  Image img(shape);
  CounterRng rng(seed, 0);
  for (double& v : img.values()) v = scale * (rng.uniform() - 0.5);
  return img;
}

Scene make_scene(const SceneParams& params, std::uint64_t seed, const std::string& image_id) {
  if (params.height < 8 || params.width < 8 || params.channels < 1 || params.num_objects < 0 ||
      params.num_classes < 2) {
    throw Error(ErrorCode::kInvalidArgument, "scene too small");
  }
  Scene scene{Image(Shape{params.height, params.width, params.channels}), {}};
  CounterRng rng(seed, 1);
  const double gx = rng.uniform(-0.2, 0.2), gy = rng.uniform(-0.2, 0.2);
  CounterRng noise(seed, 2);
  for (int r = 0; r < params.height; ++r) {
    for (int c = 0; c < params.width; ++c) {
      for (int ch = 0; ch < params.channels; ++ch) {
        const double shade = gx * (c / double(params.width) - 0.5) +
                             gy * (r / double(params.height) - 0.5) - 0.1 * ch / params.channels;
        scene.image.at(r, c, ch) = shade + params.noise * (noise.uniform() - 0.5);
      }
    }
  }
  for (int k = 0; k < params.num_objects; ++k) {
    const int cls = 1 + static_cast<int>(rng.below(params.num_classes - 1));
    const int h = 6 + static_cast<int>(rng.below(params.height / 3));
    const int w = 6 + static_cast<int>(rng.below(params.width / 3));
    const int r0 = static_cast<int>(rng.below(params.height - h + 1));
    const int c0 = static_cast<int>(rng.below(params.width - w + 1));
    // One bright channel per class so classes differ in colour.
    const int hot = (cls - 1) % params.channels;
    for (int r = r0; r < r0 + h; ++r) {
      for (int c = c0; c < c0 + w; ++c) {
        for (int ch = 0; ch < params.channels; ++ch) {
          scene.image.at(r, c, ch) = (ch == hot ? 0.4 : -0.3) + params.noise * (noise.uniform() - 0.5);
        }
      }
    }
    scene.objects.push_back(GroundTruth{Box{double(c0), double(r0), double(c0 + w), double(r0 + h)},
                                        cls, image_id});
  }
  return scene;
}

}  // namespace e2x
