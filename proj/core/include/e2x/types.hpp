#pragma once

// Domain types shared by every estimator. All rasters are channel-last,
// row-major: value (r, c, ch) lives at ((r * width) + c) * channels + ch.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "e2x/error.hpp"

namespace e2x {

struct Shape {
  int height = 0;
  int width = 0;
  int channels = 0;

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return pixels() * channels; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

template <typename Tag>
class Raster {
 public:
  Raster() = default;

  explicit Raster(Shape shape) : shape_(shape), data_(shape.size(), 0.0) {
    check_dims(shape);
  }

  Raster(Shape shape, std::vector<double> data)
      : shape_(shape), data_(std::move(data)) {
    check_dims(shape);
    if (data_.size() != shape_.size()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "data length " + std::to_string(data_.size()) +
                      " != height*width*channels " +
                      std::to_string(shape_.size()));
    }
  }

  const Shape& shape() const { return shape_; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  int channels() const { return shape_.channels; }
  std::size_t pixels() const { return shape_.pixels(); }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int r, int c, int ch = 0) const {
    return (static_cast<std::size_t>(r) * shape_.width + c) * shape_.channels + ch;
  }
  double at(int r, int c, int ch = 0) const { return data_[index(r, c, ch)]; }
  double& at(int r, int c, int ch = 0) { return data_[index(r, c, ch)]; }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  static void check_dims(const Shape& s) {
    if (s.height <= 0 || s.width <= 0 || s.channels <= 0) {
      throw Error(ErrorCode::kShapeMismatch, "raster dimensions must be positive");
    }
  }

  Shape shape_;
  std::vector<double> data_;
};

struct ImageTag {};
struct ImportanceMapTag {};

/// Model input x. Nominally mean-subtracted so that zero is the
/// distribution mean.
using Image = Raster<ImageTag>;

/// Per-pixel (or per input value, when channels > 1) attribution raster.
using ImportanceMap = Raster<ImportanceMapTag>;

/// Realizes the superpixel mapping: one label in [0, M) per pixel, no empty
/// labels. Construction validates.
class Segmentation {
 public:
  Segmentation() = default;
  Segmentation(int height, int width, std::vector<std::int32_t> labels,
               int num_segments);

  /// Infers num_segments as max label + 1.
  static Segmentation from_labels(int height, int width,
                                  std::vector<std::int32_t> labels);

  int height() const { return height_; }
  int width() const { return width_; }
  int num_segments() const { return num_segments_; }
  std::size_t pixels() const { return labels_.size(); }
  std::int32_t label(int r, int c) const {
    return labels_[static_cast<std::size_t>(r) * width_ + c];
  }
  std::span<const std::int32_t> labels() const { return labels_; }

  friend bool operator==(const Segmentation&, const Segmentation&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int num_segments_ = 0;
  std::vector<std::int32_t> labels_;
};

/// Binary presence vector over segments.
struct SimplifiedInput {
  std::vector<std::uint8_t> bits;

  static SimplifiedInput ones(int m) { return {std::vector<std::uint8_t>(m, 1)}; }
  static SimplifiedInput zeros(int m) { return {std::vector<std::uint8_t>(m, 0)}; }
  std::size_t size() const { return bits.size(); }
};

/// Per-segment attribution phi plus the baseline term phi0.
struct ImportanceVector {
  std::vector<double> phi;
  double phi0 = 0.0;

  std::size_t size() const { return phi.size(); }
  friend bool operator==(const ImportanceVector&, const ImportanceVector&) = default;
};

/// One per-segment weight vector w(k) with entries on the grid {j / (K-1)}.
struct WeightSample {
  std::vector<double> w;
};

/// The "feature absent" stand-in.
class ReferenceInput {
 public:
  enum class Mode { kZero, kChannelMean, kExplicit };

  static ReferenceInput zero() { return ReferenceInput(Mode::kZero); }
  static ReferenceInput channel_mean() { return ReferenceInput(Mode::kChannelMean); }
  static ReferenceInput explicit_image(Image image);

  Mode mode() const { return mode_; }
  bool is_zero() const { return mode_ == Mode::kZero; }

  /// Materializes the reference for `target`'s shape.
  Image resolve(const Image& target) const;

 private:
  explicit ReferenceInput(Mode mode) : mode_(mode) {}

  Mode mode_ = Mode::kZero;
  std::optional<Image> image_;
};

void validate(const Image& image);
void validate(const ImportanceMap& map);
void validate(const ImportanceVector& v, int num_segments);
void validate(const SimplifiedInput& input, int num_segments);
void validate(const WeightSample& sample, int num_segments, int num_levels);
/// Checks that `seg` was computed on a raster of `image`'s height and width.
void validate(const Segmentation& seg, const Image& image);

}  // namespace e2x
