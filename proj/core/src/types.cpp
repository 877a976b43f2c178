#include "e2x/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace e2x {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kInvalidSegmentation: return "InvalidSegmentation";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kTooManySegments: return "TooManySegments";
    case ErrorCode::kTooManyFeatures: return "TooManyFeatures";
    case ErrorCode::kGradientUnavailable: return "GradientUnavailable";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kWindowTooLarge: return "WindowTooLarge";
    case ErrorCode::kNoDetections: return "NoDetections";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kGradientUnavailable:
    case ErrorCode::kSingularSystem:
    case ErrorCode::kNoDetections:
    case ErrorCode::kIoError:
      return false;
    default:
      return true;
  }
}

Segmentation::Segmentation(int height, int width,
                           std::vector<std::int32_t> labels, int num_segments)
    : height_(height),
      width_(width),
      num_segments_(num_segments),
      labels_(std::move(labels)) {
  if (height <= 0 || width <= 0) {
    throw Error(ErrorCode::kShapeMismatch, "segmentation dimensions must be positive");
  }
  if (labels_.size() != static_cast<std::size_t>(height) * width) {
    throw Error(ErrorCode::kShapeMismatch, "label raster size != height*width");
  }
  if (num_segments < 1) {
    throw Error(ErrorCode::kInvalidSegmentation, "num_segments must be >= 1");
  }
  std::vector<std::size_t> histogram(num_segments, 0);
  for (std::int32_t l : labels_) {
    if (l < 0 || l >= num_segments) {
      throw Error(ErrorCode::kInvalidSegmentation,
                  "label " + std::to_string(l) + " outside [0, " +
                      std::to_string(num_segments) + ")");
    }
    ++histogram[l];
  }
  for (int i = 0; i < num_segments; ++i) {
    if (histogram[i] == 0) {
      throw Error(ErrorCode::kInvalidSegmentation,
                  "label " + std::to_string(i) + " has no pixels");
    }
  }
}

Segmentation Segmentation::from_labels(int height, int width,
                                       std::vector<std::int32_t> labels) {
  std::int32_t max_label = -1;
  for (std::int32_t l : labels) max_label = std::max(max_label, l);
  return Segmentation(height, width, std::move(labels), max_label + 1);
}

ReferenceInput ReferenceInput::explicit_image(Image image) {
  ReferenceInput ref(Mode::kExplicit);
  ref.image_ = std::move(image);
  return ref;
}

Image ReferenceInput::resolve(const Image& target) const {
  switch (mode_) {
    case Mode::kZero:
      return Image(target.shape());
    case Mode::kChannelMean: {
      const int channels = target.channels();
      std::vector<double> mean(channels, 0.0);
      auto v = target.values();
      for (std::size_t i = 0; i < v.size(); ++i) mean[i % channels] += v[i];
      for (double& m : mean) m /= static_cast<double>(target.pixels());
      Image out(target.shape());
      auto o = out.values();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = mean[i % channels];
      return out;
    }
    case Mode::kExplicit:
      if (image_->shape() != target.shape()) {
        throw Error(ErrorCode::kShapeMismatch,
                    "explicit reference shape does not match image");
      }
      return *image_;
  }
  return Image(target.shape());
}

namespace {

void check_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFiniteValue, std::string(what) + " contains NaN or Inf");
    }
  }
}

}  // namespace

void validate(const Image& image) {
  if (image.size() != image.shape().size() || image.size() == 0) {
    throw Error(ErrorCode::kShapeMismatch, "image data length mismatch");
  }
  check_finite(image.values(), "image");
}

void validate(const ImportanceMap& map) {
  if (map.size() != map.shape().size() || map.size() == 0) {
    throw Error(ErrorCode::kShapeMismatch, "map data length mismatch");
  }
  check_finite(map.values(), "importance map");
}

void validate(const ImportanceVector& v, int num_segments) {
  if (v.phi.size() != static_cast<std::size_t>(num_segments)) {
    throw Error(ErrorCode::kLengthMismatch, "importance vector length != M");
  }
  check_finite(v.phi, "importance vector");
  if (!std::isfinite(v.phi0)) {
    throw Error(ErrorCode::kNonFiniteValue, "phi0 is not finite");
  }
}

void validate(const SimplifiedInput& input, int num_segments) {
  if (input.bits.size() != static_cast<std::size_t>(num_segments)) {
    throw Error(ErrorCode::kLengthMismatch, "bit vector length != M");
  }
  for (auto b : input.bits) {
    if (b > 1) throw Error(ErrorCode::kInvalidArgument, "bits must be 0 or 1");
  }
}

void validate(const WeightSample& sample, int num_segments, int num_levels) {
  if (sample.w.size() != static_cast<std::size_t>(num_segments)) {
    throw Error(ErrorCode::kLengthMismatch, "weight vector length != M");
  }
  if (num_levels < 2) {
    throw Error(ErrorCode::kInvalidArgument, "weight grid needs at least 2 levels");
  }
  const double steps = num_levels - 1;
  for (double w : sample.w) {
    const double scaled = w * steps;
    if (!(w >= 0.0 && w <= 1.0) || std::abs(scaled - std::round(scaled)) > 1e-9) {
      throw Error(ErrorCode::kInvalidArgument, "weight off the k/(K-1) grid");
    }
  }
}

void validate(const Segmentation& seg, const Image& image) {
  if (seg.height() != image.height() || seg.width() != image.width()) {
    throw Error(ErrorCode::kShapeMismatch, "segmentation and image differ in size");
  }
}

}  // namespace e2x
