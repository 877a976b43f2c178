#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "e2x/types.hpp"

namespace e2x {

using OutputVector = std::vector<double>;

/// Which scalar output of a model is being explained.
struct OutputSelector {
  std::size_t index = 0;
};

struct ValueAndGradient {
  double value = 0.0;
  ImportanceMap gradient;  // same shape as the input image
};

/// Black-box prediction model f(x). Implementations are immutable after
/// construction; every const member must be safe to call concurrently.
class PredictionModel {
 public:
  virtual ~PredictionModel() = default;

  virtual std::size_t output_dim() const = 0;

  /// Throws ShapeMismatch if the model cannot consume `image`.
  virtual OutputVector forward(const Image& image) const = 0;

  /// Order-preserving; bitwise-equal to calling forward() per image.
  virtual std::vector<OutputVector> forward_batch(std::span<const Image> batch) const;

  virtual bool has_gradient() const { return false; }

  /// One forward plus one backward pass for output `sel`. The default
  /// throws GradientUnavailable.
  virtual ValueAndGradient value_and_gradient(const Image& image,
                                              OutputSelector sel) const;

  ImportanceMap gradient(const Image& image, OutputSelector sel) const {
    return value_and_gradient(image, sel).gradient;
  }

  double output(const Image& image, OutputSelector sel) const;

 protected:
  void check_selector(OutputSelector sel) const;
};

/// Forwards to another model and counts evaluations. A value_and_gradient
/// call counts as one forward and one backward pass.
class CountingModel final : public PredictionModel {
 public:
  explicit CountingModel(const PredictionModel& inner) : inner_(inner) {}

  std::size_t output_dim() const override { return inner_.output_dim(); }
  OutputVector forward(const Image& image) const override;
  std::vector<OutputVector> forward_batch(std::span<const Image> batch) const override;
  bool has_gradient() const override { return inner_.has_gradient(); }
  ValueAndGradient value_and_gradient(const Image& image,
                                      OutputSelector sel) const override;

  std::uint64_t forwards() const { return forwards_.load(); }
  std::uint64_t backwards() const { return backwards_.load(); }
  void reset() {
    forwards_ = 0;
    backwards_ = 0;
  }

 private:
  const PredictionModel& inner_;
  mutable std::atomic<std::uint64_t> forwards_{0};
  mutable std::atomic<std::uint64_t> backwards_{0};
};

/// Maximum over up to 256 sampled input coordinates of
/// |analytic - central difference| / (|central difference| + 1e-12).
/// Coordinates are drawn uniformly with the counter RNG seeded by `seed`.
double check_gradient(const PredictionModel& model, const Image& image,
                      OutputSelector sel, double eps, std::uint64_t seed = 0);

/// f(x) = <weights, x> + bias; one output.
class LinearModel final : public PredictionModel {
 public:
  LinearModel(Shape shape, std::vector<double> weights, double bias);

  const Shape& input_shape() const { return shape_; }
  std::span<const double> weights() const { return weights_; }
  double bias() const { return bias_; }

  std::size_t output_dim() const override { return 1; }
  OutputVector forward(const Image& image) const override;
  bool has_gradient() const override { return true; }
  ValueAndGradient value_and_gradient(const Image& image,
                                      OutputSelector sel) const override;

 private:
  Shape shape_;
  std::vector<double> weights_;
  double bias_;
};

/// 3x3 "same" convolution with zero padding followed by ReLU. Shared by the
/// classifier and the detector.
struct ConvLayer {
  int in_channels = 0;
  int filters = 0;
  int kernel = 3;
  std::vector<double> weights;  // [filter][ky][kx][in_channel]
  std::vector<double> bias;     // [filter]

  std::size_t parameter_count() const {
    return static_cast<std::size_t>(filters) * kernel * kernel * in_channels + filters;
  }
  /// Pre-activation raster, H x W x filters.
  std::vector<double> preactivate(const Image& image) const;
  /// Accumulates d(out)/d(input) given d(out)/d(pre-activation).
  void backward(const Shape& input, std::span<const double> grad_pre,
                std::span<double> grad_input) const;
};

struct TinyCnnConfig {
  Shape input{16, 16, 3};
  int filters = 4;
  int classes = 3;
  std::uint64_t seed = 20180907;
};

/// conv3x3 + ReLU -> 2x2 average pooling -> dense -> softmax.
class TinyCNN final : public PredictionModel {
 public:
  explicit TinyCNN(const TinyCnnConfig& config);
  TinyCNN(const TinyCnnConfig& config, std::span<const double> parameters);

  const TinyCnnConfig& config() const { return config_; }
  std::vector<double> parameters() const;

  /// Conv pre-activations (before ReLU), H x W x filters.
  std::vector<double> preactivations(const Image& image) const;

  std::size_t output_dim() const override { return config_.classes; }
  OutputVector forward(const Image& image) const override;
  bool has_gradient() const override { return true; }
  ValueAndGradient value_and_gradient(const Image& image,
                                      OutputSelector sel) const override;

 private:
  void check_input(const Image& image) const;
  std::vector<double> pooled(const std::vector<double>& relu) const;

  TinyCnnConfig config_;
  ConvLayer conv_;
  int pooled_h_ = 0;
  int pooled_w_ = 0;
  std::vector<double> dense_w_;  // [class][feature]
  std::vector<double> dense_b_;
};

struct AnchorBox {
  double xmin, ymin, xmax, ymax;
};

struct ToyDetectorConfig {
  Shape input{48, 48, 3};
  int filters = 6;
  int classes = 3;  // class 0 is background
  int grid = 4;     // anchors are centered on a grid x grid lattice
  // Anchor shapes as (width, height) in units of the grid cell; with the
  // default four shapes and a 4x4 lattice the detector emits 64 anchors.
  std::vector<std::pair<double, double>> anchor_shapes{
      {1.0, 1.0}, {2.0, 2.0}, {2.0, 1.0}, {1.0, 2.0}};
  // Dense head init range is head_scale * sqrt(3 / filters).
  double head_scale = 8.0;
  std::uint64_t seed = 20180907;
};

/// SSD-flavoured toy detector. Each anchor mean-pools the shared conv
/// features over its box and over a context window (the box doubled about
/// its centre), and scores the classes from both with a shared dense layer
/// and a softmax. Output index = anchor * classes + class.
class ToyDetector final : public PredictionModel {
 public:
  explicit ToyDetector(const ToyDetectorConfig& config);
  ToyDetector(const ToyDetectorConfig& config, std::span<const double> parameters);

  const ToyDetectorConfig& config() const { return config_; }
  std::vector<double> parameters() const;

  std::size_t num_anchors() const { return anchors_.size(); }
  int num_classes() const { return config_.classes; }
  const AnchorBox& anchor(std::size_t i) const { return anchors_[i]; }
  std::size_t output_index(std::size_t anchor, int class_id) const {
    return anchor * config_.classes + class_id;
  }

  std::size_t output_dim() const override { return anchors_.size() * config_.classes; }
  OutputVector forward(const Image& image) const override;
  bool has_gradient() const override { return true; }
  ValueAndGradient value_and_gradient(const Image& image,
                                      OutputSelector sel) const override;

 private:
  struct PixelRange {
    int r0, r1, c0, c1;  // half-open
  };

  void build_anchors();
  void check_input(const Image& image) const;
  // Class logits of anchor `a` from the summed-area table of the activations.
  std::vector<double> anchor_logits(const std::vector<double>& sat, std::size_t a) const;

  ToyDetectorConfig config_;
  ConvLayer conv_;
  std::vector<double> dense_w_;  // [class][box filters, context filters]
  std::vector<double> dense_b_;
  std::vector<AnchorBox> anchors_;
  std::vector<PixelRange> ranges_;
  std::vector<PixelRange> context_;
};

/// Serialized model fixture: magic "E2XM", u32 version, then a little-endian
/// f32 blob. The blob starts with an architecture header encoded as f32
/// integers (see model_io.cpp) and continues with the parameters.
void save_model(const std::string& path, const PredictionModel& model);
std::unique_ptr<PredictionModel> load_model(const std::string& path);

std::vector<std::uint8_t> serialize_model(const PredictionModel& model);
std::unique_ptr<PredictionModel> deserialize_model(std::span<const std::uint8_t> bytes);

}  // namespace e2x
