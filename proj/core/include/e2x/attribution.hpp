#pragma once

// Attribution estimators over a black-box PredictionModel.
//
// Every estimator is a pure function of (model, inputs, params, seed).
// Parallel variants split work into fixed-size blocks and reduce blocks in
// index order, so `workers` never changes a result bit.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "e2x/model.hpp"
#include "e2x/segmentation.hpp"
#include "e2x/types.hpp"

namespace e2x {

// ------------------------------------------------------------ mappings

/// Pixel p keeps image(p) when bits[label(p)] = 1, else takes reference(p).
Image mask_apply(const Image& image, const Segmentation& seg, const SimplifiedInput& bits,
                 const Image& reference);
Image mask_apply(const Image& image, const Segmentation& seg, const SimplifiedInput& bits,
                 const ReferenceInput& reference);

/// Pixel p becomes w[label(p)] * image(p) (zero reference).
Image weight_apply(const Image& image, const Segmentation& seg, const WeightSample& w);

/// Channel values at a pixel are summed, then averaged over each segment.
ImportanceVector segment_average(const ImportanceMap& map, const Segmentation& seg);

/// Paints phi[label(p)] onto every pixel; one channel.
ImportanceMap broadcast(const ImportanceVector& v, const Segmentation& seg);

/// Sums channels into a one-channel map.
ImportanceMap collapse_channels(const ImportanceMap& map);

// ---------------------------------------------------------- estimators

/// Largest M accepted by exact_shapley (2^M forward passes).
inline constexpr int kMaxExactFeatures = 20;

/// Brute-force coalition enumeration. phi0 = f(all segments masked).
ImportanceVector exact_shapley(const PredictionModel& model, const Image& image,
                               const Segmentation& seg, OutputSelector sel,
                               const ReferenceInput& reference, int workers = 1);

enum class LimeKernel {
  kExponential,  // pi = exp(-D^2 / width^2), D = fraction of masked segments
  kShapley,      // Kernel SHAP weights; empty and full coalitions as hard constraints
};

enum class LimeSampling {
  kUniform,    // all-ones first (all-zeros second under kShapley), rest uniform bits
  kEnumerate,  // all 2^M vectors; num_samples is ignored
};

struct LimeParams {
  int num_samples = 1000;
  double kernel_width = 0.25;
  double ridge_lambda = 1e-3;
  std::uint64_t seed = 0;
  LimeKernel kernel = LimeKernel::kExponential;
  LimeSampling sampling = LimeSampling::kUniform;
  int workers = 1;
};

/// Weighted ridge regression of f(masked image) on the bit vectors. The
/// intercept is fitted and never penalized. Performs exactly one forward
/// pass per sample.
ImportanceVector lime_attribution(const PredictionModel& model, const Image& image,
                                  const Segmentation& seg, OutputSelector sel,
                                  const LimeParams& params, const ReferenceInput& reference);

struct IgParams {
  int num_steps = 32;
  ReferenceInput reference = ReferenceInput::zero();
  int workers = 1;
};

/// Right Riemann sum of the path integral from reference to image; K
/// gradient evaluations. Output has the image's shape (per input value).
ImportanceMap integrated_gradients(const PredictionModel& model, const Image& image,
                                   OutputSelector sel, const IgParams& params);

/// segment_average(integrated_gradients(...)).
ImportanceVector ig_segmented(const PredictionModel& model, const Image& image,
                              const Segmentation& seg, OutputSelector sel, const IgParams& params);

struct E2xParams {
  int num_samples = 16;
  std::uint64_t seed = 0;
  int workers = 1;
  // Must stay zero: the estimator assumes the mean-subtracted convention.
  ReferenceInput reference = ReferenceInput::zero();
};

/// Draws the weight vector for sample k: each w_i independently uniform on
/// {0, 1/(K-1), ..., 1}, from CounterRng(seed, stream = k).
WeightSample e2x_weights(int num_segments, int num_samples, std::uint64_t seed, int k);

/// phi = s_x( (x / K) * sum_k df(u(k)) / du(k) ), u(k) = weight_apply(x, w(k)).
/// phi0 is not estimated and left at 0.
ImportanceVector e2x_attribution(const PredictionModel& model, const Image& image,
                                 const Segmentation& seg, OutputSelector sel,
                                 const E2xParams& params);

enum class PdaFill { kMean, kReference };

struct PdaParams {
  int window_height = 8;
  int window_width = 8;
  int stride = 4;
  PdaFill fill = PdaFill::kMean;
  ReferenceInput reference = ReferenceInput::zero();
  int workers = 1;
};

/// Half-open pixel rectangle.
struct PixelRegion {
  int row0, col0, row1, col1;
};

/// Window top-left offsets along one axis for an analysis range
/// [lo, hi) of window centres.
std::vector<int> pda_offsets(int extent, int window, int stride, int lo, int hi);

/// Number of occlusion windows pda_attribution evaluates.
std::size_t pda_window_positions(const Shape& shape, const PdaParams& params,
                                 const std::optional<PixelRegion>& region = std::nullopt);

/// Occlusion difference f(x) - f(x with window filled), recorded at window
/// centres on the stride grid and bilinearly interpolated in between.
/// Pixels outside `region` are zero. One forward pass per window plus one
/// for the unoccluded image.
ImportanceMap pda_attribution(const PredictionModel& model, const Image& image, OutputSelector sel,
                              const PdaParams& params,
                              const std::optional<PixelRegion>& region = std::nullopt);

// ------------------------------------------------------------ dispatch

enum class Method { kExactShapley, kLime, kIntegratedGradients, kIgSegmented, kE2x, kPda };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);
bool is_segment_method(Method m);

struct SegmentationSpec {
  enum class Kind { kSlic, kGrid };
  Kind kind = Kind::kSlic;
  SlicParams slic;
  int rows = 2;
  int cols = 4;

  Segmentation make(const Image& image) const;
};

/// One estimator plus everything it needs, as configured from the CLI or an
/// evaluation run. Fields irrelevant to `method` are ignored.
struct MethodConfig {
  Method method = Method::kE2x;
  SegmentationSpec segmentation;
  int num_samples = 16;
  std::uint64_t seed = 0;
  double kernel_width = 0.25;
  double ridge_lambda = 1e-3;
  LimeKernel lime_kernel = LimeKernel::kExponential;
  LimeSampling lime_sampling = LimeSampling::kUniform;
  PdaParams pda;
  ReferenceInput reference = ReferenceInput::zero();
  int workers = 1;
};

/// Result of one estimator run. `pixels` is the one-channel per-pixel form
/// used for comparison and rendering; segment methods also carry their
/// vector and segmentation.
struct Explanation {
  Method method = Method::kE2x;
  std::optional<ImportanceVector> vector;
  std::optional<Segmentation> segmentation;
  ImportanceMap pixels;
};

Explanation explain(const PredictionModel& model, const Image& image, OutputSelector sel,
                    const MethodConfig& config,
                    const std::optional<PixelRegion>& pda_region = std::nullopt);

/// Receives non-fatal diagnostics (e.g. LIME run with K < M). Defaults to
/// stderr; pass an empty function to silence.
void set_warning_handler(std::function<void(std::string_view)> handler);
void warn(std::string_view message);

}  // namespace e2x
