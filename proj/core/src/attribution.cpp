#include "e2x/attribution.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <iostream>
#include <mutex>

#include "e2x/parallel.hpp"
#include "e2x/rng.hpp"

namespace e2x {
namespace {

constexpr std::size_t kForwardBlock = 16;
constexpr std::size_t kGradientBlock = 8;

void check_seg(const Image& image, const Segmentation& seg) {
  validate(image);
  validate(seg, image);
}

// f(make(i))[sel] for i in [0, count), forward-batched in fixed blocks.
template <typename Make>
std::vector<double> evaluate_outputs(const PredictionModel& model, OutputSelector sel,
                                     std::size_t count, int workers, Make&& make) {
  if (sel.index >= model.output_dim()) {
    throw Error(ErrorCode::kInvalidArgument, "output index out of range");
  }
  std::vector<double> out(count);
  const std::size_t blocks = (count + kForwardBlock - 1) / kForwardBlock;
  parallel_for(blocks, workers, [&](std::size_t b) {
    const std::size_t lo = b * kForwardBlock, hi = std::min(count, lo + kForwardBlock);
    std::vector<Image> batch;
    batch.reserve(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) batch.push_back(make(i));
    const auto outputs = model.forward_batch(batch);
    for (std::size_t i = lo; i < hi; ++i) out[i] = outputs[i - lo][sel.index];
  });
  return out;
}

// sum_k gradient(make(k)) in sample order, blocked so the association of the
// floating-point sum is fixed regardless of worker count.
template <typename Make>
std::vector<double> sum_gradients(const PredictionModel& model, OutputSelector sel,
                                  const Shape& shape, int count, int workers, Make&& make) {
  if (!model.has_gradient()) {
    throw Error(ErrorCode::kGradientUnavailable, "estimator needs model gradients");
  }
  const std::size_t n = static_cast<std::size_t>(count);
  const std::size_t blocks = (n + kGradientBlock - 1) / kGradientBlock;
  std::vector<std::vector<double>> partial(blocks, std::vector<double>(shape.size(), 0.0));
  parallel_for(blocks, workers, [&](std::size_t b) {
    auto& acc = partial[b];
    const std::size_t lo = b * kGradientBlock, hi = std::min(n, lo + kGradientBlock);
    for (std::size_t k = lo; k < hi; ++k) {
      const Image point = make(static_cast<int>(k));
      const auto g = model.value_and_gradient(point, sel).gradient;
      if (g.shape() != shape) throw Error(ErrorCode::kShapeMismatch, "gradient shape");
      auto gv = g.values();
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += gv[i];
    }
  });
  std::vector<double> total(shape.size(), 0.0);
  for (const auto& acc : partial) {
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += acc[i];
  }
  return total;
}

// Weighted least squares with an optional ridge penalty on columns
// [first_penalized, cols). Solved by column-pivoted QR on the
// sqrt-weighted, ridge-augmented design.
Eigen::VectorXd weighted_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& weights, double lambda,
                               Eigen::Index first_penalized) {
  const Eigen::Index rows = x.rows(), cols = x.cols();
  const Eigen::Index penalized = lambda > 0.0 ? cols - first_penalized : 0;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows + penalized, cols);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rows + penalized);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double s = std::sqrt(weights[r]);
    a.row(r) = s * x.row(r);
    b[r] = s * y[r];
  }
  const double root_lambda = std::sqrt(lambda);
  for (Eigen::Index j = 0; j < penalized; ++j) a(rows + j, first_penalized + j) = root_lambda;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < cols) {
    throw Error(ErrorCode::kSingularSystem,
                "regression system is rank deficient (rank " + std::to_string(qr.rank()) +
                    " < " + std::to_string(cols) + ")");
  }
  return qr.solve(b);
}

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

std::function<void(std::string_view)>& warning_handler() {
  static std::function<void(std::string_view)> handler = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return handler;
}

std::mutex& warning_mutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

void set_warning_handler(std::function<void(std::string_view)> handler) {
  std::lock_guard<std::mutex> lock(warning_mutex());
  warning_handler() = std::move(handler);
}

void warn(std::string_view message) {
  std::lock_guard<std::mutex> lock(warning_mutex());
  if (warning_handler()) warning_handler()(message);
}

// ------------------------------------------------------------ mappings

Image mask_apply(const Image& image, const Segmentation& seg, const SimplifiedInput& bits,
                 const Image& reference) {
  validate(seg, image);
  validate(bits, seg.num_segments());
  if (reference.shape() != image.shape()) {
    throw Error(ErrorCode::kShapeMismatch, "reference shape differs from image");
  }
  Image out = reference;
  const int channels = image.channels();
  auto src = image.values();
  auto dst = out.values();
  auto labels = seg.labels();
  for (std::size_t p = 0; p < labels.size(); ++p) {
    if (bits.bits[labels[p]]) {
      for (int ch = 0; ch < channels; ++ch) dst[p * channels + ch] = src[p * channels + ch];
    }
  }
  return out;
}

Image mask_apply(const Image& image, const Segmentation& seg, const SimplifiedInput& bits,
                 const ReferenceInput& reference) {
  return mask_apply(image, seg, bits, reference.resolve(image));
}

Image weight_apply(const Image& image, const Segmentation& seg, const WeightSample& w) {
  validate(seg, image);
  if (w.w.size() != static_cast<std::size_t>(seg.num_segments())) {
    throw Error(ErrorCode::kLengthMismatch, "weight vector length != M");
  }
  Image out(image.shape());
  const int channels = image.channels();
  auto src = image.values();
  auto dst = out.values();
  auto labels = seg.labels();
  for (std::size_t p = 0; p < labels.size(); ++p) {
    const double wp = w.w[labels[p]];
    for (int ch = 0; ch < channels; ++ch) dst[p * channels + ch] = wp * src[p * channels + ch];
  }
  return out;
}

ImportanceVector segment_average(const ImportanceMap& map, const Segmentation& seg) {
  if (map.height() != seg.height() || map.width() != seg.width()) {
    throw Error(ErrorCode::kShapeMismatch, "map and segmentation differ in size");
  }
  const int m = seg.num_segments(), channels = map.channels();
  std::vector<double> sum(m, 0.0);
  std::vector<std::size_t> count(m, 0);
  auto v = map.values();
  auto labels = seg.labels();
  for (std::size_t p = 0; p < labels.size(); ++p) {
    double pixel = 0.0;
    for (int ch = 0; ch < channels; ++ch) pixel += v[p * channels + ch];
    sum[labels[p]] += pixel;
    ++count[labels[p]];
  }
  ImportanceVector out;
  out.phi.resize(m);
  for (int i = 0; i < m; ++i) out.phi[i] = sum[i] / static_cast<double>(count[i]);
  return out;
}

ImportanceMap broadcast(const ImportanceVector& v, const Segmentation& seg) {
  if (v.phi.size() != static_cast<std::size_t>(seg.num_segments())) {
    throw Error(ErrorCode::kLengthMismatch, "vector length != M");
  }
  ImportanceMap out(Shape{seg.height(), seg.width(), 1});
  auto dst = out.values();
  auto labels = seg.labels();
  for (std::size_t p = 0; p < labels.size(); ++p) dst[p] = v.phi[labels[p]];
  return out;
}

ImportanceMap collapse_channels(const ImportanceMap& map) {
  if (map.channels() == 1) return map;
  ImportanceMap out(Shape{map.height(), map.width(), 1});
  const int channels = map.channels();
  auto src = map.values();
  auto dst = out.values();
  for (std::size_t p = 0; p < dst.size(); ++p) {
    double s = 0.0;
    for (int ch = 0; ch < channels; ++ch) s += src[p * channels + ch];
    dst[p] = s;
  }
  return out;
}

// ---------------------------------------------------------- estimators

ImportanceVector exact_shapley(const PredictionModel& model, const Image& image,
                               const Segmentation& seg, OutputSelector sel,
                               const ReferenceInput& reference, int workers) {
  check_seg(image, seg);
  const int m = seg.num_segments();
  if (m > kMaxExactFeatures) {
    throw Error(ErrorCode::kTooManyFeatures,
                "exact Shapley needs M <= " + std::to_string(kMaxExactFeatures));
  }
  const Image ref = reference.resolve(image);
  const std::size_t coalitions = std::size_t{1} << m;
  const auto value = evaluate_outputs(model, sel, coalitions, workers, [&](std::size_t s) {
    SimplifiedInput bits = SimplifiedInput::zeros(m);
    for (int i = 0; i < m; ++i) bits.bits[i] = (s >> i) & 1u;
    return mask_apply(image, seg, bits, ref);
  });

  // weight(|S|) = |S|! (M - |S| - 1)! / M! = 1 / (M * C(M-1, |S|))
  std::vector<double> weight(m);
  for (int k = 0; k < m; ++k) weight[k] = 1.0 / (m * binomial(m - 1, k));

  ImportanceVector out;
  out.phi.assign(m, 0.0);
  out.phi0 = value[0];
  for (int i = 0; i < m; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double acc = 0.0;
    for (std::size_t s = 0; s < coalitions; ++s) {
      if (s & bit) continue;
      acc += weight[std::popcount(s)] * (value[s | bit] - value[s]);
    }
    out.phi[i] = acc;
  }
  return out;
}

ImportanceVector lime_attribution(const PredictionModel& model, const Image& image,
                                  const Segmentation& seg, OutputSelector sel,
                                  const LimeParams& params, const ReferenceInput& reference) {
  check_seg(image, seg);
  if (!(params.kernel_width > 0.0) || params.ridge_lambda < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "LIME needs kernel_width > 0, ridge_lambda >= 0");
  }
  const int m = seg.num_segments();
  const bool shapley = params.kernel == LimeKernel::kShapley;

  std::vector<std::vector<std::uint8_t>> samples;
  if (params.sampling == LimeSampling::kEnumerate) {
    if (m > kMaxExactFeatures) {
      throw Error(ErrorCode::kTooManyFeatures, "enumeration needs M <= 20");
    }
    const std::size_t n = std::size_t{1} << m;
    samples.resize(n, std::vector<std::uint8_t>(m));
    for (std::size_t s = 0; s < n; ++s) {
      for (int i = 0; i < m; ++i) samples[s][i] = (s >> i) & 1u;
    }
  } else {
    const int required = shapley ? 2 : 1;
    if (params.num_samples < required) {
      throw Error(ErrorCode::kInvalidArgument, "LIME needs at least " + std::to_string(required) + " samples");
    }
    if (params.num_samples < m) {
      warn("LIME with K=" + std::to_string(params.num_samples) + " < M=" + std::to_string(m) +
           "; relying on the ridge penalty");
    }
    samples.resize(params.num_samples, std::vector<std::uint8_t>(m, 1));
    if (shapley) std::fill(samples[1].begin(), samples[1].end(), 0);
    for (int k = required; k < params.num_samples; ++k) {
      CounterRng rng(params.seed, static_cast<std::uint64_t>(k));
      for (int i = 0; i < m; ++i) samples[k][i] = rng.bit() ? 1 : 0;
    }
  }

  const Image ref = reference.resolve(image);
  const auto y = evaluate_outputs(model, sel, samples.size(), params.workers, [&](std::size_t k) {
    return mask_apply(image, seg, SimplifiedInput{samples[k]}, ref);
  });
  const Eigen::Index rows = static_cast<Eigen::Index>(samples.size());

  ImportanceVector out;
  out.phi.assign(m, 0.0);
  if (!shapley) {
    Eigen::MatrixXd x(rows, m + 1);
    Eigen::VectorXd target(rows), w(rows);
    const double width2 = params.kernel_width * params.kernel_width;
    for (Eigen::Index k = 0; k < rows; ++k) {
      int zeros = 0;
      x(k, 0) = 1.0;
      for (int i = 0; i < m; ++i) {
        x(k, i + 1) = samples[k][i];
        zeros += samples[k][i] == 0;
      }
      const double d = static_cast<double>(zeros) / m;
      w[k] = std::exp(-d * d / width2);
      target[k] = y[k];
    }
    const auto beta = weighted_ridge(x, target, w, params.ridge_lambda, 1);
    out.phi0 = beta[0];
    for (int i = 0; i < m; ++i) out.phi[i] = beta[i + 1];
    return out;
  }

  // Kernel SHAP: phi0 = f(empty) and sum(phi) = f(full) - phi0 are imposed
  // exactly; the last coefficient is eliminated through the sum constraint.
  std::optional<double> f_empty, f_full;
  for (Eigen::Index k = 0; k < rows; ++k) {
    const int ones = static_cast<int>(std::count(samples[k].begin(), samples[k].end(), 1));
    if (ones == 0 && !f_empty) f_empty = y[k];
    if (ones == m && !f_full) f_full = y[k];
  }
  out.phi0 = *f_empty;
  const double total = *f_full - *f_empty;
  if (m == 1) {
    out.phi[0] = total;
    return out;
  }
  std::vector<Eigen::Index> interior;
  for (Eigen::Index k = 0; k < rows; ++k) {
    const int ones = static_cast<int>(std::count(samples[k].begin(), samples[k].end(), 1));
    if (ones > 0 && ones < m) interior.push_back(k);
  }
  const Eigen::Index n = static_cast<Eigen::Index>(interior.size());
  Eigen::MatrixXd x(n, m - 1);
  Eigen::VectorXd target(n), w(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& z = samples[interior[r]];
    const int ones = static_cast<int>(std::count(z.begin(), z.end(), 1));
    w[r] = (m - 1.0) / (binomial(m, ones) * ones * (m - ones));
    for (int i = 0; i < m - 1; ++i) x(r, i) = static_cast<double>(z[i]) - z[m - 1];
    target[r] = y[interior[r]] - out.phi0 - z[m - 1] * total;
  }
  if (n == 0) throw Error(ErrorCode::kSingularSystem, "no interior coalitions sampled");
  const auto beta = weighted_ridge(x, target, w, params.ridge_lambda, 0);
  double rest = 0.0;
  for (int i = 0; i < m - 1; ++i) {
    out.phi[i] = beta[i];
    rest += beta[i];
  }
  out.phi[m - 1] = total - rest;
  return out;
}

ImportanceMap integrated_gradients(const PredictionModel& model, const Image& image,
                                   OutputSelector sel, const IgParams& params) {
  validate(image);
  if (params.num_steps < 1) throw Error(ErrorCode::kInvalidArgument, "IG needs K >= 1");
  const Image ref = params.reference.resolve(image);
  const int steps = params.num_steps;
  auto x = image.values();
  auto base = ref.values();
  const auto total = sum_gradients(model, sel, image.shape(), steps, params.workers, [&](int k) {
    Image point(image.shape());
    auto p = point.values();
    const double t = static_cast<double>(k + 1);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = base[i] + t * (x[i] - base[i]) / steps;
    return point;
  });
  ImportanceMap out(image.shape());
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = (x[i] - base[i]) / steps * total[i];
  return out;
}

ImportanceVector ig_segmented(const PredictionModel& model, const Image& image,
                              const Segmentation& seg, OutputSelector sel, const IgParams& params) {
  check_seg(image, seg);
  return segment_average(integrated_gradients(model, image, sel, params), seg);
}

WeightSample e2x_weights(int num_segments, int num_samples, std::uint64_t seed, int k) {
  CounterRng rng(seed, static_cast<std::uint64_t>(k));
  WeightSample w;
  w.w.resize(num_segments);
  const double steps = num_samples - 1;
  for (double& v : w.w) v = static_cast<double>(rng.below(num_samples)) / steps;
  return w;
}

ImportanceVector e2x_attribution(const PredictionModel& model, const Image& image,
                                 const Segmentation& seg, OutputSelector sel,
                                 const E2xParams& params) {
  check_seg(image, seg);
  if (params.num_samples < 2) throw Error(ErrorCode::kInvalidArgument, "E2X needs K >= 2");
  if (!params.reference.is_zero()) {
    throw Error(ErrorCode::kInvalidArgument,
                "E2X assumes a zero (mean) reference; mean-subtract the input instead");
  }
  const int m = seg.num_segments(), k_total = params.num_samples;
  const auto total = sum_gradients(model, sel, image.shape(), k_total, params.workers, [&](int k) {
    return weight_apply(image, seg, e2x_weights(m, k_total, params.seed, k));
  });
  ImportanceMap per_value(image.shape());
  auto x = image.values();
  auto o = per_value.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * total[i] / k_total;
  return segment_average(per_value, seg);
}

std::vector<int> pda_offsets(int extent, int window, int stride, int lo, int hi) {
  const int half = window / 2;
  const int first = std::clamp(lo - half, 0, extent - window);
  const int last = std::clamp(hi - 1 - half, 0, extent - window);
  std::vector<int> out;
  for (int t = first; t <= last; t += stride) out.push_back(t);
  if (out.back() != last) out.push_back(last);
  return out;
}

namespace {

struct PdaGrid {
  std::vector<int> rows, cols;  // window top-left offsets
  PixelRegion region;
};

PdaGrid pda_grid(const Shape& shape, const PdaParams& params,
                 const std::optional<PixelRegion>& region) {
  if (params.window_height < 1 || params.window_width < 1 || params.stride < 1) {
    throw Error(ErrorCode::kInvalidArgument, "PDA needs window >= 1x1 and stride >= 1");
  }
  if (params.window_height > shape.height || params.window_width > shape.width) {
    throw Error(ErrorCode::kWindowTooLarge, "occlusion window larger than the image");
  }
  PixelRegion r = region.value_or(PixelRegion{0, 0, shape.height, shape.width});
  r.row0 = std::clamp(r.row0, 0, shape.height);
  r.row1 = std::clamp(r.row1, 0, shape.height);
  r.col0 = std::clamp(r.col0, 0, shape.width);
  r.col1 = std::clamp(r.col1, 0, shape.width);
  if (r.row1 <= r.row0 || r.col1 <= r.col0) {
    throw Error(ErrorCode::kInvalidArgument, "PDA region is empty inside the image");
  }
  return {pda_offsets(shape.height, params.window_height, params.stride, r.row0, r.row1),
          pda_offsets(shape.width, params.window_width, params.stride, r.col0, r.col1), r};
}

// Index i of the last grid centre <= v (clamped), and the fraction toward i+1.
std::pair<std::size_t, double> locate(const std::vector<int>& centres, int v) {
  if (v <= centres.front()) return {0, 0.0};
  if (v >= centres.back()) return {centres.size() - 1, 0.0};
  const auto it = std::upper_bound(centres.begin(), centres.end(), v);
  const std::size_t i = static_cast<std::size_t>(it - centres.begin()) - 1;
  return {i, static_cast<double>(v - centres[i]) / (centres[i + 1] - centres[i])};
}

}  // namespace

std::size_t pda_window_positions(const Shape& shape, const PdaParams& params,
                                 const std::optional<PixelRegion>& region) {
  const auto grid = pda_grid(shape, params, region);
  return grid.rows.size() * grid.cols.size();
}

ImportanceMap pda_attribution(const PredictionModel& model, const Image& image, OutputSelector sel,
                              const PdaParams& params, const std::optional<PixelRegion>& region) {
  validate(image);
  const auto grid = pda_grid(image.shape(), params, region);
  const int channels = image.channels();
  Image fill_source(image.shape());
  if (params.fill == PdaFill::kReference) {
    fill_source = params.reference.resolve(image);
  } else {
    fill_source = ReferenceInput::channel_mean().resolve(image);
  }
  const double baseline = model.output(image, sel);
  const std::size_t nr = grid.rows.size(), nc = grid.cols.size();
  const auto occluded = evaluate_outputs(model, sel, nr * nc, params.workers, [&](std::size_t i) {
    const int top = grid.rows[i / nc], left = grid.cols[i % nc];
    Image z = image;
    for (int r = top; r < top + params.window_height; ++r) {
      for (int c = left; c < left + params.window_width; ++c) {
        for (int ch = 0; ch < channels; ++ch) z.at(r, c, ch) = fill_source.at(r, c, ch);
      }
    }
    return z;
  });

  std::vector<int> centre_rows(nr), centre_cols(nc);
  for (std::size_t i = 0; i < nr; ++i) centre_rows[i] = grid.rows[i] + params.window_height / 2;
  for (std::size_t j = 0; j < nc; ++j) centre_cols[j] = grid.cols[j] + params.window_width / 2;
  auto diff = [&](std::size_t i, std::size_t j) { return baseline - occluded[i * nc + j]; };

  ImportanceMap out(Shape{image.height(), image.width(), 1});
  const auto& reg = grid.region;
  for (int r = reg.row0; r < reg.row1; ++r) {
    const auto [i, fy] = locate(centre_rows, r);
    const std::size_t i1 = std::min(i + 1, nr - 1);
    for (int c = reg.col0; c < reg.col1; ++c) {
      const auto [j, fx] = locate(centre_cols, c);
      const std::size_t j1 = std::min(j + 1, nc - 1);
      const double top = (1.0 - fx) * diff(i, j) + fx * diff(i, j1);
      const double bottom = (1.0 - fx) * diff(i1, j) + fx * diff(i1, j1);
      out.at(r, c) = (1.0 - fy) * top + fy * bottom;
    }
  }
  return out;
}

// ------------------------------------------------------------ dispatch

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kExactShapley: return "shapley";
    case Method::kLime: return "lime";
    case Method::kIntegratedGradients: return "ig";
    case Method::kIgSegmented: return "ig-seg";
    case Method::kE2x: return "e2x";
    case Method::kPda: return "pda";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::kExactShapley, Method::kLime, Method::kIntegratedGradients,
                   Method::kIgSegmented, Method::kE2x, Method::kPda}) {
    if (method_name(m) == name) return m;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown method '" + std::string(name) + "' (shapley|lime|ig|ig-seg|e2x|pda)");
}

bool is_segment_method(Method m) {
  return m != Method::kIntegratedGradients && m != Method::kPda;
}

Segmentation SegmentationSpec::make(const Image& image) const {
  return kind == Kind::kGrid ? grid_segment(image, rows, cols) : slic_segment(image, slic);
}

Explanation explain(const PredictionModel& model, const Image& image, OutputSelector sel,
                    const MethodConfig& config, const std::optional<PixelRegion>& pda_region) {
  Explanation out;
  out.method = config.method;
  if (is_segment_method(config.method)) {
    Segmentation seg = config.segmentation.make(image);
    ImportanceVector v;
    switch (config.method) {
      case Method::kExactShapley:
        v = exact_shapley(model, image, seg, sel, config.reference, config.workers);
        break;
      case Method::kLime: {
        LimeParams p;
        p.num_samples = config.num_samples;
        p.kernel_width = config.kernel_width;
        p.ridge_lambda = config.ridge_lambda;
        p.seed = config.seed;
        p.kernel = config.lime_kernel;
        p.sampling = config.lime_sampling;
        p.workers = config.workers;
        v = lime_attribution(model, image, seg, sel, p, config.reference);
        break;
      }
      case Method::kIgSegmented:
        v = ig_segmented(model, image, seg, sel, IgParams{config.num_samples, config.reference, config.workers});
        break;
      case Method::kE2x:
        v = e2x_attribution(model, image, seg, sel,
                            E2xParams{config.num_samples, config.seed, config.workers, config.reference});
        break;
      default:
        break;
    }
    out.pixels = broadcast(v, seg);
    out.vector = std::move(v);
    out.segmentation = std::move(seg);
    return out;
  }
  if (config.method == Method::kIntegratedGradients) {
    out.pixels = collapse_channels(integrated_gradients(
        model, image, sel, IgParams{config.num_samples, config.reference, config.workers}));
  } else {
    PdaParams p = config.pda;
    p.workers = config.workers;
    out.pixels = pda_attribution(model, image, sel, p, pda_region);
  }
  return out;
}

}  // namespace e2x
