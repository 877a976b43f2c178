#include "e2x/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "e2x/rng.hpp"

namespace e2x {

std::vector<OutputVector> PredictionModel::forward_batch(std::span<const Image> batch) const {
  std::vector<OutputVector> out;
  out.reserve(batch.size());
  for (const Image& image : batch) out.push_back(forward(image));
  return out;
}

ValueAndGradient PredictionModel::value_and_gradient(const Image&, OutputSelector) const {
  throw Error(ErrorCode::kGradientUnavailable,
              "model exposes no gradient; use a perturbation method");
}

double PredictionModel::output(const Image& image, OutputSelector sel) const {
  check_selector(sel);
  return forward(image)[sel.index];
}

void PredictionModel::check_selector(OutputSelector sel) const {
  if (sel.index >= output_dim()) {
    throw Error(ErrorCode::kInvalidArgument,
                "output index " + std::to_string(sel.index) + " >= output_dim " +
                    std::to_string(output_dim()));
  }
}

OutputVector CountingModel::forward(const Image& image) const {
  forwards_.fetch_add(1);
  return inner_.forward(image);
}

std::vector<OutputVector> CountingModel::forward_batch(std::span<const Image> batch) const {
  forwards_.fetch_add(batch.size());
  return inner_.forward_batch(batch);
}

ValueAndGradient CountingModel::value_and_gradient(const Image& image,
                                                   OutputSelector sel) const {
  auto result = inner_.value_and_gradient(image, sel);
  forwards_.fetch_add(1);
  backwards_.fetch_add(1);
  return result;
}

double check_gradient(const PredictionModel& model, const Image& image,
                      OutputSelector sel, double eps, std::uint64_t seed) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eps must be > 0");
  if (!model.has_gradient()) {
    throw Error(ErrorCode::kGradientUnavailable, "model exposes no gradient");
  }
  const ImportanceMap analytic = model.gradient(image, sel);
  constexpr std::size_t kMaxProbes = 256;
  std::vector<std::size_t> coords;
  if (image.size() <= kMaxProbes) {
    for (std::size_t i = 0; i < image.size(); ++i) coords.push_back(i);
  } else {
    CounterRng rng(seed, 0);
    for (std::size_t i = 0; i < kMaxProbes; ++i) coords.push_back(rng.below(image.size()));
  }
  double worst = 0.0;
  Image probe = image;
  for (std::size_t i : coords) {
    const double x = image.values()[i];
    probe.values()[i] = x + eps;
    const double up = model.forward(probe)[sel.index];
    probe.values()[i] = x - eps;
    const double down = model.forward(probe)[sel.index];
    probe.values()[i] = x;
    const double central = (up - down) / (2.0 * eps);
    const double err = std::abs(analytic.values()[i] - central) / (std::abs(central) + 1e-12);
    worst = std::max(worst, err);
  }
  return worst;
}

// ---------------------------------------------------------------- LinearModel

LinearModel::LinearModel(Shape shape, std::vector<double> weights, double bias)
    : shape_(shape), weights_(std::move(weights)), bias_(bias) {
  if (weights_.size() != shape_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "weight length != H*W*C");
  }
}

OutputVector LinearModel::forward(const Image& image) const {
  if (image.shape() != shape_) throw Error(ErrorCode::kShapeMismatch, "linear model input shape");
  double sum = bias_;
  auto x = image.values();
  for (std::size_t i = 0; i < x.size(); ++i) sum += weights_[i] * x[i];
  return {sum};
}

ValueAndGradient LinearModel::value_and_gradient(const Image& image, OutputSelector sel) const {
  check_selector(sel);
  return {forward(image)[0], ImportanceMap(shape_, weights_)};
}

// ------------------------------------------------------------------ ConvLayer

std::vector<double> ConvLayer::preactivate(const Image& image) const {
  const int h = image.height(), w = image.width(), c = image.channels();
  const int half = kernel / 2;
  std::vector<double> out(static_cast<std::size_t>(h) * w * filters);
  auto x = image.values();
  for (int r = 0; r < h; ++r) {
    for (int col = 0; col < w; ++col) {
      double* dst = &out[(static_cast<std::size_t>(r) * w + col) * filters];
      for (int f = 0; f < filters; ++f) dst[f] = bias[f];
      for (int ky = 0; ky < kernel; ++ky) {
        const int rr = r + ky - half;
        if (rr < 0 || rr >= h) continue;
        for (int kx = 0; kx < kernel; ++kx) {
          const int cc = col + kx - half;
          if (cc < 0 || cc >= w) continue;
          const double* src = &x[(static_cast<std::size_t>(rr) * w + cc) * c];
          for (int f = 0; f < filters; ++f) {
            const double* k = &weights[((static_cast<std::size_t>(f) * kernel + ky) * kernel + kx) * c];
            double acc = 0.0;
            for (int ch = 0; ch < c; ++ch) acc += k[ch] * src[ch];
            dst[f] += acc;
          }
        }
      }
    }
  }
  return out;
}

void ConvLayer::backward(const Shape& input, std::span<const double> grad_pre,
                         std::span<double> grad_input) const {
  const int h = input.height, w = input.width, c = input.channels;
  const int half = kernel / 2;
  for (int r = 0; r < h; ++r) {
    for (int col = 0; col < w; ++col) {
      const double* g = &grad_pre[(static_cast<std::size_t>(r) * w + col) * filters];
      bool any = false;
      for (int f = 0; f < filters; ++f) any |= (g[f] != 0.0);
      if (!any) continue;
      for (int ky = 0; ky < kernel; ++ky) {
        const int rr = r + ky - half;
        if (rr < 0 || rr >= h) continue;
        for (int kx = 0; kx < kernel; ++kx) {
          const int cc = col + kx - half;
          if (cc < 0 || cc >= w) continue;
          double* dst = &grad_input[(static_cast<std::size_t>(rr) * w + cc) * c];
          for (int f = 0; f < filters; ++f) {
            if (g[f] == 0.0) continue;
            const double* k = &weights[((static_cast<std::size_t>(f) * kernel + ky) * kernel + kx) * c];
            for (int ch = 0; ch < c; ++ch) dst[ch] += k[ch] * g[f];
          }
        }
      }
    }
  }
}

namespace {

// Parameters are rounded to f32 so that seeded construction and a round trip
// through the model file produce identical models.
double draw(CounterRng& rng, double scale) {
  return static_cast<double>(static_cast<float>(rng.uniform(-scale, scale)));
}

void init_conv(ConvLayer& conv, int in_channels, int filters, CounterRng& rng) {
  conv.in_channels = in_channels;
  conv.filters = filters;
  conv.kernel = 3;
  const int fan_in = 9 * in_channels;
  const double scale = std::sqrt(3.0 / fan_in);
  conv.weights.resize(static_cast<std::size_t>(filters) * 9 * in_channels);
  for (double& v : conv.weights) v = draw(rng, scale);
  conv.bias.resize(filters);
  for (double& v : conv.bias) v = draw(rng, 0.1);
}

void softmax_inplace(std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

// d p_s / d z_j = p_s (delta_sj - p_j)
std::vector<double> softmax_backward(const std::vector<double>& p, std::size_t s) {
  std::vector<double> dz(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) dz[j] = p[s] * ((j == s ? 1.0 : 0.0) - p[j]);
  return dz;
}

std::vector<double> relu(const std::vector<double>& pre) {
  std::vector<double> out(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) out[i] = pre[i] > 0.0 ? pre[i] : 0.0;
  return out;
}

class ParamReader {
 public:
  explicit ParamReader(std::span<const double> p) : p_(p) {}
  void read(std::vector<double>& dst) {
    if (pos_ + dst.size() > p_.size()) {
      throw Error(ErrorCode::kShapeMismatch, "parameter blob too short");
    }
    std::copy_n(p_.begin() + pos_, dst.size(), dst.begin());
    pos_ += dst.size();
  }
  void finish() const {
    if (pos_ != p_.size()) throw Error(ErrorCode::kShapeMismatch, "parameter blob too long");
  }

 private:
  std::span<const double> p_;
  std::size_t pos_ = 0;
};

}  // namespace

// -------------------------------------------------------------------- TinyCNN

TinyCNN::TinyCNN(const TinyCnnConfig& config) : config_(config) {
  if (config.input.height < 2 || config.input.width < 2 || config.classes < 2 ||
      config.filters < 1) {
    throw Error(ErrorCode::kInvalidArgument, "TinyCNN needs >= 2x2 input, >= 2 classes");
  }
  pooled_h_ = config.input.height / 2;
  pooled_w_ = config.input.width / 2;
  CounterRng rng(config.seed, 1);
  init_conv(conv_, config.input.channels, config.filters, rng);
  const std::size_t features = static_cast<std::size_t>(pooled_h_) * pooled_w_ * config.filters;
  const double scale = 2.0 * std::sqrt(3.0 / static_cast<double>(features));
  dense_w_.resize(features * config.classes);
  for (double& v : dense_w_) v = draw(rng, scale);
  dense_b_.resize(config.classes);
  for (double& v : dense_b_) v = draw(rng, 0.1);
}

TinyCNN::TinyCNN(const TinyCnnConfig& config, std::span<const double> parameters)
    : TinyCNN(config) {
  ParamReader reader(parameters);
  reader.read(conv_.weights);
  reader.read(conv_.bias);
  reader.read(dense_w_);
  reader.read(dense_b_);
  reader.finish();
}

std::vector<double> TinyCNN::parameters() const {
  std::vector<double> p;
  for (const auto* v : {&conv_.weights, &conv_.bias, &dense_w_, &dense_b_}) {
    p.insert(p.end(), v->begin(), v->end());
  }
  return p;
}

void TinyCNN::check_input(const Image& image) const {
  if (image.shape() != config_.input) throw Error(ErrorCode::kShapeMismatch, "TinyCNN input shape");
}

std::vector<double> TinyCNN::preactivations(const Image& image) const {
  check_input(image);
  return conv_.preactivate(image);
}

std::vector<double> TinyCNN::pooled(const std::vector<double>& act) const {
  const int w = config_.input.width, f = config_.filters;
  std::vector<double> out(static_cast<std::size_t>(pooled_h_) * pooled_w_ * f, 0.0);
  for (int pr = 0; pr < pooled_h_; ++pr) {
    for (int pc = 0; pc < pooled_w_; ++pc) {
      double* dst = &out[(static_cast<std::size_t>(pr) * pooled_w_ + pc) * f];
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const double* src = &act[(static_cast<std::size_t>(2 * pr + dy) * w + 2 * pc + dx) * f];
          for (int k = 0; k < f; ++k) dst[k] += 0.25 * src[k];
        }
      }
    }
  }
  return out;
}

OutputVector TinyCNN::forward(const Image& image) const {
  check_input(image);
  const auto feat = pooled(relu(conv_.preactivate(image)));
  std::vector<double> z(dense_b_);
  for (int c = 0; c < config_.classes; ++c) {
    const double* wrow = &dense_w_[static_cast<std::size_t>(c) * feat.size()];
    double acc = 0.0;
    for (std::size_t j = 0; j < feat.size(); ++j) acc += wrow[j] * feat[j];
    z[c] += acc;
  }
  softmax_inplace(z);
  return z;
}

ValueAndGradient TinyCNN::value_and_gradient(const Image& image, OutputSelector sel) const {
  check_selector(sel);
  check_input(image);
  const auto pre = conv_.preactivate(image);
  const auto feat = pooled(relu(pre));
  std::vector<double> p(dense_b_);
  for (int c = 0; c < config_.classes; ++c) {
    const double* wrow = &dense_w_[static_cast<std::size_t>(c) * feat.size()];
    double acc = 0.0;
    for (std::size_t j = 0; j < feat.size(); ++j) acc += wrow[j] * feat[j];
    p[c] += acc;
  }
  softmax_inplace(p);
  const auto dz = softmax_backward(p, sel.index);

  std::vector<double> dfeat(feat.size(), 0.0);
  for (int c = 0; c < config_.classes; ++c) {
    const double* wrow = &dense_w_[static_cast<std::size_t>(c) * feat.size()];
    for (std::size_t j = 0; j < feat.size(); ++j) dfeat[j] += dz[c] * wrow[j];
  }
  const int w = config_.input.width, f = config_.filters;
  std::vector<double> dpre(pre.size(), 0.0);
  for (int pr = 0; pr < pooled_h_; ++pr) {
    for (int pc = 0; pc < pooled_w_; ++pc) {
      const double* g = &dfeat[(static_cast<std::size_t>(pr) * pooled_w_ + pc) * f];
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const std::size_t base = (static_cast<std::size_t>(2 * pr + dy) * w + 2 * pc + dx) * f;
          for (int k = 0; k < f; ++k) {
            // ReLU subgradient at exactly 0 is 0.
            if (pre[base + k] > 0.0) dpre[base + k] = 0.25 * g[k];
          }
        }
      }
    }
  }
  ImportanceMap grad(image.shape());
  conv_.backward(image.shape(), dpre, grad.values());
  return {p[sel.index], std::move(grad)};
}

// ---------------------------------------------------------------- ToyDetector

ToyDetector::ToyDetector(const ToyDetectorConfig& config) : config_(config) {
  if (config.classes < 2 || config.grid < 1 || config.filters < 1 ||
      config.anchor_shapes.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "ToyDetector config");
  }
  CounterRng rng(config.seed, 2);
  init_conv(conv_, config.input.channels, config.filters, rng);
  const double scale = config.head_scale * std::sqrt(3.0 / config.filters);
  dense_w_.resize(static_cast<std::size_t>(config.classes) * 2 * config.filters);
  for (double& v : dense_w_) v = draw(rng, scale);
  dense_b_.resize(config.classes);
  for (double& v : dense_b_) v = draw(rng, 0.1);
  build_anchors();
}

ToyDetector::ToyDetector(const ToyDetectorConfig& config, std::span<const double> parameters)
    : ToyDetector(config) {
  ParamReader reader(parameters);
  reader.read(conv_.weights);
  reader.read(conv_.bias);
  reader.read(dense_w_);
  reader.read(dense_b_);
  reader.finish();
}

std::vector<double> ToyDetector::parameters() const {
  std::vector<double> p;
  for (const auto* v : {&conv_.weights, &conv_.bias, &dense_w_, &dense_b_}) {
    p.insert(p.end(), v->begin(), v->end());
  }
  return p;
}

void ToyDetector::build_anchors() {
  const double h = config_.input.height, w = config_.input.width;
  const double cell_w = w / config_.grid, cell_h = h / config_.grid;
  for (int i = 0; i < config_.grid; ++i) {
    for (int j = 0; j < config_.grid; ++j) {
      const double cy = (i + 0.5) * cell_h, cx = (j + 0.5) * cell_w;
      for (const auto& [sw, sh] : config_.anchor_shapes) {
        AnchorBox box{std::max(0.0, cx - 0.5 * sw * cell_w), std::max(0.0, cy - 0.5 * sh * cell_h),
                      std::min(w, cx + 0.5 * sw * cell_w), std::min(h, cy + 0.5 * sh * cell_h)};
        PixelRange range{static_cast<int>(std::floor(box.ymin)), static_cast<int>(std::ceil(box.ymax)),
                         static_cast<int>(std::floor(box.xmin)), static_cast<int>(std::ceil(box.xmax))};
        if (range.r1 <= range.r0 || range.c1 <= range.c0) {
          throw Error(ErrorCode::kInvalidArgument, "degenerate anchor");
        }
        // Context: the box doubled about its centre, clipped to the image.
        const double bw = box.xmax - box.xmin, bh = box.ymax - box.ymin;
        const double mx = 0.5 * (box.xmin + box.xmax), my = 0.5 * (box.ymin + box.ymax);
        PixelRange context{std::max(0, static_cast<int>(std::floor(my - bh))),
                           std::min(static_cast<int>(h), static_cast<int>(std::ceil(my + bh))),
                           std::max(0, static_cast<int>(std::floor(mx - bw))),
                           std::min(static_cast<int>(w), static_cast<int>(std::ceil(mx + bw)))};
        anchors_.push_back(box);
        ranges_.push_back(range);
        context_.push_back(context);
      }
    }
  }
}

void ToyDetector::check_input(const Image& image) const {
  if (image.shape() != config_.input) {
    throw Error(ErrorCode::kShapeMismatch, "ToyDetector input shape");
  }
}

namespace {

// Summed-area table of the activation raster: (H+1) x (W+1) x filters.
std::vector<double> integral(const std::vector<double>& act, int height, int width, int filters) {
  const std::size_t row = static_cast<std::size_t>(width + 1) * filters;
  std::vector<double> sat(static_cast<std::size_t>(height + 1) * row, 0.0);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const double* src = &act[(static_cast<std::size_t>(r) * width + c) * filters];
      double* dst = &sat[(r + 1) * row + (c + 1) * filters];
      const double* up = dst - row;
      const double* left = dst - filters;
      const double* diag = up - filters;
      for (int k = 0; k < filters; ++k) dst[k] = src[k] + up[k] + left[k] - diag[k];
    }
  }
  return sat;
}

// Mean over a half-open pixel range, per filter.
template <typename Range>
void mean_pool(const std::vector<double>& sat, int width, int filters, const Range& rg,
               double* out) {
  const std::size_t row = static_cast<std::size_t>(width + 1) * filters;
  const double inv = 1.0 / (static_cast<double>(rg.r1 - rg.r0) * (rg.c1 - rg.c0));
  for (int k = 0; k < filters; ++k) {
    out[k] = (sat[rg.r1 * row + rg.c1 * filters + k] - sat[rg.r0 * row + rg.c1 * filters + k] -
              sat[rg.r1 * row + rg.c0 * filters + k] + sat[rg.r0 * row + rg.c0 * filters + k]) *
             inv;
  }
}

}  // namespace

std::vector<double> ToyDetector::anchor_logits(const std::vector<double>& sat,
                                               std::size_t a) const {
  const int w = config_.input.width, f = config_.filters;
  std::vector<double> pooled(2 * f);
  mean_pool(sat, w, f, ranges_[a], pooled.data());
  mean_pool(sat, w, f, context_[a], pooled.data() + f);
  std::vector<double> z(dense_b_);
  for (int c = 0; c < config_.classes; ++c) {
    for (int k = 0; k < 2 * f; ++k) {
      z[c] += dense_w_[static_cast<std::size_t>(c) * 2 * f + k] * pooled[k];
    }
  }
  return z;
}

OutputVector ToyDetector::forward(const Image& image) const {
  check_input(image);
  const auto sat = integral(relu(conv_.preactivate(image)), config_.input.height,
                            config_.input.width, config_.filters);
  OutputVector out;
  out.reserve(output_dim());
  for (std::size_t a = 0; a < anchors_.size(); ++a) {
    auto z = anchor_logits(sat, a);
    softmax_inplace(z);
    out.insert(out.end(), z.begin(), z.end());
  }
  return out;
}

ValueAndGradient ToyDetector::value_and_gradient(const Image& image, OutputSelector sel) const {
  check_selector(sel);
  check_input(image);
  const std::size_t a = sel.index / config_.classes;
  const std::size_t s = sel.index % config_.classes;
  const auto pre = conv_.preactivate(image);
  auto p = anchor_logits(
      integral(relu(pre), config_.input.height, config_.input.width, config_.filters), a);
  softmax_inplace(p);
  const auto dz = softmax_backward(p, s);

  const int w = config_.input.width, f = config_.filters;
  std::vector<double> dpooled(2 * f, 0.0);
  for (int c = 0; c < config_.classes; ++c) {
    for (int k = 0; k < 2 * f; ++k) {
      dpooled[k] += dz[c] * dense_w_[static_cast<std::size_t>(c) * 2 * f + k];
    }
  }
  std::vector<double> dact(pre.size(), 0.0);
  int part = 0;
  for (const PixelRange* rg : {&ranges_[a], &context_[a]}) {
    const double inv = 1.0 / (static_cast<double>(rg->r1 - rg->r0) * (rg->c1 - rg->c0));
    for (int r = rg->r0; r < rg->r1; ++r) {
      for (int c = rg->c0; c < rg->c1; ++c) {
        const std::size_t base = (static_cast<std::size_t>(r) * w + c) * f;
        for (int k = 0; k < f; ++k) dact[base + k] += dpooled[part * f + k] * inv;
      }
    }
    ++part;
  }
  std::vector<double> dpre(pre.size(), 0.0);
  for (std::size_t i = 0; i < pre.size(); ++i) {
    if (pre[i] > 0.0) dpre[i] = dact[i];
  }
  ImportanceMap grad(image.shape());
  conv_.backward(image.shape(), dpre, grad.values());
  return {p[s], std::move(grad)};
}

}  // namespace e2x
