#include "selftest.hpp"

#include <cmath>
#include <functional>
#include <ostream>

#include "e2x/attribution.hpp"
#include "e2x/model.hpp"
#include "e2x/scene.hpp"

namespace e2x::cli {
namespace {

struct Check {
  std::string name;
  std::function<double()> measure;  // returns the error
  double tolerance;
};

// A probe whose conv pre-activations all sit away from the ReLU kink, so
// central differences are meaningful.
Image smooth_probe(const TinyCNN& net, const Shape& shape) {
  for (std::uint64_t seed = 1;; ++seed) {
    Image img = random_image(shape, seed);
    double closest = INFINITY;
    for (double v : net.preactivations(img)) closest = std::min(closest, std::abs(v));
    if (closest > 1e-3) return img;
  }
}

LinearModel probe_linear(const Shape& shape) {
  std::vector<double> w(shape.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sin(1.0 + 0.7 * static_cast<double>(i));
  return LinearModel(shape, std::move(w), 0.25);
}

double shapley_local_accuracy() {
  const Shape shape{6, 6, 3};
  TinyCNN net(TinyCnnConfig{shape, 3, 3, 11});
  const Image x = random_image(shape, 5);
  const Segmentation seg = grid_segment(x, 2, 3);
  const auto v = exact_shapley(net, x, seg, OutputSelector{1}, ReferenceInput::zero());
  double sum = v.phi0;
  for (double p : v.phi) sum += p;
  return std::abs(sum - net.output(x, OutputSelector{1}));
}

double shapley_dummy() {
  const Shape shape{4, 4, 1};
  const LinearModel base = probe_linear(shape);
  std::vector<double> w(base.weights().begin(), base.weights().end());
  // Zero the weights of the top-left 2x2 cell, which makes it a dummy player.
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) w[r * 4 + c] = 0.0;
  }
  const LinearModel model(shape, w, 0.25);
  const Image x = random_image(shape, 9);
  const auto v = exact_shapley(model, x, grid_segment(x, 2, 2), OutputSelector{0},
                               ReferenceInput::zero());
  return std::abs(v.phi[0]);
}

double shapley_symmetry() {
  // Two segments with identical contents under a model that only sees their
  // sum are interchangeable.
  const Shape shape{2, 4, 1};
  std::vector<double> w(8, 0.5);
  const LinearModel model(shape, w, 0.0);
  Image x(shape);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 4; ++c) x.at(r, c, 0) = 0.1 * (c % 2 + r);
  }
  const auto v = exact_shapley(model, x, grid_segment(x, 1, 2), OutputSelector{0},
                               ReferenceInput::zero());
  return std::abs(v.phi[0] - v.phi[1]);
}

double kernel_shap_gap() {
  const Shape shape{6, 6, 3};
  TinyCNN net(TinyCnnConfig{shape, 3, 3, 13});
  const Image x = random_image(shape, 21);
  const Segmentation seg = grid_segment(x, 2, 2);
  const auto exact = exact_shapley(net, x, seg, OutputSelector{0}, ReferenceInput::zero());
  LimeParams p;
  p.kernel = LimeKernel::kShapley;
  p.sampling = LimeSampling::kEnumerate;
  p.ridge_lambda = 0.0;
  const auto lime = lime_attribution(net, x, seg, OutputSelector{0}, p, ReferenceInput::zero());
  double gap = std::abs(exact.phi0 - lime.phi0);
  for (std::size_t i = 0; i < exact.phi.size(); ++i) {
    gap = std::max(gap, std::abs(exact.phi[i] - lime.phi[i]));
  }
  return gap;
}

}  // namespace

bool run_selftest(std::ostream& out, const std::string& model_path) {
  std::vector<Check> checks{
      {"gradient check LinearModel",
       [] {
         const Shape s{3, 3, 2};
         return check_gradient(probe_linear(s), random_image(s, 3), OutputSelector{0}, 1e-6);
       },
       1e-6},
      {"gradient check TinyCNN",
       [] {
         const TinyCNN net(TinyCnnConfig{{8, 8, 3}, 4, 3, 20180907});
         return check_gradient(net, smooth_probe(net, {8, 8, 3}), OutputSelector{2}, 1e-6);
       },
       1e-5},
      {"gradient check ToyDetector",
       [] {
         ToyDetectorConfig cfg;
         cfg.input = {16, 16, 3};
         cfg.grid = 2;
         const ToyDetector det(cfg);
         return check_gradient(det, make_scene({16, 16, 3, 1, 3, 0.05}, 4).image,
                               OutputSelector{det.output_index(3, 1)}, 1e-6);
       },
       1e-4},
      {"shapley local accuracy", shapley_local_accuracy, 1e-6},
      {"shapley dummy", shapley_dummy, 1e-9},
      {"shapley symmetry", shapley_symmetry, 1e-6},
      {"kernel shap equals exact shapley", kernel_shap_gap, 1e-5},
  };
  if (!model_path.empty()) {
    checks.push_back({"gradient check " + model_path,
                      [model_path] {
                        const auto model = load_model(model_path);
                        Shape s;
                        if (auto* d = dynamic_cast<const ToyDetector*>(model.get())) {
                          s = d->config().input;
                        } else if (auto* t = dynamic_cast<const TinyCNN*>(model.get())) {
                          s = t->config().input;
                        } else if (auto* l = dynamic_cast<const LinearModel*>(model.get())) {
                          s = l->input_shape();
                        }
                        SceneParams sp;
                        sp.height = s.height;
                        sp.width = s.width;
                        sp.channels = s.channels;
                        return check_gradient(*model, make_scene(sp, 1).image, OutputSelector{0},
                                              1e-6);
                      },
                      1e-4});
  }
  bool all = true;
  for (const auto& c : checks) {
    double err = 0.0;
    bool pass = false;
    std::string note;
    try {
      err = c.measure();
      pass = err <= c.tolerance;
    } catch (const std::exception& e) {
      note = std::string(" (") + e.what() + ")";
    }
    all = all && pass;
    out << (pass ? "PASS " : "FAIL ") << c.name << ": error " << err << " <= " << c.tolerance
        << note << "\n";
  }
  return all;
}

}  // namespace e2x::cli
