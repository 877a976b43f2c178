// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "../test_models.hpp"
#include "cli.hpp"
#include "e2x/attribution.hpp"
#include "e2x/detection.hpp"
#include "e2x/evaluation.hpp"
#include "e2x/io.hpp"
#include "e2x/scene.hpp"

namespace {

using namespace e2x;
namespace fs = std::filesystem;

// Tolerances and bounds.
constexpr double kLocalAccuracyTol = 1e-6;
constexpr double kDummyTol = 1e-9;
constexpr double kSymmetryTol = 1e-6;
constexpr double kAxiomSeconds = 10.0;
constexpr double kKernelShapTol = 1e-5;
constexpr double kIgLinearTol = 1e-9;
constexpr double kIgCompletenessRel = 0.02;
constexpr double kE2xVsShapleyMin = 0.8;
constexpr double kE2xVsLimeMin = 0.5;
constexpr double kFidelitySeconds = 60.0;
constexpr double kCountRatioMin = 6.0;
constexpr int kMaxInversionsPerSegment = 1;

const ReferenceInput kZero = ReferenceInput::zero();

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << n << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

double sum(const std::vector<double>& v) { return e2x::testing::sum_of(v); }

TinyCNN small_cnn() {
  TinyCnnConfig c;
  c.input = Shape{8, 8, 3};
  return TinyCNN(c);
}

// ------------------------------------------------------------------ 1

void shapley_axioms() {
  const auto t0 = Clock::now();
  const TinyCNN net = small_cnn();
  const Segmentation seg = grid_segment(8, 8, 2, 4);
  double worst_acc = 0, worst_dummy = 0, worst_sym = 0;
  int cases = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const LinearModel lin = e2x::testing::sine_linear(net.config().input, 0.3 * s);
    const PredictionModel& model = s % 2 ? static_cast<const PredictionModel&>(lin) : net;
    const OutputSelector sel{s % 2 ? 0 : s % 3};
    Image x = random_image(net.config().input, 900 + s);

    const auto v = exact_shapley(model, x, seg, sel, kZero);
    worst_acc = std::max(worst_acc, std::abs(v.phi0 + sum(v.phi) - model.output(x, sel)));

    const int dummy = static_cast<int>(s % 8);
    const e2x::testing::IgnoreSegmentModel ignoring(model, seg, dummy);
    worst_dummy =
        std::max(worst_dummy, std::abs(exact_shapley(ignoring, x, seg, sel, kZero).phi[dummy]));

    // Cells 1 (rows 0-3, cols 2-3) and 6 (rows 4-7, cols 4-5) given equal content.
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 2; ++c) {
        for (int ch = 0; ch < 3; ++ch) x.at(r + 4, c + 4, ch) = x.at(r, c + 2, ch);
      }
    }
    const e2x::testing::SwapSymmetricModel sym(model, 4, 2, 0, 2, 4, 4);
    const auto w = exact_shapley(sym, x, seg, sel, kZero);
    worst_sym = std::max(worst_sym, std::abs(w.phi[1] - w.phi[6]));
    ++cases;
  }
  const double secs = seconds_since(t0);
  report(1,
         cases >= 20 && worst_acc <= kLocalAccuracyTol && worst_dummy <= kDummyTol &&
             worst_sym <= kSymmetryTol && secs < kAxiomSeconds,
         std::to_string(cases) + " cases, M=8; worst local accuracy " + fmt(worst_acc) +
             ", dummy " + fmt(worst_dummy) + ", symmetry " + fmt(worst_sym) + "; " +
             fmt(secs, 3) + " s");
}

// ------------------------------------------------------------------ 2

void kernel_shap_equivalence() {
  const TinyCNN net = small_cnn();
  const Shape shape = net.config().input;
  const LinearModel lin = e2x::testing::sine_linear(shape);
  LimeParams p;
  p.kernel = LimeKernel::kShapley;
  p.sampling = LimeSampling::kEnumerate;
  p.ridge_lambda = 0.0;
  double worst = 0.0;
  int runs = 0;
  for (int m = 2; m <= 8; ++m) {
    const Image x = random_image(shape, 300 + m);
    const Segmentation seg = grid_segment(x, 1, m);
    for (const PredictionModel* model : {static_cast<const PredictionModel*>(&lin),
                                         static_cast<const PredictionModel*>(&net)}) {
      const OutputSelector sel{model == &lin ? 0u : static_cast<std::size_t>(m % 3)};
      const auto exact = exact_shapley(*model, x, seg, sel, kZero);
      const auto lime = lime_attribution(*model, x, seg, sel, p, kZero);
      worst = std::max(worst, std::abs(exact.phi0 - lime.phi0));
      for (int i = 0; i < m; ++i) worst = std::max(worst, std::abs(exact.phi[i] - lime.phi[i]));
      ++runs;
    }
  }
  report(2, worst <= kKernelShapTol,
         std::to_string(runs) + " runs (M=2..8, linear + CNN); worst |diff| " + fmt(worst));
}

// ------------------------------------------------------------------ 3

class Square final : public PredictionModel {
 public:
  std::size_t output_dim() const override { return 1; }
  OutputVector forward(const Image& x) const override {
    return {x.values()[0] * x.values()[0]};
  }
  bool has_gradient() const override { return true; }
  ValueAndGradient value_and_gradient(const Image& x, OutputSelector) const override {
    ValueAndGradient out{x.values()[0] * x.values()[0], ImportanceMap(x.shape())};
    out.gradient.values()[0] = 2.0 * x.values()[0];
    return out;
  }
};

void integrated_gradients_checks() {
  const Shape shape{6, 6, 3};
  const LinearModel lin = e2x::testing::sine_linear(shape, 0.4, -0.1);
  const Image x = random_image(shape, 5, 3.0);
  double linear_err = 0.0;
  for (int k : {1, 4, 32}) {
    IgParams p;
    p.num_steps = k;
    const ImportanceMap phi = integrated_gradients(lin, x, OutputSelector{0}, p);
    for (std::size_t i = 0; i < phi.size(); ++i) {
      linear_err = std::max(linear_err, std::abs(phi.values()[i] - lin.weights()[i] * x.values()[i]));
    }
  }

  Image two(Shape{1, 1, 1});
  two.values()[0] = 2.0;
  IgParams four;
  four.num_steps = 4;
  const double sq = integrated_gradients(Square{}, two, OutputSelector{0}, four).values()[0];

  TinyCnnConfig cfg;
  const TinyCNN net(cfg);
  IgParams p128;
  p128.num_steps = 128;
  double worst_rel = 0.0;
  int checked = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Image probe = e2x::testing::path_smooth_probe(net, 40 + s);
    for (std::size_t o = 0; o < net.output_dim(); ++o) {
      const double delta =
          net.output(probe, OutputSelector{o}) - net.output(Image(probe.shape()), OutputSelector{o});
      if (std::abs(delta) < 1e-6) continue;
      const ImportanceMap phi = integrated_gradients(net, probe, OutputSelector{o}, p128);
      double total = 0.0;
      for (double v : phi.values()) total += v;
      worst_rel = std::max(worst_rel, std::abs(total - delta) / std::abs(delta));
      ++checked;
    }
  }
  report(3, linear_err <= kIgLinearTol && sq == 5.0 && checked >= 20 &&
                worst_rel <= kIgCompletenessRel,
         "linear worst " + fmt(linear_err) + "; x^2 at 2, K=4 -> " + fmt(sq, 17) +
             "; completeness worst rel " + fmt(worst_rel) + " over " + std::to_string(checked) +
             " smooth probes at K=128");
}

// ------------------------------------------------------------- 4 and 5

struct DeskSet {
  ToyDetector detector{ToyDetectorConfig{}};
  std::vector<Scene> scenes;
  std::vector<EvalCase> cases;
};

// 10 detections: the top two on each of five synthetic scenes.
DeskSet desk_set() {
  DeskSet d;
  for (std::uint64_t s = 0; s < 5; ++s) d.scenes.push_back(make_scene(SceneParams{}, 1000 + s));
  for (std::size_t s = 0; s < d.scenes.size(); ++s) {
    const auto top = top_detections(d.detector, d.scenes[s].image, 2);
    for (std::size_t k = 0; k < top.size(); ++k) {
      d.cases.push_back(EvalCase{"scene" + std::to_string(s) + "#" + std::to_string(k),
                                 &d.scenes[s].image, top[k]});
    }
  }
  return d;
}

MethodConfig slic_method(Method m, int k, int segments) {
  MethodConfig c;
  c.method = m;
  c.num_samples = k;
  c.segmentation.slic.num_segments = segments;
  return c;
}

void fidelity_and_ordering(const DeskSet& d) {
  const auto t0 = Clock::now();

  // E2X against exact Shapley on the 2 x 4 grid.
  const Segmentation grid = grid_segment(48, 48, 2, 4);
  double rho_sum = 0.0;
  int rho_n = 0;
  for (const auto& c : d.cases) {
    const OutputSelector sel{*c.detection.output_index};
    E2xParams p;
    p.num_samples = 128;
    p.seed = 11;
    const auto e = e2x_attribution(d.detector, *c.image, grid, sel, p);
    const auto s = exact_shapley(d.detector, *c.image, grid, sel, kZero);
    if (const auto r = pearson(e.phi, s.phi)) {
      rho_sum += *r;
      ++rho_n;
    }
  }
  const double vs_shapley = rho_n ? rho_sum / rho_n : NAN;

  // LIME reference on 400 segments, candidates on 200.
  EvalConfig cfg;
  cfg.reference = slic_method(Method::kLime, 4000, 400);
  cfg.reference.seed = 1;
  cfg.candidates = {{"e2x-128", slic_method(Method::kE2x, 128, 200)},
                    {"e2x-8", slic_method(Method::kE2x, 8, 200)},
                    {"ig", slic_method(Method::kIntegratedGradients, 32, 200)},
                    {"ig-seg", slic_method(Method::kIgSegmented, 32, 200)}};
  cfg.cases = d.cases;
  cfg.seeds = {1, 2, 3, 4, 5};
  const EvalResult r = compare_to_reference(d.detector, cfg);
  const double secs = seconds_since(t0);

  auto mean = [&](std::size_t i) { return r.summary[i].mean_rho.value_or(NAN); };
  const double e128 = mean(0), e8 = mean(1), ig = mean(2), igseg = mean(3);

  report(4,
         rho_n == 10 && vs_shapley >= kE2xVsShapleyMin && e128 >= kE2xVsLimeMin &&
             secs < kFidelitySeconds,
         "E2X(K=128) vs exact Shapley on 2x4 grid: mean rho " + fmt(vs_shapley) + " over " +
             std::to_string(rho_n) + " detections; vs LIME reference (K=4000, 400 segments): " +
             "E[rho] " + fmt(e128) + "; " + fmt(secs, 3) + " s");
  report(5, igseg > ig && e128 >= e8,
         "E[rho] ig " + fmt(ig) + " < ig-seg " + fmt(igseg) + "; e2x K=8 " + fmt(e8) +
             " <= K=128 " + fmt(e128) + " (5 seeds)");
}

// ------------------------------------------------------------------ 6

void cost_accounting(const DeskSet& d) {
  const Image& x = d.scenes[0].image;
  const OutputSelector sel{*d.cases[0].detection.output_index};
  CountingModel counter(d.detector);
  const Segmentation slic = slic_segment(x, SlicParams{200});
  bool exact = true;
  std::string detail;

  E2xParams ep;
  ep.num_samples = 16;
  e2x_attribution(counter, x, slic, sel, ep);
  exact = exact && counter.forwards() == 16 && counter.backwards() == 16;
  const std::uint64_t e2x_evals = counter.forwards() + counter.backwards();
  detail += "E2X(16) " + std::to_string(counter.forwards()) + "F/" +
            std::to_string(counter.backwards()) + "B";

  counter.reset();
  LimeParams lp;
  lp.num_samples = 200;
  lime_attribution(counter, x, slic, sel, lp, kZero);
  exact = exact && counter.forwards() == 200 && counter.backwards() == 0;
  const std::uint64_t lime_evals = counter.forwards();
  detail += ", LIME(200) " + std::to_string(counter.forwards()) + "F";

  counter.reset();
  exact_shapley(counter, x, grid_segment(x, 2, 4), sel, kZero);
  exact = exact && counter.forwards() == 256 && counter.backwards() == 0;
  detail += ", Shapley(M=8) " + std::to_string(counter.forwards()) + "F";

  counter.reset();
  const PdaParams pp;
  const auto region = analysis_region(d.cases[0].detection.box, x.shape());
  pda_attribution(counter, x, sel, pp, region);
  const std::size_t positions = pda_window_positions(x.shape(), pp, region);
  exact = exact && counter.forwards() == positions + 1;
  detail += ", PDA " + std::to_string(counter.forwards()) + "F = " + std::to_string(positions) +
            " windows + 1 unoccluded";

  const double ratio = static_cast<double>(lime_evals) / static_cast<double>(e2x_evals);
  detail += "; LIME(K=M=200) / E2X(16) = " + fmt(ratio, 3) + "x";
  report(6, exact && ratio >= kCountRatioMin, detail);
}

// ------------------------------------------------------------------ 7

Detection det(double conf, Box box, std::size_t index, int cls = 1) {
  return Detection{box, cls, conf, index, "img"};
}

void detection_examples() {
  bool ok = true;
  std::string detail;
  const Box unit{0, 0, 10, 10};
  ok = ok && iou(unit, unit) == 1.0 && iou(unit, Box{20, 20, 30, 30}) == 0.0;
  const double third = iou(unit, Box{5, 0, 15, 10});
  ok = ok && std::abs(third - 1.0 / 3.0) < 1e-15;
  detail += "IoU example " + fmt(third, 10);

  // Boxes cut from the unit box so IoU equals height / 10.
  auto cut = [](double h) { return Box{0, 0, 10, h}; };
  const std::vector<GroundTruth> gts{{unit, 1, "img"}};
  {
    const auto c = classify_detections({det(0.8, cut(9), 0)}, gts, 0.5, 0.5);
    ok = ok && c.true_positives == std::vector<std::size_t>{0} && c.unmatched_gts.empty();
  }
  {
    const auto c = classify_detections({det(0.8, cut(2), 0)}, gts, 0.5, 0.5);
    ok = ok && c.false_positives == std::vector<std::size_t>{0} &&
         c.unmatched_gts == std::vector<std::size_t>{0};
  }
  {
    const auto c =
        classify_detections({det(0.7, cut(8), 1), det(0.9, cut(6), 0)}, gts, 0.5, 0.5);
    ok = ok && c.true_positives == std::vector<std::size_t>{1} &&
         c.false_positives == std::vector<std::size_t>{0};
  }
  {
    // The confident detection is missing, leaving a 0.48 one to recover.
    const std::vector<Detection> pool{det(0.48, cut(7), 3), det(0.2, cut(3), 4),
                                      det(0.005, cut(9), 5)};
    const auto c = classify_detections(pool, gts, 0.5, 0.5);
    const auto fn = find_fn_candidates(pool, gts, c.unmatched_gts);
    ok = ok && fn.size() == 1 && fn[0].detection == std::optional<std::size_t>(0) &&
         std::abs(fn[0].iou - 0.7) < 1e-12;
    detail += "; FN recovered at conf 0.48";
  }
  {
    const std::vector<Detection> pool{det(0.3, cut(6), 1), det(0.4, cut(6), 2)};
    const auto fn = find_fn_candidates(pool, gts, {0});
    ok = ok && fn[0].detection == std::optional<std::size_t>(1);
  }
  {
    const std::vector<Detection> pool{det(0.005, cut(9), 1), det(0.9, Box{50, 50, 60, 60}, 2)};
    const auto fn = find_fn_candidates(pool, gts, {0});
    ok = ok && fn.size() == 1 && !fn[0].detection.has_value();
    detail += "; unexplainable miss reported";
  }
  report(7, ok, detail);
}

// ------------------------------------------------------------------ 8

std::string explanation_csv(const Explanation& e) {
  return e.vector ? importance_vector_to_csv(*e.vector) : importance_map_to_csv(e.pixels);
}

bool cli_round_trip(std::string& detail) {
  const std::string fixtures = E2X_FIXTURE_DIR;
  const fs::path dir = fs::temp_directory_path() / "e2x_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ostringstream out, err;
  bool ok = true;
  for (const char* name : {"a", "b"}) {
    ok = ok && cli::run({"explain", "--model", fixtures + "/detector.e2xm", "--image",
                         fixtures + "/scene0.png", "--method", "e2x", "--k", "32", "--seed", "7",
                         "--out-dir", dir.string(), "--name", name},
                        out, err) == 0;
  }
  ok = ok && cli::run({"render", "--image", fixtures + "/scene0.png", "--attribution",
                       (dir / "a.csv").string(), "--segmentation",
                       (dir / "a_segments.csv").string(), "--out", (dir / "c.png").string()},
                      out, err) == 0;
  if (!ok) {
    detail += "; CLI failed: " + err.str();
    return false;
  }
  const std::string a = read_text_file((dir / "a.png").string());
  ok = a == read_text_file((dir / "b.png").string()) &&
       a == read_text_file((dir / "c.png").string()) &&
       read_text_file((dir / "a.csv").string()) == read_text_file((dir / "b.csv").string());
  fs::remove_all(dir);
  detail += ok ? "; explain twice + render give identical PNG bytes"
               : "; PNG bytes differ";
  return ok;
}

void determinism(const DeskSet& d) {
  const Image& x = *d.cases[0].image;
  const OutputSelector sel{*d.cases[0].detection.output_index};
  std::vector<MethodConfig> methods;
  methods.push_back(slic_method(Method::kE2x, 64, 200));
  methods.push_back(slic_method(Method::kLime, 300, 100));
  methods.push_back(slic_method(Method::kIntegratedGradients, 16, 200));
  methods.push_back(slic_method(Method::kIgSegmented, 16, 200));
  MethodConfig shapley;
  shapley.method = Method::kExactShapley;
  shapley.segmentation.kind = SegmentationSpec::Kind::kGrid;
  methods.push_back(shapley);
  MethodConfig pda;
  pda.method = Method::kPda;
  methods.push_back(pda);

  bool ok = true;
  std::string detail;
  for (MethodConfig m : methods) {
    m.seed = 19;
    m.workers = 1;
    const std::string base = explanation_csv(explain(d.detector, x, sel, m));
    bool same = base == explanation_csv(explain(d.detector, x, sel, m));
    for (int w : {3, 8}) {
      m.workers = w;
      same = same && base == explanation_csv(explain(d.detector, x, sel, m));
    }
    ok = ok && same;
    detail += std::string(detail.empty() ? "" : ", ") + std::string(method_name(m.method)) +
              (same ? " identical" : " DIFFERS");
  }
  detail += " across runs and workers 1/3/8";
  ok = cli_round_trip(detail) && ok;
  report(8, ok, detail);
}

// ------------------------------------------------------------------ 9

void variance_monotonicity(const DeskSet& d) {
  const Image& x = *d.cases[0].image;
  const OutputSelector sel{*d.cases[0].detection.output_index};
  const Segmentation seg = slic_segment(x, SlicParams{200});
  const int m = seg.num_segments();
  const std::vector<int> ks{8, 16, 32, 64, 128};
  std::vector<std::vector<double>> sd(ks.size(), std::vector<double>(m));
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    std::vector<std::vector<double>> runs;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      E2xParams p;
      p.num_samples = ks[ki];
      p.seed = seed;
      runs.push_back(e2x_attribution(d.detector, x, seg, sel, p).phi);
    }
    for (int i = 0; i < m; ++i) {
      double mean = 0.0;
      for (const auto& r : runs) mean += r[i];
      mean /= runs.size();
      double ss = 0.0;
      for (const auto& r : runs) ss += (r[i] - mean) * (r[i] - mean);
      sd[ki][i] = std::sqrt(ss / (runs.size() - 1));
    }
  }
  int worst = 0, total = 0;
  for (int i = 0; i < m; ++i) {
    int inversions = 0;
    for (std::size_t ki = 1; ki < ks.size(); ++ki) inversions += sd[ki][i] > sd[ki - 1][i];
    worst = std::max(worst, inversions);
    total += inversions;
  }
  double mean8 = 0.0, mean128 = 0.0;
  for (int i = 0; i < m; ++i) {
    mean8 += sd.front()[i] / m;
    mean128 += sd.back()[i] / m;
  }
  report(9, worst <= kMaxInversionsPerSegment,
         std::to_string(m) + " segments, 20 seeds, K=8..128: worst inversions per segment " +
             std::to_string(worst) + ", total " + std::to_string(total) + "; mean sd " +
             fmt(mean8) + " -> " + fmt(mean128));
}

}  // namespace

int main() {
  e2x::set_warning_handler([](std::string_view) {});
  shapley_axioms();
  kernel_shap_equivalence();
  integrated_gradients_checks();
  const DeskSet desk = desk_set();
  fidelity_and_ordering(desk);
  cost_accounting(desk);
  detection_examples();
  determinism(desk);
  variance_monotonicity(desk);
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed")
            << std::endl;
  return failures ? 1 : 0;
}
