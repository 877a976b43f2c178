#include <cmath>

#include <gtest/gtest.h>

#include "e2x/evaluation.hpp"
#include "e2x/rng.hpp"
#include "e2x/scene.hpp"
#include "json.hpp"
#include "test_models.hpp"

namespace e2x {
namespace {

using testing::error_code_of;

TEST(Pearson, Examples) {
  const std::vector<double> a{0.3, -1.2, 4.0, 2.5, 0.0};
  std::vector<double> neg;
  for (double v : a) neg.push_back(-v);
  EXPECT_EQ(pearson(a, a), 1.0);
  EXPECT_EQ(pearson(a, neg), -1.0);
  // sxy = 3, sxx = 2, syy = 14/3, so rho = sqrt(27/28).
  EXPECT_NEAR(*pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 4}),
              std::sqrt(27.0 / 28.0), 1e-15);
  EXPECT_NEAR(std::sqrt(27.0 / 28.0), 0.98198050606, 1e-11);
}

TEST(Pearson, UndefinedAndLengthErrors) {
  const std::vector<double> flat{2, 2, 2}, ramp{1, 2, 3};
  EXPECT_FALSE(pearson(flat, ramp).has_value());
  EXPECT_FALSE(pearson(ramp, flat).has_value());
  EXPECT_EQ(error_code_of([&] { pearson(ramp, std::vector<double>{1, 2}); }),
            ErrorCode::kLengthMismatch);
  EXPECT_EQ(error_code_of([] { pearson(std::vector<double>{1}, std::vector<double>{1}); }),
            ErrorCode::kLengthMismatch);
}

TEST(Pearson, ScaleAndShiftInvariance) {
  CounterRng rng(12, 0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(30), b(30);
    for (double& v : a) v = rng.uniform(-1, 1);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = 0.5 * a[i] + rng.uniform(-1, 1);
    const double alpha = rng.uniform(-5, 5), beta = rng.uniform(-10, 10);
    if (std::abs(alpha) < 1e-3) continue;
    std::vector<double> t(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) t[i] = alpha * b[i] + beta;
    const double base = *pearson(a, b);
    EXPECT_NEAR(*pearson(a, t), (alpha > 0 ? 1.0 : -1.0) * base, 1e-9);
    EXPECT_GE(base, -1.0);
    EXPECT_LE(base, 1.0);
  }
}

class Evaluation : public ::testing::Test {
 protected:
  void SetUp() override {
    for (std::uint64_t s = 0; s < 2; ++s) {
      scenes.push_back(make_scene(SceneParams{}, 100 + s, "scene" + std::to_string(s)));
    }
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      const auto top = top_detections(detector, scenes[s].image, 2);
      for (std::size_t k = 0; k < top.size(); ++k) {
        cases.push_back(EvalCase{"scene" + std::to_string(s) + "#" + std::to_string(k),
                                 &scenes[s].image, top[k]});
      }
    }
  }

  static MethodConfig e2x(int k, std::uint64_t seed = 0) {
    MethodConfig c;
    c.method = Method::kE2x;
    c.num_samples = k;
    c.seed = seed;
    c.segmentation.slic.num_segments = 50;
    return c;
  }

  ToyDetector detector{ToyDetectorConfig{}};
  std::vector<Scene> scenes;
  std::vector<EvalCase> cases;
};

TEST_F(Evaluation, SelfComparisonIsExactlyOne) {
  EvalConfig cfg;
  cfg.reference = e2x(16, 3);
  cfg.candidates = {{"same", e2x(16, 3)}};
  cfg.cases = cases;
  const EvalResult r = compare_to_reference(detector, cfg);
  ASSERT_EQ(r.entries.size(), cases.size());
  for (const auto& e : r.entries) {
    ASSERT_TRUE(e.rho.has_value());
    EXPECT_EQ(*e.rho, 1.0);
  }
  EXPECT_EQ(r.summary[0].mean_rho, 1.0);
  EXPECT_EQ(r.summary[0].defined, cases.size());
}

TEST_F(Evaluation, EntriesAreCandidateMajorAndWorkerIndependent) {
  EvalConfig cfg;
  cfg.reference = e2x(32, 1);
  cfg.candidates = {{"a", e2x(8)}, {"b", e2x(16)}};
  cfg.cases = cases;
  cfg.seeds = {4, 5, 6};
  const EvalResult serial = compare_to_reference(detector, cfg);
  cfg.workers = 4;
  const EvalResult parallel = compare_to_reference(detector, cfg);
  ASSERT_EQ(serial.entries.size(), 2 * cases.size() * 3);
  for (std::size_t i = 0; i < serial.entries.size(); ++i) {
    const auto& e = serial.entries[i];
    EXPECT_EQ(e.candidate, i < cases.size() * 3 ? "a" : "b");
    EXPECT_EQ(e.case_id, cases[(i / 3) % cases.size()].id);
    EXPECT_EQ(e.seed, 4 + i % 3);
    EXPECT_EQ(e.rho, parallel.entries[i].rho);
    EXPECT_EQ(e.forwards, e.candidate == "a" ? 8u : 16u);
    EXPECT_EQ(e.backwards, e.forwards);
  }
  EXPECT_EQ(serial.summary[1].mean_forwards, 16.0);
}

TEST_F(Evaluation, UndefinedCorrelationsAreCountedNotImputed) {
  const testing::ConstantModel flat(0.5, detector.output_dim());
  EvalConfig cfg;
  cfg.reference = e2x(8);
  cfg.candidates = {{"e2x", e2x(8)}};
  cfg.cases = cases;
  const EvalResult r = compare_to_reference(flat, cfg);
  EXPECT_EQ(r.summary[0].undefined, cases.size());
  EXPECT_EQ(r.summary[0].defined, 0u);
  EXPECT_FALSE(r.summary[0].mean_rho.has_value());
  const std::string csv = eval_entries_to_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "candidate,detection_id,rho,forwards,backwards,ms");
  EXPECT_NE(csv.find(",nan,"), std::string::npos);
  const auto json = nlohmann::json::parse(eval_summary_to_json(r));
  EXPECT_TRUE(json["candidates"][0]["mean_rho"].is_null());
}

TEST_F(Evaluation, EmptyInputs) {
  EvalConfig cfg;
  cfg.candidates = {{"e2x", e2x(8)}};
  EXPECT_EQ(error_code_of([&] { compare_to_reference(detector, cfg); }),
            ErrorCode::kNoDetections);
  cfg.cases = cases;
  cfg.candidates.clear();
  EXPECT_EQ(error_code_of([&] { compare_to_reference(detector, cfg); }),
            ErrorCode::kInvalidArgument);
}

TEST_F(Evaluation, SpeedReportCounts) {
  MethodConfig lime;
  lime.method = Method::kLime;
  lime.num_samples = 2000;
  EvalConfig cfg;
  cfg.candidates = {{"e2x", e2x(32)}, {"lime", lime}};
  cfg.cases = {cases[0], cases[1]};
  const auto speed = benchmark_speed(detector, cfg);
  ASSERT_EQ(speed.size(), 2u);
  EXPECT_EQ(speed[0].forwards_per_detection, 32.0);
  EXPECT_EQ(speed[0].backwards_per_detection, 32.0);
  EXPECT_EQ(speed[1].forwards_per_detection, 2000.0);
  EXPECT_EQ(speed[1].backwards_per_detection, 0.0);
  EXPECT_GT(speed[0].detections_per_second, 0.0);

  EvalConfig self;
  self.reference = e2x(32);
  self.candidates = cfg.candidates;
  self.cases = cfg.cases;
  const auto json = nlohmann::json::parse(
      eval_summary_to_json(compare_to_reference(detector, self), speed));
  EXPECT_EQ(json["candidates"][1]["name"], "lime");
  EXPECT_TRUE(json["candidates"][1].contains("detections_per_second"));
}

// At M = 200 segments, LIME at K = M against E2X at K = 16.
TEST_F(Evaluation, EvaluationCountRatio) {
  const Image& x = scenes[0].image;
  const Segmentation seg = slic_segment(x, SlicParams{200});
  const OutputSelector sel{*cases[0].detection.output_index};
  CountingModel counter(detector);
  E2xParams ep;
  ep.num_samples = 16;
  e2x_attribution(counter, x, seg, sel, ep);
  const auto e2x_evals = counter.forwards() + counter.backwards();
  EXPECT_EQ(e2x_evals, 32u);
  counter.reset();
  LimeParams lp;
  lp.num_samples = seg.num_segments();
  lime_attribution(counter, x, seg, sel, lp, ReferenceInput::zero());
  EXPECT_GE(counter.forwards(), 200u);
  EXPECT_GE(static_cast<double>(counter.forwards()) / static_cast<double>(e2x_evals), 6.0);
}

// Full-image stride-1 occlusion at the scale of the detector's input and at
// a 300 x 300 input.
TEST(PdaCost, PositionFormula) {
  PdaParams p;
  p.stride = 1;
  EXPECT_EQ(pda_window_positions(Shape{48, 48, 3}, p), 41u * 41u);
  EXPECT_EQ(pda_window_positions(Shape{300, 300, 3}, p), 293u * 293u);
  EXPECT_GT(pda_window_positions(Shape{300, 300, 3}, p), 2000u);

  const ToyDetector detector(ToyDetectorConfig{});
  CountingModel counter(detector);
  pda_attribution(counter, make_scene(SceneParams{}, 1).image, OutputSelector{4}, p);
  EXPECT_EQ(counter.forwards(), 41u * 41u + 1);
}

}  // namespace
}  // namespace e2x

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  e2x::set_warning_handler([](std::string_view) {});
  return RUN_ALL_TESTS();
}
