#include <cmath>
#include <functional>
#include <limits>

#include <gtest/gtest.h>

#include "e2x/attribution.hpp"
#include "e2x/io.hpp"
#include "e2x/rng.hpp"
#include "e2x/scene.hpp"
#include "e2x/segmentation.hpp"
#include "e2x/types.hpp"

namespace e2x {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no e2x::Error thrown";
  return ErrorCode::kIoError;
}

TEST(Image, AllZerosIsValid) {
  Image img(Shape{2, 2, 3});
  EXPECT_NO_THROW(validate(img));
  EXPECT_EQ(img.size(), 12u);
}

TEST(Image, NanIsRejected) {
  Image img(Shape{2, 2, 3});
  img.at(1, 0, 2) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(code_of([&] { validate(img); }), ErrorCode::kNonFiniteValue);
}

TEST(Image, ChannelLastLayout) {
  Image img(Shape{2, 3, 2});
  img.at(1, 2, 1) = 5.0;
  EXPECT_EQ(img.values()[(1 * 3 + 2) * 2 + 1], 5.0);
}

TEST(Image, DataLengthMustMatchShape) {
  EXPECT_EQ(code_of([] { Image(Shape{2, 2, 1}, std::vector<double>(3)); }),
            ErrorCode::kShapeMismatch);
  EXPECT_EQ(code_of([] { Image(Shape{0, 2, 1}); }), ErrorCode::kShapeMismatch);
}

TEST(Segmentation, LabelGapIsRejected) {
  EXPECT_EQ(code_of([] { Segmentation::from_labels(1, 2, {0, 2}); }),
            ErrorCode::kInvalidSegmentation);
  EXPECT_EQ(code_of([] { Segmentation(1, 2, {0, 1}, 3); }), ErrorCode::kInvalidSegmentation);
  EXPECT_EQ(code_of([] { Segmentation(1, 2, {0, -1}, 2); }), ErrorCode::kInvalidSegmentation);
}

TEST(Segmentation, SizeMustMatchImage) {
  const Segmentation seg = grid_segment(4, 4, 2, 2);
  EXPECT_NO_THROW(validate(seg, Image(Shape{4, 4, 3})));
  EXPECT_EQ(code_of([&] { validate(seg, Image(Shape{4, 5, 3})); }), ErrorCode::kShapeMismatch);
}

TEST(SimplifiedInput, BitsAreBinaryAndSized) {
  EXPECT_NO_THROW(validate(SimplifiedInput{{0, 1, 1}}, 3));
  EXPECT_EQ(code_of([] { validate(SimplifiedInput{{0, 2, 1}}, 3); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { validate(SimplifiedInput::ones(2), 3); }), ErrorCode::kLengthMismatch);
}

TEST(WeightSample, EntriesSitOnTheGrid) {
  EXPECT_NO_THROW(validate(WeightSample{{0.0, 1.0 / 3.0, 1.0}}, 3, 4));
  EXPECT_EQ(code_of([] { validate(WeightSample{{0.0, 0.5, 1.0}}, 3, 4); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { validate(WeightSample{{0.0}}, 1, 1); }), ErrorCode::kInvalidArgument);
}

TEST(ImportanceVector, LengthAndFiniteness) {
  EXPECT_NO_THROW(validate(ImportanceVector{{1.0, 2.0}, 0.5}, 2));
  EXPECT_EQ(code_of([] { validate(ImportanceVector{{1.0}, 0.0}, 2); }),
            ErrorCode::kLengthMismatch);
  EXPECT_EQ(code_of([] {
              validate(ImportanceVector{{std::numeric_limits<double>::infinity(), 0.0}, 0.0}, 2);
            }),
            ErrorCode::kNonFiniteValue);
}

TEST(ReferenceInput, Resolve) {
  Image x(Shape{2, 2, 2}, {1, 10, 3, 10, 5, 20, 7, 20});
  const Image zero = ReferenceInput::zero().resolve(x);
  for (double v : zero.values()) EXPECT_EQ(v, 0.0);

  const Image mean = ReferenceInput::channel_mean().resolve(x);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      EXPECT_DOUBLE_EQ(mean.at(r, c, 0), 4.0);
      EXPECT_DOUBLE_EQ(mean.at(r, c, 1), 15.0);
    }
  }

  const auto ref = ReferenceInput::explicit_image(x);
  EXPECT_EQ(ref.resolve(x), x);
  EXPECT_EQ(code_of([&] { ref.resolve(Image(Shape{2, 2, 3})); }), ErrorCode::kShapeMismatch);
}

// Averaging n copies of a value can be off in the last bits, never more.
TEST(RoundTrip, BroadcastThenAverageRecoversTheVector) {
  const Scene scene = make_scene(SceneParams{}, 3);
  const Segmentation seg = slic_segment(scene.image, SlicParams{50, 10.0, 10, true});
  CounterRng rng(11, 0);
  ImportanceVector v;
  for (int i = 0; i < seg.num_segments(); ++i) v.phi.push_back(rng.uniform(-3.0, 3.0));
  const ImportanceVector back = segment_average(broadcast(v, seg), seg);
  ASSERT_EQ(back.phi.size(), v.phi.size());
  for (std::size_t i = 0; i < v.phi.size(); ++i) EXPECT_NEAR(back.phi[i], v.phi[i], 1e-13) << i;
}

// Reference vectors computed by an independent transcription of the
// generator in Python (arbitrary-precision integers, explicit mod 2^64).
TEST(CounterRng, MatchesReferenceSequence) {
  CounterRng a(0, 0);
  EXPECT_EQ(a.next(), 0x2d0f28c7e7e786b2ULL);
  EXPECT_EQ(a.next(), 0x75856f745165f252ULL);
  EXPECT_EQ(a.next(), 0x8674bbc2735955afULL);

  CounterRng b(42, 7);
  EXPECT_EQ(b.next(), 0xdae1f6a5be9503b4ULL);
  EXPECT_EQ(b.next(), 0x310b5d5dafa65ac0ULL);
  EXPECT_EQ(b.next(), 0xc94d6455935092bfULL);

  CounterRng u(0, 0);
  EXPECT_DOUBLE_EQ(u.uniform(), 0.17601256256594233);
  EXPECT_DOUBLE_EQ(u.uniform(), 0.45906731214326846);

  CounterRng d(42, 7);
  EXPECT_EQ(d.below(10), 8u);
  EXPECT_EQ(d.below(10), 1u);
  EXPECT_EQ(d.below(10), 7u);
}

TEST(CounterRng, StreamsAreIndependentOfDrawOrder) {
  CounterRng first(5, 3);
  for (int i = 0; i < 10; ++i) first.next();
  const auto tenth = first.next();
  CounterRng again(5, 3);
  for (int i = 0; i < 10; ++i) again.next();
  EXPECT_EQ(again.next(), tenth);
  EXPECT_NE(CounterRng(5, 4).next(), CounterRng(5, 3).next());
}

TEST(CounterRng, RangesHold) {
  CounterRng rng(1, 1);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(rng.below(7), 7u);
  }
}

TEST(Errors, ValidationClassification) {
  EXPECT_TRUE(is_validation_error(ErrorCode::kShapeMismatch));
  EXPECT_TRUE(is_validation_error(ErrorCode::kParseError));
  EXPECT_TRUE(is_validation_error(ErrorCode::kWindowTooLarge));
  EXPECT_FALSE(is_validation_error(ErrorCode::kSingularSystem));
  EXPECT_FALSE(is_validation_error(ErrorCode::kGradientUnavailable));
  EXPECT_FALSE(is_validation_error(ErrorCode::kNoDetections));
}

TEST(Csv, ImportanceVectorRoundTrip) {
  const ImportanceVector v{{0.125, -3.5e-7, 12345.678901}, 0.25};
  const std::string text = importance_vector_to_csv(v);
  EXPECT_EQ(text.substr(0, 12), "segment,phi\n");
  const ImportanceVector back = importance_vector_from_csv(text);
  EXPECT_EQ(back.phi0, 0.25);
  ASSERT_EQ(back.phi.size(), 3u);
  EXPECT_EQ(back.phi[0], 0.125);
  EXPECT_EQ(back.phi[1], -3.5e-7);
  EXPECT_EQ(format_sig9(back.phi[2]), "12345.6789");
  EXPECT_EQ(importance_vector_to_csv(back), text);
}

TEST(Csv, ImportanceMapRoundTrip) {
  ImportanceMap m(Shape{2, 3, 2});
  for (std::size_t i = 0; i < m.size(); ++i) m.values()[i] = 0.1 * static_cast<double>(i) - 0.4;
  const std::string text = importance_map_to_csv(m);
  const ImportanceMap back = importance_map_from_csv(text);
  EXPECT_EQ(back.shape(), (Shape{2, 3, 1}));
  EXPECT_NEAR(back.at(1, 2), m.at(1, 2, 0) + m.at(1, 2, 1), 1e-9);
  EXPECT_EQ(importance_map_to_csv(back), text);
}

TEST(Csv, MalformedInputIsAParseError) {
  EXPECT_EQ(code_of([] { importance_vector_from_csv("segment,phi\n0,abc\nphi0,0\n"); }),
            ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { importance_map_from_csv("row,col\n"); }), ErrorCode::kParseError);
}

TEST(Preprocessing, DisplayRoundTrip) {
  RgbaImage rgba(3, 2);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 2; ++c) rgba.set(r, c, 40 * r, 100 + c, 255, 255);
  }
  const Preprocessing pre;
  const Image x = pre.to_model(rgba);
  EXPECT_NEAR(x.at(0, 0, 0), -0.5, 1e-15);
  EXPECT_EQ(pre.to_display(x), rgba);
}

}  // namespace
}  // namespace e2x
