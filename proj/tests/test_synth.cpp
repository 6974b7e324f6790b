#include <gtest/gtest.h>

#include <algorithm>

#include "faceflow/intensity.hpp"
#include "faceflow/synth.hpp"

namespace faceflow {
namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected faceflow::Error";
  return ErrorKind::Io;
}

TEST(MakeTexture, DeterministicAndBounded) {
  const auto a = make_texture(64, 48, 42);
  const auto b = make_texture(64, 48, 42);
  EXPECT_EQ(a, b);
  const auto [lo, hi] = std::minmax_element(a.pixels().begin(), a.pixels().end());
  EXPECT_GE(*lo, 0.1);
  EXPECT_LE(*hi, 0.9);
  EXPECT_NEAR(*lo, 0.1, 1e-12);
  EXPECT_NEAR(*hi, 0.9, 1e-12);
}

TEST(MakeTexture, SeedsDiffer) {
  EXPECT_NE(make_texture(32, 32, 1), make_texture(32, 32, 2));
}

TEST(MakeTexture, TooSmall) {
  EXPECT_EQ(kind_of([] { make_texture(15, 64, 1); }), ErrorKind::TooSmall);
}

TEST(TranslateSequence, ZeroShiftCopiesBase) {
  const auto base = make_texture(32, 32, 3);
  const auto r = translate_sequence(base, 0, 0, 4);
  ASSERT_EQ(r.sequence.size(), 4u);
  for (const auto& f : r.sequence.frames) EXPECT_EQ(f, base);
}

TEST(TranslateSequence, IntegerShiftIsExactCopy) {
  const auto base = make_texture(32, 32, 4);
  const auto r = translate_sequence(base, 1, 0, 2);
  for (int y = 0; y < 32; ++y)
    for (int x = 1; x < 32; ++x) EXPECT_EQ(r.sequence.frames[1](x, y), base(x - 1, y));
  EXPECT_DOUBLE_EQ(r.truth.global[1].dx, 1.0);
  EXPECT_DOUBLE_EQ(r.truth.global[1].dy, 0.0);
}

TEST(TranslateSequence, HalfPixelAveragesNeighbours) {
  const auto base = make_texture(32, 32, 5);
  const auto r = translate_sequence(base, 0.5, 0, 2);
  for (int y = 0; y < 32; ++y)
    for (int x = 1; x < 32; ++x) EXPECT_NEAR(r.sequence.frames[1](x, y), 0.5 * (base(x - 1, y) + base(x, y)), 1e-15);
}

TEST(TranslateSequence, Errors) {
  const auto base = make_texture(32, 32, 6);
  EXPECT_EQ(kind_of([&] { translate_sequence(base, 4, 0, 2); }), ErrorKind::ExcessiveShift);
  EXPECT_EQ(kind_of([&] { translate_sequence(base, 0.1, 0, 1); }), ErrorKind::InvalidParams);
}

TEST(MotionProfile, PiecewiseLinear) {
  const auto p = MotionProfile::triangle(10, 20, 40);
  EXPECT_EQ(p.at(0), 0.0);
  EXPECT_EQ(p.at(10), 0.0);
  EXPECT_DOUBLE_EQ(p.at(15), 0.5);
  EXPECT_EQ(p.at(20), 1.0);
  EXPECT_DOUBLE_EQ(p.at(30), 0.5);
  EXPECT_EQ(p.at(40), 0.0);
  const MotionProfile hold{8, 12, 88, 93};
  EXPECT_EQ(hold.at(50), 1.0);
  EXPECT_DOUBLE_EQ(hold.at(91), 0.4);
}

TEST(SynthExpression, NoActiveRegionsGivesConstantSequence) {
  const auto g = make_grid(96, 96);
  const auto r = synth_expression(g, default_region_map(), {}, 5, 7);
  for (const auto& f : r.sequence.frames) EXPECT_EQ(f, r.sequence.frames.front());
}

TEST(SynthExpression, MotionConfinedToActiveMask) {
  const auto g = make_grid(160, 120);
  const auto m = default_region_map();
  const int n = 20;
  const auto r = synth_expression(g, m, {{"mouth", 2.0, MotionProfile::triangle(2, n / 2, n - 2)}}, n, 9);
  const auto mouth = region_mask(g, m, "mouth");
  for (int t = 0; t < n; ++t)
    for (int y = 0; y < 120; ++y)
      for (int x = 0; x < 160; ++x) {
        const auto d = r.truth.at(static_cast<std::size_t>(t), x, y);
        if (!mouth(x, y)) {
          ASSERT_EQ(d.dx, 0.0);
          ASSERT_EQ(d.dy, 0.0);
        }
      }
  // Full amplitude deep inside the mouth cells at the apex.
  const auto [x0, x1] = g.col_range(1);
  const auto [y0, y1] = g.row_range(4);
  EXPECT_DOUBLE_EQ(r.truth.at(n / 2, (x0 + x1) / 2, (y0 + y1) / 2).dy, 2.0);
  // Frames only change inside the mask.
  for (int y = 0; y < 120; ++y)
    for (int x = 0; x < 160; ++x)
      if (!mouth(x, y)) {
        ASSERT_EQ(r.sequence.frames[n / 2](x, y), r.sequence.frames[0](x, y));
      }
}

TEST(SynthExpression, FeatherRampsAtMaskEdge) {
  Mask mask(30, 30, 0);
  for (int y = 5; y < 25; ++y)
    for (int x = 5; x < 25; ++x) mask(x, y) = 1;
  const auto w = feathered_weight(mask);
  EXPECT_EQ(w(4, 15), 0.0);
  EXPECT_EQ(w(5, 15), 0.0);  // edge pixel
  EXPECT_GT(w(6, 15), 0.0);
  EXPECT_LT(w(6, 15), w(7, 15));
  EXPECT_EQ(w(9, 15), 1.0);
  EXPECT_EQ(w(15, 15), 1.0);
}

TEST(SynthExpression, Errors) {
  const auto g = make_grid(160, 120);  // cells 40x20 -> amplitude limit 5
  const auto m = default_region_map();
  EXPECT_EQ(kind_of([&] { synth_expression(g, m, {{"mouth", 5.0, MotionProfile::triangle(1, 2, 3)}}, 5, 1); }),
            ErrorKind::AmplitudeTooLarge);
  EXPECT_EQ(kind_of([&] { synth_expression(g, m, {{"nose", 1.0, MotionProfile::triangle(1, 2, 3)}}, 5, 1); }),
            ErrorKind::UnknownRegion);
  EXPECT_EQ(kind_of([&] { synth_expression(g, m, {{"mouth", 1.0, MotionProfile{3, 2, 2, 4}}}, 5, 1); }),
            ErrorKind::InvalidParams);
}

TEST(SynthExpression, Deterministic) {
  const auto g = make_grid(96, 72);
  const std::vector<ActiveRegion> active{{"cheeks", 1.5, MotionProfile::triangle(1, 3, 5)}};
  const auto a = synth_expression(g, default_region_map(), active, 6, 77);
  const auto b = synth_expression(g, default_region_map(), active, 6, 77);
  for (std::size_t i = 0; i < a.sequence.size(); ++i) EXPECT_EQ(a.sequence.frames[i], b.sequence.frames[i]);
}

TEST(SynthOracle, FlowRecoversTranslationGroundTruth) {
  struct Case {
    double shift;
    int levels;
  };
  for (const Case c : {Case{0.5, 1}, Case{1.0, 1}, Case{4.0, 3}}) {
    const auto r = translate_sequence(make_texture(192, 192, 55), c.shift, 0.0, 2);
    FlowParams p;
    p.pyramid_levels = c.levels;
    const auto f = pyramidal_lk(r.sequence.frames[0], r.sequence.frames[1], p);
    double err = 0;
    int n = 0;
    for (int y = 20; y < 172; ++y)
      for (int x = 20; x < 172; ++x)
        if (f.valid(x, y)) {
          err += std::abs(f.u(x, y) - r.truth.global[1].dx) + std::abs(f.v(x, y) - r.truth.global[1].dy);
          ++n;
        }
    EXPECT_LE(err / n, 0.15) << "shift " << c.shift;
  }
}

}  // namespace
}  // namespace faceflow
