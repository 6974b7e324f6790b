#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "faceflow/flow.hpp"
#include "faceflow/synth.hpp"
#include "ls_oracle.hpp"
#include "test_util.hpp"

namespace faceflow {
namespace {

TEST(GaussianSmooth, ConstantImageUnchanged) {
  const Image img(13, 9, 0.37);
  for (double sigma : {0.5, 1.0, 2.5}) {
    const auto out = gaussian_smooth(img, sigma);
    for (double v : out.pixels()) EXPECT_NEAR(v, 0.37, 1e-15);
  }
}

TEST(GaussianSmooth, ZeroSigmaIsIdentity) {
  std::mt19937_64 rng(1);
  const auto img = testing::random_image(17, 11, rng);
  EXPECT_EQ(gaussian_smooth(img, 0.0), img);
}

TEST(GaussianSmooth, ImpulseMatchesSampledGaussian) {
  Image impulse(11, 11, 0.0);
  impulse(5, 5) = 1.0;
  const auto out = gaussian_smooth(impulse, 1.0);

  // Directly evaluated 2-D kernel on the radius-3 support, normalized.
  double norm = 0;
  for (int y = -3; y <= 3; ++y)
    for (int x = -3; x <= 3; ++x) norm += std::exp(-(x * x + y * y) / 2.0);
  for (int y = 0; y < 11; ++y)
    for (int x = 0; x < 11; ++x) {
      const int dx = x - 5, dy = y - 5;
      const double expected =
          (std::abs(dx) <= 3 && std::abs(dy) <= 3) ? std::exp(-(dx * dx + dy * dy) / 2.0) / norm : 0.0;
      EXPECT_NEAR(out(x, y), expected, 1e-6) << x << "," << y;
    }
}

TEST(Gradients, IdenticalFramesHaveZeroTemporalDerivative) {
  std::mt19937_64 rng(2);
  const auto img = testing::random_image(20, 15, rng);
  const auto g = spatiotemporal_gradients(img, img);
  for (double v : g.it.pixels()) EXPECT_EQ(v, 0.0);
}

TEST(Gradients, RampIsExactInInterior) {
  const double c = 0.01;
  Image ramp(30, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 30; ++x) ramp(x, y) = c * x;
  const auto g = spatiotemporal_gradients(ramp, ramp);
  for (int y = 0; y < 10; ++y)
    for (int x = 1; x < 29; ++x) {
      EXPECT_NEAR(g.ix(x, y), c, 1e-15);
      EXPECT_EQ(g.iy(x, y), 0.0);
    }
}

TEST(Gradients, ConstantFrames) {
  const auto g = spatiotemporal_gradients(Image(8, 8, 0.2), Image(8, 8, 0.7));
  for (int i = 0; i < 64; ++i) {
    EXPECT_DOUBLE_EQ(g.it.pixels()[i], 0.5);
    EXPECT_EQ(g.ix.pixels()[i], 0.0);
    EXPECT_EQ(g.iy.pixels()[i], 0.0);
  }
}

TEST(Gradients, DimensionMismatch) {
  EXPECT_THROW(spatiotemporal_gradients(Image(4, 4), Image(4, 5)), Error);
}

TEST(LucasKanade, IdenticalFramesGiveZeroFlow) {
  const auto img = make_texture(64, 64, 3);
  const auto f = lucas_kanade(img, img, {});
  for (int i = 0; i < 64 * 64; ++i) {
    EXPECT_EQ(f.u.pixels()[i], 0.0);
    EXPECT_EQ(f.v.pixels()[i], 0.0);
  }
}

TEST(LucasKanade, RecoversUnitShift) {
  const auto r = translate_sequence(make_texture(128, 128, 5), 1.0, 0.0, 2);
  const auto f = lucas_kanade(r.sequence.frames[0], r.sequence.frames[1], {});
  int checked = 0;
  for (int y = 16; y < 112; ++y)
    for (int x = 16; x < 112; ++x) {
      if (!f.valid(x, y)) continue;
      ++checked;
      EXPECT_GE(f.u(x, y), 0.85);
      EXPECT_LE(f.u(x, y), 1.15);
      EXPECT_GE(f.v(x, y), -0.15);
      EXPECT_LE(f.v(x, y), 0.15);
    }
  EXPECT_GT(checked, 96 * 96 * 9 / 10);
}

TEST(LucasKanade, FlatImageIsInvalid) {
  const auto f = lucas_kanade(Image(32, 32, 0.4), Image(32, 32, 0.4), {});
  for (int i = 0; i < 32 * 32; ++i) {
    EXPECT_EQ(f.valid.pixels()[i], 0);
    EXPECT_EQ(f.u.pixels()[i], 0.0);
    EXPECT_EQ(f.v.pixels()[i], 0.0);
  }
}

TEST(LucasKanade, InvalidPixelsCarryZeroFlow) {
  // Vertical stripes: only the x component is observable (aperture problem).
  Image a(40, 40), b(40, 40);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) {
      a(x, y) = 0.5 + 0.3 * std::sin(x * 0.7);
      b(x, y) = 0.5 + 0.3 * std::sin((x - 0.5) * 0.7);
    }
  const auto f = lucas_kanade(a, b, {});
  for (int i = 0; i < 40 * 40; ++i) {
    EXPECT_EQ(f.valid.pixels()[i], 0);
    EXPECT_EQ(f.u.pixels()[i], 0.0);
  }
}

TEST(LucasKanade, RejectsBadParams) {
  const Image img(16, 16, 0.5);
  FlowParams p;
  p.window_radius = 0;
  EXPECT_THROW(lucas_kanade(img, img, p), Error);
  p = {};
  p.eigen_threshold = -1;
  EXPECT_THROW(lucas_kanade(img, img, p), Error);
  EXPECT_THROW(lucas_kanade(img, Image(16, 17, 0.5), {}), Error);
}

TEST(PyramidalLk, SingleLevelIsBitIdentical) {
  const auto r = translate_sequence(make_texture(96, 80, 8), 0.6, -0.3, 2);
  const auto a = lucas_kanade(r.sequence.frames[0], r.sequence.frames[1], {});
  const auto b = pyramidal_lk(r.sequence.frames[0], r.sequence.frames[1], {});
  EXPECT_EQ(a.u, b.u);
  EXPECT_EQ(a.v, b.v);
  EXPECT_EQ(a.valid, b.valid);
}

TEST(PyramidalLk, RecoversFourPixelShift) {
  const auto r = translate_sequence(make_texture(256, 256, 9), 4.0, 0.0, 2);
  FlowParams p;
  p.pyramid_levels = 3;
  const auto f = pyramidal_lk(r.sequence.frames[0], r.sequence.frames[1], p);
  double sum = 0;
  int n = 0;
  for (int y = 24; y < 232; ++y)
    for (int x = 24; x < 232; ++x)
      if (f.valid(x, y)) {
        sum += f.u(x, y);
        ++n;
      }
  ASSERT_GT(n, 0);
  EXPECT_NEAR(sum / n, 4.0, 0.3);
}

TEST(PyramidalLk, TooDeep) {
  FlowParams p;
  p.pyramid_levels = 5;
  p.window_radius = 7;
  try {
    pyramidal_lk(Image(16, 16, 0.5), Image(16, 16, 0.5), p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PyramidTooDeep);
  }
}

// --- properties -----------------------------------------------------------

TEST(FlowProperties, ZeroMotionOnRandomImages) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const auto img = testing::random_image(48, 40, rng);
    const auto f = lucas_kanade(img, img, {});
    for (int i = 0; i < 48 * 40; ++i)
      if (f.valid.pixels()[i]) {
        EXPECT_EQ(f.u.pixels()[i], 0.0);
        EXPECT_EQ(f.v.pixels()[i], 0.0);
      }
  }
}

TEST(FlowProperties, HorizontalMirrorEquivariance) {
  const auto r = translate_sequence(make_texture(80, 64, 13), 0.7, 0.4, 2);
  const auto& a = r.sequence.frames[0];
  const auto& b = r.sequence.frames[1];
  const auto f = lucas_kanade(a, b, {});
  const auto m = lucas_kanade(testing::mirror_x(a), testing::mirror_x(b), {});
  const int w = 80;
  for (int y = 8; y < 56; ++y)
    for (int x = 8; x < w - 8; ++x) {
      const int mx = w - 1 - x;
      if (!f.valid(x, y) || !m.valid(mx, y)) continue;
      EXPECT_NEAR(m.u(mx, y), -f.u(x, y), 1e-9);
      EXPECT_NEAR(m.v(mx, y), f.v(x, y), 1e-9);
    }
}

TEST(FlowProperties, BrightnessScaleInvariance) {
  const auto r = translate_sequence(make_texture(64, 64, 17), 0.5, 0.25, 2);
  const auto f = lucas_kanade(r.sequence.frames[0], r.sequence.frames[1], {});
  for (double c : {1.0, 0.75, 0.3}) {
    Image a = r.sequence.frames[0], b = r.sequence.frames[1];
    for (double& v : a.pixels()) v *= c;
    for (double& v : b.pixels()) v *= c;
    const auto g = lucas_kanade(a, b, {});
    int compared = 0;
    for (int i = 0; i < 64 * 64; ++i) {
      if (!f.valid.pixels()[i] || !g.valid.pixels()[i]) continue;
      ++compared;
      EXPECT_NEAR(g.u.pixels()[i], f.u.pixels()[i], 1e-6);
      EXPECT_NEAR(g.v.pixels()[i], f.v.pixels()[i], 1e-6);
    }
    EXPECT_GT(compared, 0);
  }
}

TEST(FlowProperties, ClosedFormMatchesStackedLeastSquares) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> coord(0, 39);
  std::uniform_int_distribution<int> radius(1, 7);
  GradientField g;
  for (int trial = 0; trial < 200; ++trial) {
    if (trial % 20 == 0) g = spatiotemporal_gradients(testing::random_image(40, 40, rng), testing::random_image(40, 40, rng));
    const int cx = coord(rng), cy = coord(rng), r = radius(rng);
    const auto s = solve_window(window_moments(g, cx, cy, r), 1e-6);
    ASSERT_TRUE(s.valid);
    const auto o = testing::stacked_least_squares(g, cx, cy, r);
    const double err = std::hypot(s.u - o.u, s.v - o.v);
    const double scale = std::max(std::hypot(o.u, o.v), 1e-300);
    EXPECT_LE(err / scale, 1e-9) << "trial " << trial;
  }
}

TEST(FlowProperties, ValidityMonotoneInThreshold) {
  const auto img = make_texture(64, 64, 23);
  Image flatter = img;
  // Flatten the left half so validity varies across the frame.
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 32; ++x) flatter(x, y) = 0.5 + 0.02 * (img(x, y) - 0.5);
  const auto r = translate_sequence(flatter, 0.3, 0.0, 2);
  Mask previous;
  for (double thr : {0.0, 1e-8, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2}) {
    FlowParams p;
    p.eigen_threshold = thr;
    const auto f = lucas_kanade(r.sequence.frames[0], r.sequence.frames[1], p);
    if (!previous.empty())
      for (int i = 0; i < 64 * 64; ++i)
        if (!previous.pixels()[i]) {
          EXPECT_EQ(f.valid.pixels()[i], 0) << "threshold " << thr;
        }
    previous = f.valid;
  }
}

}  // namespace
}  // namespace faceflow
