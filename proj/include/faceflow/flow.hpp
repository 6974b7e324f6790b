#pragma once

// Dense Lucas-Kanade optical flow.
//
// For every pixel the brightness constancy constraint ix*u + iy*v + it = 0 is
// stacked over a square window and solved in the least-squares sense through
// the 2x2 normal equations
//
//   [sum ix*ix  sum ix*iy] [u]     [sum ix*it]
//   [sum ix*iy  sum iy*iy] [v] = - [sum iy*it]
//
// Pixels whose structure tensor has a small minimum eigenvalue (flat or
// edge-only neighbourhoods) are flagged invalid and get zero flow.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "faceflow/error.hpp"
#include "faceflow/raster.hpp"

namespace faceflow {

struct GradientField {
  Raster<double> ix;
  Raster<double> iy;
  Raster<double> it;

  int width() const noexcept { return ix.width(); }
  int height() const noexcept { return ix.height(); }
};

/// Per-pixel displacement from the first frame to the second, in pixels.
/// Invalid pixels always carry u = v = 0.
struct FlowField {
  Raster<double> u;
  Raster<double> v;
  Mask valid;

  FlowField() = default;
  FlowField(int width, int height) : u(width, height, 0.0), v(width, height, 0.0), valid(width, height, 0) {}

  int width() const noexcept { return u.width(); }
  int height() const noexcept { return u.height(); }
  bool same_shape(const auto& other) const noexcept { return u.same_shape(other); }
};

struct FlowParams {
  int window_radius = 7;
  double smooth_sigma = 1.0;
  double eigen_threshold = 1e-6;
  int pyramid_levels = 1;

  void validate() const {
    if (window_radius < 1)
      throw Error(ErrorKind::InvalidParams, "window_radius must be >= 1");
    if (!(smooth_sigma >= 0.0) || !std::isfinite(smooth_sigma))
      throw Error(ErrorKind::InvalidParams, "smooth_sigma must be finite and >= 0");
    if (!(eigen_threshold >= 0.0) || !std::isfinite(eigen_threshold))
      throw Error(ErrorKind::InvalidParams, "eigen_threshold must be finite and >= 0");
    if (pyramid_levels < 1)
      throw Error(ErrorKind::InvalidParams, "pyramid_levels must be >= 1");
  }
};

/// Window sums of gradient products around one pixel.
struct WindowMoments {
  double gxx = 0;
  double gxy = 0;
  double gyy = 0;
  double bx = 0;  // sum ix*it
  double by = 0;  // sum iy*it
  int count = 0;
};

struct WindowSolution {
  double u = 0;
  double v = 0;
  double min_eigenvalue = 0;
  bool valid = false;
};

// ---------------------------------------------------------------------------
// Smoothing and derivatives

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& w : k) w /= sum;
  return k;
}

/// Separable Gaussian blur with replicate border; sigma == 0 is the identity.
inline Image gaussian_smooth(const Image& img, double sigma) {
  if (!(sigma >= 0.0)) throw Error(ErrorKind::InvalidParams, "sigma must be >= 0");
  if (sigma == 0.0) return img;
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int w = img.width();
  const int h = img.height();

  Image horizontal(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * img.clamped(x + k, y);
      horizontal(x, y) = acc;
    }

  Image out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * horizontal.clamped(x, y + k);
      out(x, y) = acc;
    }
  return out;
}

/// Central differences of the frame average for ix/iy, frame difference for it.
inline GradientField spatiotemporal_gradients(const Image& i1, const Image& i2) {
  require_same_shape(i1, i2, "spatiotemporal_gradients");
  const int w = i1.width();
  const int h = i1.height();
  Image avg(w, h);
  {
    auto a = avg.pixels();
    auto p1 = i1.pixels();
    auto p2 = i2.pixels();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = 0.5 * (p1[i] + p2[i]);
  }

  GradientField g{Raster<double>(w, h), Raster<double>(w, h), Raster<double>(w, h)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      g.ix(x, y) = 0.5 * (avg.clamped(x + 1, y) - avg.clamped(x - 1, y));
      g.iy(x, y) = 0.5 * (avg.clamped(x, y + 1) - avg.clamped(x, y - 1));
      g.it(x, y) = i2(x, y) - i1(x, y);
    }
  return g;
}

// ---------------------------------------------------------------------------
// Per-window solve

/// Smaller eigenvalue of the symmetric matrix [a b; b c].
inline double min_eigenvalue_sym2(double a, double b, double c) {
  const double mean = 0.5 * (a + c);
  const double half_diff = 0.5 * (a - c);
  return mean - std::hypot(half_diff, b);
}

/// Direct (unsliding) accumulation over the window clipped to the raster.
inline WindowMoments window_moments(const GradientField& g, int cx, int cy, int radius) {
  WindowMoments m;
  const int x0 = std::max(0, cx - radius), x1 = std::min(g.width() - 1, cx + radius);
  const int y0 = std::max(0, cy - radius), y1 = std::min(g.height() - 1, cy + radius);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double ix = g.ix(x, y), iy = g.iy(x, y), it = g.it(x, y);
      m.gxx += ix * ix;
      m.gxy += ix * iy;
      m.gyy += iy * iy;
      m.bx += ix * it;
      m.by += iy * it;
    }
  m.count = (x1 - x0 + 1) * (y1 - y0 + 1);
  return m;
}

/// Closed-form solution of G [u v]^T = -b. The pixel is rejected when the
/// smaller eigenvalue of G is non-positive or below eigen_threshold * count.
inline WindowSolution solve_window(const WindowMoments& m, double eigen_threshold) {
  WindowSolution s;
  s.min_eigenvalue = min_eigenvalue_sym2(m.gxx, m.gxy, m.gyy);
  if (!(s.min_eigenvalue > 0.0) || s.min_eigenvalue < eigen_threshold * m.count) return s;
  const double det = m.gxx * m.gyy - m.gxy * m.gxy;
  if (!(det > 0.0)) return s;
  s.u = -(m.gyy * m.bx - m.gxy * m.by) / det;
  s.v = -(m.gxx * m.by - m.gxy * m.bx) / det;
  s.valid = std::isfinite(s.u) && std::isfinite(s.v);
  if (!s.valid) s.u = s.v = 0;
  return s;
}

namespace detail {

/// Clipped-window box sum, computed separably. Each output pixel sums its
/// own terms in a fixed order, so results do not depend on scheduling.
inline Raster<double> box_sum(const Raster<double>& src, int radius) {
  const int w = src.width();
  const int h = src.height();
  Raster<double> rows(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
      for (int k = x0; k <= x1; ++k) acc += src(k, y);
      rows(x, y) = acc;
    }
  Raster<double> out(w, h);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int k = y0; k <= y1; ++k) acc += rows(x, k);
      out(x, y) = acc;
    }
  }
  return out;
}

inline Raster<double> product(const Raster<double>& a, const Raster<double>& b) {
  Raster<double> out(a.width(), a.height());
  auto o = out.pixels();
  auto pa = a.pixels();
  auto pb = b.pixels();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = pa[i] * pb[i];
  return out;
}

inline int clipped_extent(int center, int radius, int size) {
  return std::min(size - 1, center + radius) - std::max(0, center - radius) + 1;
}

}  // namespace detail

/// Single-level dense Lucas-Kanade. Ignores p.pyramid_levels.
inline FlowField lucas_kanade(const Image& i1, const Image& i2, const FlowParams& p) {
  require_same_shape(i1, i2, "lucas_kanade");
  p.validate();
  const auto g = spatiotemporal_gradients(gaussian_smooth(i1, p.smooth_sigma), gaussian_smooth(i2, p.smooth_sigma));
  const int r = p.window_radius;
  const auto gxx = detail::box_sum(detail::product(g.ix, g.ix), r);
  const auto gxy = detail::box_sum(detail::product(g.ix, g.iy), r);
  const auto gyy = detail::box_sum(detail::product(g.iy, g.iy), r);
  const auto bx = detail::box_sum(detail::product(g.ix, g.it), r);
  const auto by = detail::box_sum(detail::product(g.iy, g.it), r);

  const int w = i1.width();
  const int h = i1.height();
  FlowField flow(w, h);
  for (int y = 0; y < h; ++y) {
    const int ny = detail::clipped_extent(y, r, h);
    for (int x = 0; x < w; ++x) {
      const WindowMoments m{gxx(x, y), gxy(x, y), gyy(x, y), bx(x, y), by(x, y),
                            detail::clipped_extent(x, r, w) * ny};
      const auto s = solve_window(m, p.eigen_threshold);
      flow.u(x, y) = s.u;
      flow.v(x, y) = s.v;
      flow.valid(x, y) = s.valid ? 1 : 0;
    }
  }
  return flow;
}

// ---------------------------------------------------------------------------
// Coarse-to-fine

/// 2x2 box average; odd trailing rows/columns are dropped.
inline Image downsample2(const Image& img) {
  const int w = std::max(1, img.width() / 2);
  const int h = std::max(1, img.height() / 2);
  Image out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out(x, y) = 0.25 * (img.clamped(2 * x, 2 * y) + img.clamped(2 * x + 1, 2 * y) +
                          img.clamped(2 * x, 2 * y + 1) + img.clamped(2 * x + 1, 2 * y + 1));
  return out;
}

/// Samples img at (x + u, y + v) for every pixel.
inline Image warp_by_flow(const Image& img, const Raster<double>& u, const Raster<double>& v) {
  Image out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out(x, y) = sample_bilinear(img, x + u(x, y), y + v(x, y));
  return out;
}

/// Bilinear upsampling of a coarse displacement raster to (w, h), with
/// values scaled by the resolution ratio (2).
inline Raster<double> upsample_displacement(const Raster<double>& coarse, int w, int h) {
  Raster<double> out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out(x, y) = 2.0 * sample_bilinear(coarse, (x + 0.5) / 2.0 - 0.5, (y + 0.5) / 2.0 - 0.5);
  return out;
}

inline void check_pyramid_depth(int width, int height, const FlowParams& p) {
  const long long need = (1LL << (p.pyramid_levels - 1)) * (2LL * p.window_radius + 1);
  if (std::min(width, height) < need)
    throw Error(ErrorKind::PyramidTooDeep,
                std::to_string(p.pyramid_levels) + " levels with window radius " + std::to_string(p.window_radius) +
                    " need a minimum dimension of " + std::to_string(need) + " px, got " +
                    std::to_string(std::min(width, height)));
}

/// Coarse-to-fine Lucas-Kanade: one single-level solve per pyramid level on
/// the residual motion after warping the second frame by the current
/// estimate. With one level this is exactly lucas_kanade.
inline FlowField pyramidal_lk(const Image& i1, const Image& i2, const FlowParams& p) {
  require_same_shape(i1, i2, "pyramidal_lk");
  p.validate();
  if (p.pyramid_levels > 30) throw Error(ErrorKind::PyramidTooDeep, "too many pyramid levels");
  check_pyramid_depth(i1.width(), i1.height(), p);
  if (p.pyramid_levels == 1) return lucas_kanade(i1, i2, p);

  std::vector<Image> pyr1{i1}, pyr2{i2};
  for (int level = 1; level < p.pyramid_levels; ++level) {
    pyr1.push_back(downsample2(pyr1.back()));
    pyr2.push_back(downsample2(pyr2.back()));
  }

  FlowField flow;
  for (int level = p.pyramid_levels - 1; level >= 0; --level) {
    const Image& a = pyr1[level];
    const Image& b = pyr2[level];
    if (level == p.pyramid_levels - 1) {
      flow = lucas_kanade(a, b, p);
      continue;
    }
    const auto u0 = upsample_displacement(flow.u, a.width(), a.height());
    const auto v0 = upsample_displacement(flow.v, a.width(), a.height());
    const auto residual = lucas_kanade(a, warp_by_flow(b, u0, v0), p);
    FlowField next(a.width(), a.height());
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) {
        next.u(x, y) = u0(x, y) + residual.u(x, y);
        next.v(x, y) = v0(x, y) + residual.v(x, y);
        next.valid(x, y) = residual.valid(x, y);
      }
    flow = std::move(next);
  }

  for (int y = 0; y < flow.height(); ++y)
    for (int x = 0; x < flow.width(); ++x)
      if (!flow.valid(x, y)) flow.u(x, y) = flow.v(x, y) = 0.0;
  return flow;
}

}  // namespace faceflow
