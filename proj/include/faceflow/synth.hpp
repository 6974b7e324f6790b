#pragma once

// Synthetic frame sequences with exactly known motion. These are the ground
// truth used to check flow, intensity and analysis end to end.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "faceflow/error.hpp"
#include "faceflow/imageio.hpp"
#include "faceflow/raster.hpp"
#include "faceflow/regions.hpp"

namespace faceflow {

struct Displacement {
  double dx = 0;
  double dy = 0;
};

/// Piecewise-linear temporal envelope: 0 up to onset, linear rise to 1 at
/// apex, held until release, linear fall to 0 at offset, 0 afterwards.
struct MotionProfile {
  int onset = 0;
  int apex = 0;
  int release = 0;  // hold end; equal to apex for a pure triangle
  int offset = 0;

  static MotionProfile triangle(int onset, int apex, int offset) { return {onset, apex, apex, offset}; }

  void validate() const {
    if (onset < 0 || onset > apex || apex > release || release > offset)
      throw Error(ErrorKind::InvalidParams, "motion profile needs 0 <= onset <= apex <= release <= offset");
  }

  double at(int t) const {
    if (t < onset) return 0.0;
    if (t < apex) return static_cast<double>(t - onset) / (apex - onset);
    if (t <= release) return 1.0;
    if (t < offset) return static_cast<double>(offset - t) / (offset - release);
    return 0.0;
  }
};

struct ActiveRegion {
  std::string name;
  double amplitude = 1.0;          // peak displacement, pixels
  MotionProfile profile;
  Displacement direction{0.0, 1.0};  // normalized before use
};

/// Motion of one active region: a spatial weight (1 deep inside the region,
/// feathered to 0 at its edge) times a per-frame amplitude along direction.
struct RegionTrack {
  std::string name;
  Displacement direction;
  std::vector<double> amplitude;  // per frame, pixels
  Raster<double> weight;
};

struct GroundTruth {
  /// Cumulative per-frame shift (translate_sequence); empty otherwise.
  std::vector<Displacement> global;
  /// Region-confined motion (synth_expression); empty otherwise.
  std::vector<RegionTrack> tracks;

  Displacement at(std::size_t frame, int x, int y) const {
    Displacement d;
    if (!global.empty()) d = global.at(frame);
    for (const RegionTrack& t : tracks) {
      const double s = t.amplitude.at(frame) * t.weight(x, y);
      d.dx += s * t.direction.dx;
      d.dy += s * t.direction.dy;
    }
    return d;
  }
};

struct SynthResult {
  FrameSequence sequence;
  GroundTruth truth;
};

/// Pixels within this many pixels of a region edge ramp from 0 to 1.
inline constexpr int kFeatherWidth = 4;

namespace detail {

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw, so the
/// stream is identical across standard library implementations.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

/// Chessboard distance from each mask pixel to the nearest in-frame pixel
/// outside the mask (0 outside the mask, "infinite" if none exists).
inline Raster<int> chessboard_distance(const Mask& mask) {
  const int w = mask.width(), h = mask.height();
  const int inf = std::numeric_limits<int>::max() / 2;
  Raster<int> d(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) d(x, y) = mask(x, y) ? inf : 0;
  auto relax = [&](int x, int y, int nx, int ny) {
    if (nx < 0 || ny < 0 || nx >= w || ny >= h) return;
    d(x, y) = std::min(d(x, y), d(nx, ny) + 1);
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      relax(x, y, x - 1, y);
      relax(x, y, x - 1, y - 1);
      relax(x, y, x, y - 1);
      relax(x, y, x + 1, y - 1);
    }
  for (int y = h - 1; y >= 0; --y)
    for (int x = w - 1; x >= 0; --x) {
      relax(x, y, x + 1, y);
      relax(x, y, x + 1, y + 1);
      relax(x, y, x, y + 1);
      relax(x, y, x - 1, y + 1);
    }
  return d;
}

}  // namespace detail

/// Band-limited texture: 8 plane waves with random direction, phase and
/// wavelength in [8, 64] px, affinely rescaled to [0.1, 0.9]. The generator
/// is std::mt19937_64 seeded directly with `seed`.
inline Image make_texture(int width, int height, std::uint64_t seed) {
  if (width < 16 || height < 16)
    throw Error(ErrorKind::TooSmall, "texture needs at least 16x16, got " + std::to_string(width) + "x" +
                                         std::to_string(height));
  struct Wave {
    double kx, ky, phase, amplitude;
  };
  std::mt19937_64 rng(seed);
  std::vector<Wave> waves;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i < 8; ++i) {
    const double wavelength = 8.0 + 56.0 * detail::unit_uniform(rng);
    const double angle = two_pi * detail::unit_uniform(rng);
    const double phase = two_pi * detail::unit_uniform(rng);
    const double amplitude = 0.5 + 0.5 * detail::unit_uniform(rng);
    const double k = two_pi / wavelength;
    waves.push_back({k * std::cos(angle), k * std::sin(angle), phase, amplitude});
  }

  Image img(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double v = 0;
      for (const Wave& w : waves) v += w.amplitude * std::sin(w.kx * x + w.ky * y + w.phase);
      img(x, y) = v;
    }
  const auto [lo, hi] = std::minmax_element(img.pixels().begin(), img.pixels().end());
  const double min = *lo, range = *hi - *lo;
  for (double& v : img.pixels()) v = range > 0 ? std::clamp(0.1 + 0.8 * (v - min) / range, 0.1, 0.9) : 0.5;
  return img;
}

/// Frame t samples base at (x - dx*t, y - dy*t).
inline SynthResult translate_sequence(const Image& base, double dx, double dy, int n) {
  if (n < 2) throw Error(ErrorKind::InvalidParams, "translate_sequence needs n >= 2");
  const double limit = std::min(base.width(), base.height()) / 4.0;
  if (!(std::abs(dx * n) < limit) || !(std::abs(dy * n) < limit))
    throw Error(ErrorKind::ExcessiveShift, "total shift must stay below " + std::to_string(limit) + " px");

  SynthResult out;
  for (int t = 0; t < n; ++t) {
    const double sx = dx * t, sy = dy * t;
    Image frame(base.width(), base.height());
    for (int y = 0; y < base.height(); ++y)
      for (int x = 0; x < base.width(); ++x) frame(x, y) = sample_bilinear(base, x - sx, y - sy);
    out.sequence.frames.push_back(std::move(frame));
    out.truth.global.push_back({sx, sy});
  }
  return out;
}

/// Feathered weight for one region: smoothstep((d - 1) / kFeatherWidth)
/// where d is the chessboard distance to the region's exterior.
inline Raster<double> feathered_weight(const Mask& mask) {
  const auto dist = detail::chessboard_distance(mask);
  Raster<double> w(mask.width(), mask.height(), 0.0);
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask(x, y)) w(x, y) = detail::smoothstep((dist(x, y) - 1.0) / kFeatherWidth);
  return w;
}

/// Renders n frames of a seeded texture deformed inside the active regions.
/// Frame 0 is always the undeformed texture when every profile starts at 0.
inline SynthResult synth_expression(const GridSpec& grid, const RegionMap& map,
                                    const std::vector<ActiveRegion>& active, int n, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorKind::InvalidParams, "synth_expression needs n >= 2");
  const double max_amplitude = std::min(grid.cell_width(), grid.cell_height()) / 4.0;

  SynthResult out;
  for (const ActiveRegion& a : active) {
    map.at(a.name);
    if (!std::isfinite(a.amplitude) || a.amplitude < 0)
      throw Error(ErrorKind::InvalidParams, "amplitude of '" + a.name + "' must be finite and >= 0");
    if (!(a.amplitude < max_amplitude))
      throw Error(ErrorKind::AmplitudeTooLarge, "amplitude " + std::to_string(a.amplitude) + " of '" + a.name +
                                                    "' must be below cell size / 4 = " +
                                                    std::to_string(max_amplitude));
    a.profile.validate();
    const double norm = std::hypot(a.direction.dx, a.direction.dy);
    if (!(norm > 0) || !std::isfinite(norm))
      throw Error(ErrorKind::InvalidParams, "direction of '" + a.name + "' must be nonzero");

    RegionTrack track;
    track.name = a.name;
    track.direction = {a.direction.dx / norm, a.direction.dy / norm};
    for (int t = 0; t < n; ++t) track.amplitude.push_back(a.amplitude * a.profile.at(t));
    track.weight = feathered_weight(region_mask(grid, map, a.name));
    out.truth.tracks.push_back(std::move(track));
  }

  const Image texture = make_texture(grid.width(), grid.height(), seed);
  for (int t = 0; t < n; ++t) {
    Image frame(grid.width(), grid.height());
    for (int y = 0; y < grid.height(); ++y)
      for (int x = 0; x < grid.width(); ++x) {
        const Displacement d = out.truth.at(static_cast<std::size_t>(t), x, y);
        frame(x, y) = (d.dx == 0.0 && d.dy == 0.0) ? texture(x, y) : sample_bilinear(texture, x - d.dx, y - d.dy);
      }
    out.sequence.frames.push_back(std::move(frame));
  }
  return out;
}

}  // namespace faceflow
