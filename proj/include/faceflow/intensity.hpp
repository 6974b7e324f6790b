#pragma once

// Per-region motion intensity: mean displacement magnitude of the flow
// field over each region's pixels, one value per frame.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "faceflow/error.hpp"
#include "faceflow/flow.hpp"
#include "faceflow/imageio.hpp"
#include "faceflow/regions.hpp"

namespace faceflow {

/// A point's position in the current frame (xi, yi) and in the reference
/// frame (x, y). For dense flow, (xi - x, yi - y) is the pixel's (u, v).
struct FlowVector {
  double xi = 0;
  double yi = 0;
  double x = 0;
  double y = 0;

  static FlowVector from_displacement(double u, double v) { return {u, v, 0.0, 0.0}; }
};

/// Euclidean length of the displacement between the two positions.
inline double displacement_magnitude(const FlowVector& f) { return std::hypot(f.xi - f.x, f.yi - f.y); }

enum class SeriesMode { Reference, Consecutive };
enum class Units { Normalized, Pixels };

constexpr std::string_view to_string(SeriesMode m) { return m == SeriesMode::Reference ? "reference" : "consecutive"; }
constexpr std::string_view to_string(Units u) { return u == Units::Normalized ? "normalized" : "pixels"; }

inline SeriesMode parse_mode(std::string_view s) {
  if (s == "reference") return SeriesMode::Reference;
  if (s == "consecutive") return SeriesMode::Consecutive;
  throw Error(ErrorKind::InvalidParams, "mode must be 'reference' or 'consecutive', got '" + std::string(s) + "'");
}

inline Units parse_units(std::string_view s) {
  if (s == "normalized") return Units::Normalized;
  if (s == "pixels") return Units::Pixels;
  throw Error(ErrorKind::InvalidParams, "units must be 'normalized' or 'pixels', got '" + std::string(s) + "'");
}

struct RegionMean {
  double value = 0;
  long long count = 0;  // pixels that were both in the mask and valid
};

/// Mean magnitude over mask & valid pixels, divided by `diag` when
/// normalizing. An empty selection yields 0 with count 0.
inline RegionMean region_mean_magnitude(const FlowField& f, const Mask& mask, bool normalize, double diag) {
  require_same_shape(f.u, mask, "region_mean_magnitude");
  RegionMean out;
  double sum = 0;
  const auto u = f.u.pixels(), v = f.v.pixels();
  const auto valid = f.valid.pixels(), m = mask.pixels();
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!m[i] || !valid[i]) continue;
    sum += displacement_magnitude(FlowVector::from_displacement(u[i], v[i]));
    ++out.count;
  }
  if (out.count == 0) return out;
  out.value = sum / static_cast<double>(out.count);
  if (normalize) out.value /= diag;
  return out;
}

/// Rows are frames first_frame, first_frame + 1, ...; columns follow
/// `regions`.
struct IntensitySeries {
  std::vector<std::string> regions;
  std::vector<std::vector<double>> values;          // [row][region]
  std::vector<std::vector<long long>> valid_counts;  // diagnostics, may be empty
  int first_frame = 1;
  Units units = Units::Normalized;
  SeriesMode mode = SeriesMode::Reference;

  std::size_t frame_count() const noexcept { return values.size(); }

  std::vector<double> column(std::size_t region) const {
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& row : values) out.push_back(row.at(region));
    return out;
  }
};

inline double image_diagonal(int width, int height) {
  return std::hypot(static_cast<double>(width), static_cast<double>(height));
}

/// Flow for every frame pair (frame 0 -> t in reference mode, t-1 -> t in
/// consecutive mode), aggregated per region. Rows may be computed on several
/// threads; each row is written to its own slot so the result is the same
/// for any thread count.
inline IntensitySeries intensity_series(const FrameSequence& seq, const GridSpec& grid, const RegionMap& map,
                                        const FlowParams& params, SeriesMode mode = SeriesMode::Reference,
                                        Units units = Units::Normalized, unsigned threads = 0) {
  if (seq.size() < 2) throw Error(ErrorKind::EmptySequence, "need at least 2 frames, got " + std::to_string(seq.size()));
  if (seq.width() != grid.width() || seq.height() != grid.height())
    throw Error(ErrorKind::DimensionMismatch, "grid is " + std::to_string(grid.width()) + "x" +
                                                  std::to_string(grid.height()) + " but frames are " +
                                                  std::to_string(seq.width()) + "x" + std::to_string(seq.height()));
  for (const Image& f : seq.frames) require_same_shape(f, seq.frames.front(), "intensity_series");
  params.validate();
  check_pyramid_depth(seq.width(), seq.height(), params);

  IntensitySeries series;
  series.regions = map.names();
  series.units = units;
  series.mode = mode;
  series.first_frame = 1;

  std::vector<Mask> masks;
  for (const auto& name : series.regions) masks.push_back(region_mask(grid, map, name));

  const std::size_t rows = seq.size() - 1;
  series.values.assign(rows, std::vector<double>(masks.size(), 0.0));
  series.valid_counts.assign(rows, std::vector<long long>(masks.size(), 0));
  const double diag = image_diagonal(seq.width(), seq.height());
  const bool normalize = units == Units::Normalized;

  auto compute_row = [&](std::size_t row) {
    const std::size_t t = row + 1;
    const Image& from = mode == SeriesMode::Reference ? seq.frames.front() : seq.frames[t - 1];
    const FlowField flow = pyramidal_lk(from, seq.frames[t], params);
    for (std::size_t r = 0; r < masks.size(); ++r) {
      const RegionMean m = region_mean_magnitude(flow, masks[r], normalize, diag);
      series.values[row][r] = m.value;
      series.valid_counts[row][r] = m.count;
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, rows));
  if (threads <= 1) {
    for (std::size_t row = 0; row < rows; ++row) compute_row(row);
    return series;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    for (unsigned i = 0; i < threads; ++i)
      workers.emplace_back([&] {
        for (std::size_t row = next++; row < rows; row = next++) {
          try {
            compute_row(row);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = rows;
          }
        }
      });
  }
  if (failure) std::rethrow_exception(failure);
  return series;
}

}  // namespace faceflow
