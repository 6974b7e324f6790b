#pragma once

// Onset / apex / offset extraction from intensity curves and region ranking.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "faceflow/error.hpp"
#include "faceflow/intensity.hpp"

namespace faceflow {

struct EventParams {
  double theta = 0.1;     // activity threshold, fraction of the peak
  int run_length = 3;     // consecutive frames above threshold
  int smooth_window = 5;  // odd moving-average width

  void validate() const {
    if (!(theta > 0.0 && theta < 1.0))
      throw Error(ErrorKind::InvalidThreshold, "theta must lie in (0, 1), got " + std::to_string(theta));
    if (run_length < 1)
      throw Error(ErrorKind::InvalidThreshold, "run length must be >= 1, got " + std::to_string(run_length));
    if (smooth_window < 1 || smooth_window % 2 == 0)
      throw Error(ErrorKind::EvenWindow, "smoothing window must be odd and >= 1, got " + std::to_string(smooth_window));
  }
};

struct AnalysisParams {
  EventParams events;
  double rho = 0.2;  // significance ratio against the dominant peak

  void validate() const {
    events.validate();
    if (!(rho > 0.0 && rho <= 1.0))
      throw Error(ErrorKind::InvalidThreshold, "rho must lie in (0, 1], got " + std::to_string(rho));
  }
};

/// Event positions are indices into the analysed sequence; reports shift
/// them to frame numbers.
struct RegionEvents {
  std::optional<int> onset;
  std::optional<int> apex;
  std::optional<int> offset;
  double peak_value = 0;

  friend bool operator==(const RegionEvents&, const RegionEvents&) = default;
};

struct ExpressionReport {
  std::vector<std::pair<std::string, RegionEvents>> per_region;  // series column order
  std::optional<std::string> dominant_region;
  std::vector<std::string> deformed_regions;  // descending peak_value
  AnalysisParams parameters;
  int first_frame = 1;
  int last_frame = 0;

  bool deformation_detected() const noexcept { return !deformed_regions.empty(); }

  const RegionEvents* events(std::string_view name) const {
    for (const auto& [n, e] : per_region)
      if (n == name) return &e;
    return nullptr;
  }
};

/// Centered moving average; the window shrinks at the ends of the sequence.
inline std::vector<double> smooth_series(std::span<const double> values, int window) {
  if (window < 1 || window % 2 == 0)
    throw Error(ErrorKind::EvenWindow, "smoothing window must be odd and >= 1, got " + std::to_string(window));
  if (window == 1) return {values.begin(), values.end()};
  const int half = window / 2;
  const int n = static_cast<int>(values.size());
  std::vector<double> out(values.size());
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half), hi = std::min(n - 1, i + half);
    double sum = 0;
    for (int k = lo; k <= hi; ++k) sum += values[k];
    out[i] = sum / (hi - lo + 1);
  }
  return out;
}

/// On the smoothed curve with peak P: apex is the first maximum; onset is
/// the earliest start of k consecutive values above theta*P that end at or
/// before the apex; offset is the latest end of such a run starting at or
/// after the apex.
inline RegionEvents detect_events(std::span<const double> values, const EventParams& p = {}) {
  p.validate();
  RegionEvents ev;
  if (values.empty()) return ev;
  const auto smooth = smooth_series(values, p.smooth_window);
  const auto peak_it = std::max_element(smooth.begin(), smooth.end());
  const double peak = *peak_it;
  if (!(peak > 0.0)) return ev;

  const int n = static_cast<int>(smooth.size());
  const int apex = static_cast<int>(peak_it - smooth.begin());
  const int k = p.run_length;
  const double level = p.theta * peak;
  ev.apex = apex;
  ev.peak_value = peak;

  // above_run[i] = length of the run of above-threshold values ending at i.
  std::vector<int> above_run(n, 0);
  for (int i = 0; i < n; ++i) above_run[i] = smooth[i] > level ? (i > 0 ? above_run[i - 1] : 0) + 1 : 0;

  for (int end = k - 1; end <= apex; ++end)
    if (above_run[end] >= k) {
      ev.onset = end - k + 1;
      break;
    }
  for (int end = n - 1; end - k + 1 >= apex; --end)
    if (above_run[end] >= k) {
      ev.offset = end;
      break;
    }
  return ev;
}

/// Per-region events plus ranking. The dominant region has the largest peak
/// (ties go to the earlier column); deformed regions are those whose peak is
/// positive and at least rho times the dominant peak.
inline ExpressionReport rank_regions(const IntensitySeries& series, const AnalysisParams& params = {}) {
  params.validate();
  if (series.values.empty() || series.regions.empty())
    throw Error(ErrorKind::EmptySeries, "intensity series has no frames or no regions");

  ExpressionReport report;
  report.parameters = params;
  report.first_frame = series.first_frame;
  auto to_frame = [&](std::optional<int>& idx) {
    if (idx) *idx += series.first_frame;
  };
  for (std::size_t r = 0; r < series.regions.size(); ++r) {
    RegionEvents ev = detect_events(series.column(r), params.events);
    to_frame(ev.onset);
    to_frame(ev.apex);
    to_frame(ev.offset);
    report.per_region.emplace_back(series.regions[r], ev);
  }

  std::vector<std::size_t> order(report.per_region.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.per_region[a].second.peak_value > report.per_region[b].second.peak_value;
  });

  const double top = report.per_region[order.front()].second.peak_value;
  if (!(top > 0.0)) return report;
  report.dominant_region = report.per_region[order.front()].first;
  for (std::size_t i : order) {
    const double peak = report.per_region[i].second.peak_value;
    if (peak > 0.0 && peak >= params.rho * top) report.deformed_regions.push_back(report.per_region[i].first);
  }
  return report;
}

/// Ranking plus the analysed frame range and the parameters used.
inline ExpressionReport build_report(const IntensitySeries& series, const AnalysisParams& params = {}) {
  ExpressionReport report = rank_regions(series, params);
  report.first_frame = series.first_frame;
  report.last_frame = series.first_frame + static_cast<int>(series.frame_count()) - 1;
  return report;
}

}  // namespace faceflow
