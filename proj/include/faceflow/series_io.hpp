#pragma once

// Text formats produced by the pipeline: series.csv, report.json and the
// SVG intensity plot. All writers are deterministic byte-for-byte.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "faceflow/analysis.hpp"
#include "faceflow/error.hpp"
#include "faceflow/intensity.hpp"

namespace faceflow {

/// 9 significant digits, scientific notation.
inline std::string format_magnitude(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8e", v);
  return buf;
}

/// `frame,<region>,...` header, then one row per frame.
inline std::string write_series_csv(const IntensitySeries& series) {
  std::string out = "frame";
  for (const auto& name : series.regions) out += "," + name;
  out += "\n";
  for (std::size_t row = 0; row < series.values.size(); ++row) {
    out += std::to_string(series.first_frame + static_cast<int>(row));
    for (double v : series.values[row]) out += "," + format_magnitude(v);
    out += "\n";
  }
  return out;
}

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] inline void series_error(int line_no, const std::string& msg) {
  throw Error(ErrorKind::MalformedSeries, "line " + std::to_string(line_no) + ": " + msg);
}

}  // namespace detail

/// Parses series.csv. Frame numbers must be consecutive integers; values
/// must be finite and non-negative.
inline IntensitySeries parse_series_csv(std::string_view text) {
  IntensitySeries series;
  int line_no = 0;
  bool have_header = false;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = detail::trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;

    const auto fields = detail::split_commas(line);
    if (!have_header) {
      if (fields.size() < 2 || detail::trim(fields[0]) != "frame")
        detail::series_error(line_no, "header must be 'frame,<region>[,<region>...]'");
      std::set<std::string_view> seen;
      for (std::size_t i = 1; i < fields.size(); ++i) {
        const auto name = detail::trim(fields[i]);
        if (name.empty()) detail::series_error(line_no, "empty region name");
        if (!seen.insert(name).second) detail::series_error(line_no, "duplicate region '" + std::string(name) + "'");
        series.regions.emplace_back(name);
      }
      have_header = true;
      continue;
    }

    if (fields.size() != series.regions.size() + 1)
      detail::series_error(line_no, "expected " + std::to_string(series.regions.size() + 1) + " fields, got " +
                                        std::to_string(fields.size()));
    const auto frame_text = detail::trim(fields[0]);
    int frame = 0;
    const auto [fp, fec] = std::from_chars(frame_text.data(), frame_text.data() + frame_text.size(), frame);
    if (fec != std::errc{} || fp != frame_text.data() + frame_text.size())
      detail::series_error(line_no, "bad frame number '" + std::string(frame_text) + "'");
    if (series.values.empty()) {
      series.first_frame = frame;
    } else if (frame != series.first_frame + static_cast<int>(series.values.size())) {
      detail::series_error(line_no, "frame " + std::to_string(frame) + " out of sequence");
    }

    std::vector<double> row;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const auto cell = detail::trim(fields[i]);
      double v = 0;
      const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || p != cell.data() + cell.size() || !std::isfinite(v) || v < 0)
        detail::series_error(line_no, "bad magnitude '" + std::string(cell) + "'");
      row.push_back(v);
    }
    series.values.push_back(std::move(row));
  }
  if (!have_header) throw Error(ErrorKind::MalformedSeries, "missing header");
  if (series.values.empty()) throw Error(ErrorKind::MalformedSeries, "no data rows");
  return series;
}

/// Applies the CSV number format to every value, so in-memory analysis
/// sees exactly what a reader of series.csv would.
inline IntensitySeries quantize_like_csv(IntensitySeries series) {
  for (auto& row : series.values)
    for (double& v : row) v = std::strtod(format_magnitude(v).c_str(), nullptr);
  return series;
}

inline nlohmann::ordered_json report_to_json(const ExpressionReport& report) {
  using nlohmann::ordered_json;
  auto opt = [](const std::optional<int>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };

  ordered_json j;
  j["frames"] = {{"first", report.first_frame}, {"last", report.last_frame}};
  j["parameters"] = {{"theta", report.parameters.events.theta},
                     {"run_length", report.parameters.events.run_length},
                     {"rho", report.parameters.rho},
                     {"smooth_window", report.parameters.events.smooth_window}};
  ordered_json regions = ordered_json::object();
  for (const auto& [name, ev] : report.per_region)
    regions[name] = {{"onset", opt(ev.onset)},
                     {"apex", opt(ev.apex)},
                     {"offset", opt(ev.offset)},
                     {"peak_value", ev.peak_value}};
  j["regions"] = std::move(regions);
  j["dominant_region"] = report.dominant_region ? ordered_json(*report.dominant_region) : ordered_json(nullptr);
  j["deformed_regions"] = report.deformed_regions;
  j["deformation_detected"] = report.deformation_detected();
  return j;
}

inline std::string write_report_json(const ExpressionReport& report) { return report_to_json(report).dump(2) + "\n"; }

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace detail

/// Line chart of the series: one polyline per region, axes, ticks and a legend.
inline std::string render_series_svg(const IntensitySeries& series) {
  if (series.values.empty() || series.regions.empty())
    throw Error(ErrorKind::EmptySeries, "nothing to plot");
  using detail::fmt;
  constexpr double width = 800, height = 500;
  constexpr double left = 90, right = 170, top = 30, bottom = 60;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                            "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  const int first = series.first_frame;
  const int last = first + static_cast<int>(series.values.size()) - 1;
  double ymax = 0;
  for (const auto& row : series.values)
    for (double v : row) ymax = std::max(ymax, v);
  if (!(ymax > 0)) ymax = 1;
  const double xspan = std::max(1, last - first);
  auto px = [&](double frame) { return left + (frame - first) / xspan * plot_w; };
  auto py = [&](double v) { return top + plot_h - v / ymax * plot_h; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" viewBox=\"0 0 800 500\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
  s += "<g stroke=\"black\" stroke-width=\"1\">\n";
  s += "<line x1=\"" + fmt("%.2f", left) + "\" y1=\"" + fmt("%.2f", top + plot_h) + "\" x2=\"" +
       fmt("%.2f", left + plot_w) + "\" y2=\"" + fmt("%.2f", top + plot_h) + "\"/>\n";
  s += "<line x1=\"" + fmt("%.2f", left) + "\" y1=\"" + fmt("%.2f", top) + "\" x2=\"" + fmt("%.2f", left) +
       "\" y2=\"" + fmt("%.2f", top + plot_h) + "\"/>\n";
  s += "</g>\n";

  s += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double frame = first + xspan * i / 5.0;
    const double v = ymax * i / 5.0;
    s += "<text x=\"" + fmt("%.2f", px(frame)) + "\" y=\"" + fmt("%.2f", top + plot_h + 16) +
         "\" text-anchor=\"middle\">" + fmt("%.0f", frame) + "</text>\n";
    s += "<text x=\"" + fmt("%.2f", left - 6) + "\" y=\"" + fmt("%.2f", py(v) + 4) + "\" text-anchor=\"end\">" +
         fmt("%.3g", v) + "</text>\n";
  }
  s += "</g>\n";
  s += "<text x=\"" + fmt("%.2f", left + plot_w / 2) + "\" y=\"" + fmt("%.2f", height - 15) +
       "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">frame</text>\n";
  s += "<text x=\"20\" y=\"" + fmt("%.2f", top + plot_h / 2) + "\" font-family=\"sans-serif\" font-size=\"13\" "
       "text-anchor=\"middle\" transform=\"rotate(-90 20 " + fmt("%.2f", top + plot_h / 2) +
       ")\">mean magnitude</text>\n";

  for (std::size_t r = 0; r < series.regions.size(); ++r) {
    const char* color = palette[r % std::size(palette)];
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t row = 0; row < series.values.size(); ++row) {
      if (row) s += " ";
      s += fmt("%.2f", px(first + static_cast<double>(row))) + "," + fmt("%.2f", py(series.values[row][r]));
    }
    s += "\"/>\n";
    const double ly = top + 10 + 20.0 * static_cast<double>(r);
    s += "<line x1=\"" + fmt("%.2f", width - right + 15) + "\" y1=\"" + fmt("%.2f", ly) + "\" x2=\"" +
         fmt("%.2f", width - right + 40) + "\" y2=\"" + fmt("%.2f", ly) + "\" stroke=\"" + color +
         "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + fmt("%.2f", width - right + 46) + "\" y=\"" + fmt("%.2f", ly + 4) +
         "\" font-family=\"sans-serif\" font-size=\"12\">" + detail::xml_escape(series.regions[r]) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace faceflow
