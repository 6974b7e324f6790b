#pragma once

// Command-line front end: `series`, `analyze`, `plot` and `synth`.
//
// Exit status: 0 success, 2 data or I/O failure, 3 configuration failure.
// Every subcommand also accepts `--config FILE`, a flat `key=value` file
// whose keys are long option names without the leading dashes. Options
// given on the command line take precedence over the file.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "faceflow/analysis.hpp"
#include "faceflow/error.hpp"
#include "faceflow/flow.hpp"
#include "faceflow/imageio.hpp"
#include "faceflow/intensity.hpp"
#include "faceflow/regions.hpp"
#include "faceflow/series_io.hpp"
#include "faceflow/synth.hpp"

namespace faceflow::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kDataError = 2, kConfigError = 3 };

struct RunConfig {
  std::string frames;                  // input frame directory
  std::string pattern = "*.p[gp]m";   // frame filename glob
  std::string regions;                 // region-map file; empty = built-in layout
  std::string series;                  // existing series.csv (analyze / plot)
  int rows = 6;
  int cols = 4;
  FlowParams flow;
  std::string mode = "reference";
  std::string units = "normalized";
  AnalysisParams analysis;
  std::string out = ".";
  std::string svg;  // explicit plot path; default <out>/plot.svg
  unsigned threads = 0;
};

struct SynthConfig {
  std::string kind = "expression";  // translate | expression
  int width = 320;
  int height = 240;
  int count = 100;
  double dx = 0.5;
  double dy = 0.0;
  std::uint64_t seed = 1;
  int rows = 6;
  int cols = 4;
  std::string regions;
  // name:amplitude:onset:apex:release:offset[:dirx:diry]
  std::vector<std::string> active;
  std::string out = ".";
};

namespace detail {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

/// Region map from file, or the built-in layout. Any failure here is a
/// configuration error, including an unreadable file.
inline RegionMap load_region_map(const RunConfig& cfg) {
  if (cfg.regions.empty()) {
    if (cfg.rows != 6 || cfg.cols != 4)
      throw ConfigError("the built-in region layout needs a 6x4 grid; pass --regions for other grids");
    return default_region_map();
  }
  std::string text;
  try {
    text = read_text(cfg.regions);
  } catch (const Error& e) {
    throw ConfigError("region map " + cfg.regions + ": " + e.detail());
  }
  try {
    RegionMap map = parse_region_map(text, cfg.rows, cfg.cols);
    if (map.empty()) throw ConfigError("region map " + cfg.regions + " defines no regions");
    return map;
  } catch (const Error& e) {
    throw ConfigError("region map " + cfg.regions + ": " + e.detail());
  }
}

inline void validate_run_config(const RunConfig& cfg) {
  try {
    cfg.flow.validate();
    cfg.analysis.validate();
    parse_mode(cfg.mode);
    parse_units(cfg.units);
    if (cfg.rows < 1 || cfg.cols < 1) throw ConfigError("rows and cols must be >= 1");
  } catch (const Error& e) {
    throw ConfigError(e.detail());
  }
}

template <typename F>
int guarded(std::ostream& err, const char* command, F&& body) {
  try {
    body();
    return kOk;
  } catch (const ConfigError& e) {
    err << "faceflow " << command << ": configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    err << "faceflow " << command << ": " << e.what() << "\n";
    return is_config_error(e.kind()) ? kConfigError : kDataError;
  } catch (const std::exception& e) {
    err << "faceflow " << command << ": " << e.what() << "\n";
    return kDataError;
  }
}

inline IntensitySeries compute_series(const RunConfig& cfg) {
  validate_run_config(cfg);
  const RegionMap map = load_region_map(cfg);
  if (cfg.frames.empty()) throw ConfigError("--frames is required");
  const FrameSequence seq = load_sequence(cfg.frames, cfg.pattern);
  if (seq.size() < 2) throw Error(ErrorKind::EmptySequence, "need at least 2 frames in " + cfg.frames);
  GridSpec grid;
  try {
    grid = make_grid(seq.width(), seq.height(), cfg.rows, cfg.cols);
  } catch (const Error& e) {
    throw ConfigError(e.detail());
  }
  return intensity_series(seq, grid, map, cfg.flow, parse_mode(cfg.mode), parse_units(cfg.units), cfg.threads);
}

inline ActiveRegion parse_active(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.size() != 6 && parts.size() != 8)
    throw ConfigError("--active expects name:amplitude:onset:apex:release:offset[:dirx:diry], got '" + spec + "'");
  try {
    ActiveRegion a;
    a.name = parts[0];
    a.amplitude = std::stod(parts[1]);
    a.profile = {std::stoi(parts[2]), std::stoi(parts[3]), std::stoi(parts[4]), std::stoi(parts[5])};
    if (parts.size() == 8) a.direction = {std::stod(parts[6]), std::stod(parts[7])};
    return a;
  } catch (const std::logic_error&) {
    throw ConfigError("non-numeric field in --active '" + spec + "'");
  }
}

inline std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace detail

/// Computes the intensity series and writes <out>/series.csv.
inline int cmd_series(const RunConfig& cfg, std::ostream& err = std::cerr) {
  return detail::guarded(err, "series", [&] {
    const IntensitySeries series = detail::compute_series(cfg);
    detail::ensure_dir(cfg.out);
    detail::write_text(fs::path(cfg.out) / "series.csv", write_series_csv(series));
  });
}

/// Builds the expression report from --series, or from frames (also writing
/// series.csv). Analysis always runs on CSV-precision values so both routes
/// give identical reports.
inline int cmd_analyze(const RunConfig& cfg, std::ostream& err = std::cerr) {
  return detail::guarded(err, "analyze", [&] {
    detail::validate_run_config(cfg);
    IntensitySeries series;
    if (!cfg.series.empty()) {
      const std::string text = detail::read_text(cfg.series);
      try {
        series = parse_series_csv(text);
      } catch (const Error& e) {
        throw Error(e.kind(), cfg.series + ": " + e.detail());
      }
    } else {
      series = quantize_like_csv(detail::compute_series(cfg));
      detail::ensure_dir(cfg.out);
      detail::write_text(fs::path(cfg.out) / "series.csv", write_series_csv(series));
    }
    const ExpressionReport report = build_report(series, cfg.analysis);
    detail::ensure_dir(cfg.out);
    detail::write_text(fs::path(cfg.out) / "report.json", write_report_json(report));
  });
}

inline int cmd_plot(const std::string& series_csv, const std::string& svg_path, std::ostream& err = std::cerr) {
  return detail::guarded(err, "plot", [&] {
    if (series_csv.empty()) throw detail::ConfigError("--series is required");
    const std::string text = detail::read_text(series_csv);
    IntensitySeries series;
    try {
      series = parse_series_csv(text);
    } catch (const Error& e) {
      throw Error(e.kind(), series_csv + ": " + e.detail());
    }
    const fs::path out(svg_path);
    if (out.has_parent_path()) detail::ensure_dir(out.parent_path());
    detail::write_text(out, render_series_svg(series));
  });
}

/// Writes frame_NNNN.pgm files and ground_truth.csv into cfg.out.
inline int cmd_synth(const SynthConfig& cfg, std::ostream& err = std::cerr) {
  return detail::guarded(err, "synth", [&] {
    SynthResult result;
    std::string truth;
    if (cfg.kind == "translate") {
      result = translate_sequence(make_texture(cfg.width, cfg.height, cfg.seed), cfg.dx, cfg.dy, cfg.count);
      truth = "frame_index,dx,dy\n";
      for (std::size_t t = 0; t < result.truth.global.size(); ++t)
        truth += std::to_string(t) + "," + detail::format_g(result.truth.global[t].dx) + "," +
                 detail::format_g(result.truth.global[t].dy) + "\n";
    } else if (cfg.kind == "expression") {
      RunConfig rc;
      rc.regions = cfg.regions;
      rc.rows = cfg.rows;
      rc.cols = cfg.cols;
      const RegionMap map = detail::load_region_map(rc);
      const GridSpec grid = make_grid(cfg.width, cfg.height, cfg.rows, cfg.cols);
      std::vector<ActiveRegion> active;
      for (const auto& spec : cfg.active) active.push_back(detail::parse_active(spec));
      result = synth_expression(grid, map, active, cfg.count, cfg.seed);
      truth = "frame_index,region,amplitude\n";
      for (int t = 0; t < cfg.count; ++t)
        for (const RegionTrack& track : result.truth.tracks)
          truth += std::to_string(t) + "," + track.name + "," +
                   detail::format_g(track.amplitude[static_cast<std::size_t>(t)]) + "\n";
    } else {
      throw detail::ConfigError("--kind must be 'translate' or 'expression', got '" + cfg.kind + "'");
    }

    detail::ensure_dir(cfg.out);
    const int digits = std::max(4, static_cast<int>(std::to_string(cfg.count - 1).size()));
    for (std::size_t t = 0; t < result.sequence.size(); ++t) {
      std::string index = std::to_string(t);
      index.insert(0, static_cast<std::size_t>(digits) - std::min<std::size_t>(index.size(), digits), '0');
      write_file_bytes(fs::path(cfg.out) / ("frame_" + index + ".pgm"), encode_pgm(result.sequence.frames[t]));
    }
    detail::write_text(fs::path(cfg.out) / "ground_truth.csv", truth);
  });
}

namespace detail {

inline void add_run_options(CLI::App& cmd, RunConfig& cfg, bool frames, bool analysis) {
  if (frames) {
    cmd.add_option("--frames", cfg.frames, "Directory of PGM/PPM frames");
    cmd.add_option("--pattern", cfg.pattern, "Frame filename glob")->capture_default_str();
    cmd.add_option("--regions", cfg.regions, "Region map file (default: built-in 6x4 layout)");
    cmd.add_option("--rows", cfg.rows, "Grid rows")->capture_default_str();
    cmd.add_option("--cols", cfg.cols, "Grid columns")->capture_default_str();
    cmd.add_option("--window-radius", cfg.flow.window_radius, "LK window radius")->capture_default_str();
    cmd.add_option("--sigma", cfg.flow.smooth_sigma, "Gaussian pre-smoothing sigma")->capture_default_str();
    cmd.add_option("--eigen-threshold", cfg.flow.eigen_threshold, "Min-eigenvalue threshold per window pixel")
        ->capture_default_str();
    cmd.add_option("--pyramid-levels", cfg.flow.pyramid_levels, "Pyramid levels (1 = single level)")
        ->capture_default_str();
    cmd.add_option("--mode", cfg.mode, "reference | consecutive")->capture_default_str();
    cmd.add_option("--units", cfg.units, "normalized | pixels")->capture_default_str();
    cmd.add_option("--threads", cfg.threads, "Worker threads (0 = hardware concurrency)");
  }
  if (analysis) {
    cmd.add_option("--theta", cfg.analysis.events.theta, "Activity threshold, fraction of peak")->capture_default_str();
    cmd.add_option("--run-length", cfg.analysis.events.run_length, "Consecutive frames above threshold")
        ->capture_default_str();
    cmd.add_option("--rho", cfg.analysis.rho, "Significance ratio against the dominant peak")->capture_default_str();
    cmd.add_option("--smooth-window", cfg.analysis.events.smooth_window, "Odd moving-average window")
        ->capture_default_str();
  }
  cmd.add_option("--out", cfg.out, "Output directory")->capture_default_str();
}

/// Splices `--key=value` pairs from the flat config file in front of the
/// user's arguments, skipping keys the user already passed.
inline std::vector<std::string> apply_config_file(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::optional<std::string> config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!config_path) return rest;

  std::string text;
  try {
    text = read_text(*config_path);
  } catch (const Error& e) {
    throw ConfigError("config file: " + e.detail());
  }
  auto given = [&](const std::string& key) {
    for (const auto& a : rest)
      if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) return true;
    return false;
  };
  std::vector<std::string> injected;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t(faceflow::detail::trim(line));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(*config_path + ": line " + std::to_string(line_no) + ": expected key=value");
    const std::string key(faceflow::detail::trim(std::string_view(t).substr(0, eq)));
    const std::string value(faceflow::detail::trim(std::string_view(t).substr(eq + 1)));
    if (key.empty()) throw ConfigError(*config_path + ": line " + std::to_string(line_no) + ": empty key");
    if (!given(key)) injected.push_back("--" + key + "=" + value);
  }
  // Subcommand name stays first so injected options bind to it.
  std::vector<std::string> out;
  if (!rest.empty()) out.push_back(rest.front());
  out.insert(out.end(), injected.begin(), injected.end());
  if (!rest.empty()) out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

}  // namespace detail

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
inline int run(const std::vector<std::string>& raw_args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  std::vector<std::string> args;
  try {
    args = detail::apply_config_file(raw_args);
  } catch (const detail::ConfigError& e) {
    err << "faceflow: configuration error: " << e.what() << "\n";
    return kConfigError;
  }

  CLI::App app{"Facial-region optical flow intensity toolkit", "faceflow"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  RunConfig series_cfg, analyze_cfg, plot_cfg;
  SynthConfig synth_cfg;

  auto* series = app.add_subcommand("series", "Compute per-region intensity series (series.csv)");
  detail::add_run_options(*series, series_cfg, true, false);

  auto* analyze = app.add_subcommand("analyze", "Detect onset/apex/offset and rank regions (report.json)");
  detail::add_run_options(*analyze, analyze_cfg, true, true);
  analyze->add_option("--series", analyze_cfg.series, "Existing series.csv (skips flow computation)");

  auto* plot = app.add_subcommand("plot", "Render series.csv as an SVG line chart (plot.svg)");
  plot->add_option("--series", plot_cfg.series, "series.csv to plot")->required();
  plot->add_option("--out", plot_cfg.out, "Output directory")->capture_default_str();
  plot->add_option("--svg", plot_cfg.svg, "Explicit SVG output path");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic frame sequence with ground truth");
  synth->add_option("--kind", synth_cfg.kind, "translate | expression")->capture_default_str();
  synth->add_option("--width", synth_cfg.width)->capture_default_str();
  synth->add_option("--height", synth_cfg.height)->capture_default_str();
  synth->add_option("--count", synth_cfg.count, "Number of frames")->capture_default_str();
  synth->add_option("--dx", synth_cfg.dx, "Translation per frame (translate)")->capture_default_str();
  synth->add_option("--dy", synth_cfg.dy, "Translation per frame (translate)")->capture_default_str();
  synth->add_option("--seed", synth_cfg.seed)->capture_default_str();
  synth->add_option("--rows", synth_cfg.rows)->capture_default_str();
  synth->add_option("--cols", synth_cfg.cols)->capture_default_str();
  synth->add_option("--regions", synth_cfg.regions, "Region map file (default: built-in 6x4 layout)");
  synth->add_option("--active", synth_cfg.active, "name:amplitude:onset:apex:release:offset[:dirx:diry]");
  synth->add_option("--out", synth_cfg.out, "Output directory")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kConfigError;
  }

  if (series->parsed()) return cmd_series(series_cfg, err);
  if (analyze->parsed()) return cmd_analyze(analyze_cfg, err);
  if (plot->parsed())
    return cmd_plot(plot_cfg.series,
                    plot_cfg.svg.empty() ? (fs::path(plot_cfg.out) / "plot.svg").string() : plot_cfg.svg, err);
  return cmd_synth(synth_cfg, err);
}

}  // namespace faceflow::cli
