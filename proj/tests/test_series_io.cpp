#include <gtest/gtest.h>

#include <random>
#include <regex>

#include "faceflow/series_io.hpp"

namespace faceflow {
namespace {

IntensitySeries sample_series() {
  IntensitySeries s;
  s.regions = {"eyes_eyebrows", "cheeks", "mouth"};
  s.values = {{0.0, 1.25e-4, 3.0e-4}, {1.0e-5, 2.5e-4, 9.0e-4}, {0.0, 0.0, 4.0e-5}};
  return s;
}

TEST(SeriesCsv, FixedLayout) {
  const auto csv = write_series_csv(sample_series());
  EXPECT_EQ(csv,
            "frame,eyes_eyebrows,cheeks,mouth\n"
            "1,0.00000000e+00,1.25000000e-04,3.00000000e-04\n"
            "2,1.00000000e-05,2.50000000e-04,9.00000000e-04\n"
            "3,0.00000000e+00,0.00000000e+00,4.00000000e-05\n");
}

TEST(SeriesCsv, ParseInvertsWrite) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    IntensitySeries s;
    s.regions = {"a", "b"};
    s.first_frame = 1 + trial;
    s.values.assign(1 + trial % 9, std::vector<double>(2));
    for (auto& row : s.values)
      for (double& v : row) v = d(rng) * std::pow(10.0, -6 * d(rng));
    const auto parsed = parse_series_csv(write_series_csv(s));
    EXPECT_EQ(parsed.regions, s.regions);
    EXPECT_EQ(parsed.first_frame, s.first_frame);
    EXPECT_EQ(parsed.values, quantize_like_csv(s).values);
    EXPECT_EQ(write_series_csv(parsed), write_series_csv(s));
  }
}

TEST(SeriesCsv, MalformedInputNamesLine) {
  const std::vector<std::pair<std::string, std::string>> cases{
      {"", "missing header"},
      {"frame,mouth\n", "no data rows"},
      {"time,mouth\n1,0\n", "line 1"},
      {"frame,mouth\n1,0\n2,abc\n", "line 3"},
      {"frame,mouth\n1,0\n2,0,0\n", "line 3"},
      {"frame,mouth\n1,0\n3,0\n", "line 3"},
      {"frame,mouth\n1,-1\n", "line 2"},
      {"frame,mouth\n1,nan\n", "line 2"},
      {"frame,mouth,mouth\n1,0,0\n", "line 1"},
  };
  for (const auto& [text, needle] : cases) {
    try {
      parse_series_csv(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::MalformedSeries);
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  }
}

TEST(SeriesCsv, ToleratesCrLf) {
  const auto s = parse_series_csv("frame,mouth\r\n5,1.0e-3\r\n6,2.0e-3\r\n");
  EXPECT_EQ(s.first_frame, 5);
  EXPECT_EQ(s.values.size(), 2u);
}

TEST(ReportJson, StableKeysAndNulls) {
  ExpressionReport r;
  r.per_region = {{"eyes_eyebrows", {}}, {"mouth", {3, 10, 20, 0.5}}};
  r.dominant_region = "mouth";
  r.deformed_regions = {"mouth"};
  r.first_frame = 1;
  r.last_frame = 24;
  const auto json = write_report_json(r);
  EXPECT_EQ(json,
            "{\n"
            "  \"frames\": {\n    \"first\": 1,\n    \"last\": 24\n  },\n"
            "  \"parameters\": {\n    \"theta\": 0.1,\n    \"run_length\": 3,\n    \"rho\": 0.2,\n"
            "    \"smooth_window\": 5\n  },\n"
            "  \"regions\": {\n"
            "    \"eyes_eyebrows\": {\n      \"onset\": null,\n      \"apex\": null,\n      \"offset\": null,\n"
            "      \"peak_value\": 0.0\n    },\n"
            "    \"mouth\": {\n      \"onset\": 3,\n      \"apex\": 10,\n      \"offset\": 20,\n"
            "      \"peak_value\": 0.5\n    }\n  },\n"
            "  \"dominant_region\": \"mouth\",\n"
            "  \"deformed_regions\": [\n    \"mouth\"\n  ],\n"
            "  \"deformation_detected\": true\n"
            "}\n");
}

TEST(ReportJson, NoDeformation) {
  ExpressionReport r;
  r.per_region = {{"mouth", {}}};
  const auto j = report_to_json(r);
  EXPECT_TRUE(j["dominant_region"].is_null());
  EXPECT_TRUE(j["deformed_regions"].is_array());
  EXPECT_TRUE(j["deformed_regions"].empty());
  EXPECT_FALSE(j["deformation_detected"].get<bool>());
}

TEST(SeriesSvg, StructureAndDeterminism) {
  const auto s = sample_series();
  const auto svg = render_series_svg(s);
  EXPECT_EQ(svg, render_series_svg(s));
  const std::regex polyline("<polyline ");
  EXPECT_EQ(std::distance(std::sregex_iterator(svg.begin(), svg.end(), polyline), std::sregex_iterator()), 3);
  for (const char* needle : {">frame</text>", ">mean magnitude</text>", ">eyes_eyebrows</text>", ">cheeks</text>",
                             ">mouth</text>"})
    EXPECT_NE(svg.find(needle), std::string::npos) << needle;
  EXPECT_EQ(svg.rfind("</svg>\n"), svg.size() - 7);
}

TEST(SeriesSvg, EscapesNamesAndHandlesFlatSeries) {
  IntensitySeries s;
  s.regions = {"a<b"};
  s.values = {{0.0}};
  const auto svg = render_series_svg(s);
  EXPECT_NE(svg.find("a&lt;b"), std::string::npos);
  EXPECT_EQ(svg.find("nan"), std::string::npos);
  EXPECT_THROW(render_series_svg(IntensitySeries{}), Error);
}

}  // namespace
}  // namespace faceflow
