#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "faceflow/error.hpp"
#include "faceflow/raster.hpp"

namespace faceflow {

/// Grid of rows x cols cells laid over a width x height frame. Every cell
/// spans floor(width / cols) x floor(height / rows) pixels except the last
/// column and row, which absorb the remainder.
class GridSpec {
 public:
  GridSpec() = default;

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }

  int cell_width() const noexcept { return width_ / cols_; }
  int cell_height() const noexcept { return height_ / rows_; }

  /// Half-open pixel range [first, second) of column c.
  std::pair<int, int> col_range(int c) const {
    return {c * cell_width(), c == cols_ - 1 ? width_ : (c + 1) * cell_width()};
  }
  std::pair<int, int> row_range(int r) const {
    return {r * cell_height(), r == rows_ - 1 ? height_ : (r + 1) * cell_height()};
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  friend GridSpec make_grid(int width, int height, int rows, int cols);
  int width_ = 0;
  int height_ = 0;
  int rows_ = 0;
  int cols_ = 0;
};

inline GridSpec make_grid(int width, int height, int rows = 6, int cols = 4) {
  if (rows < 1 || cols < 1 || width < cols || height < rows)
    throw Error(ErrorKind::DegenerateGrid, std::to_string(rows) + "x" + std::to_string(cols) + " grid on " +
                                              std::to_string(width) + "x" + std::to_string(height) + " frame");
  GridSpec g;
  g.width_ = width;
  g.height_ = height;
  g.rows_ = rows;
  g.cols_ = cols;
  return g;
}

struct Cell {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

inline Cell cell_of_pixel(const GridSpec& g, int x, int y) {
  if (x < 0 || y < 0 || x >= g.width() || y >= g.height())
    throw Error(ErrorKind::OutOfBounds, "pixel (" + std::to_string(x) + ", " + std::to_string(y) +
                                            ") outside " + std::to_string(g.width()) + "x" +
                                            std::to_string(g.height()));
  return {std::min(y / g.cell_height(), g.rows() - 1), std::min(x / g.cell_width(), g.cols() - 1)};
}

struct Region {
  std::string name;
  std::set<Cell> cells;
};

/// Named, pairwise-disjoint cell sets. Region order is preserved and defines
/// column order in intensity series.
class RegionMap {
 public:
  RegionMap() = default;

  /// Adds a region, enforcing unique names, in-grid cells and disjointness.
  void add(Region region, int rows, int cols) {
    if (find(region.name)) throw Error(ErrorKind::ParseError, "duplicate region '" + region.name + "'");
    for (const Cell& c : region.cells) {
      if (c.row < 0 || c.col < 0 || c.row >= rows || c.col >= cols)
        throw Error(ErrorKind::CellOutOfGrid, "r" + std::to_string(c.row) + "c" + std::to_string(c.col) +
                                                  " of region '" + region.name + "' outside " +
                                                  std::to_string(rows) + "x" + std::to_string(cols) + " grid");
      for (const Region& other : regions_)
        if (other.cells.contains(c))
          throw Error(ErrorKind::OverlappingCells, "r" + std::to_string(c.row) + "c" + std::to_string(c.col) +
                                                       " shared by '" + other.name + "' and '" + region.name + "'");
    }
    regions_.push_back(std::move(region));
  }

  const Region* find(std::string_view name) const {
    for (const Region& r : regions_)
      if (r.name == name) return &r;
    return nullptr;
  }

  const Region& at(std::string_view name) const {
    if (const Region* r = find(name)) return *r;
    throw Error(ErrorKind::UnknownRegion, "no region named '" + std::string(name) + "'");
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const Region& r : regions_) out.push_back(r.name);
    return out;
  }

  const std::vector<Region>& regions() const noexcept { return regions_; }
  std::size_t size() const noexcept { return regions_.size(); }
  bool empty() const noexcept { return regions_.empty(); }

  /// True when every cell fits a rows x cols grid.
  bool fits(int rows, int cols) const {
    for (const Region& r : regions_)
      for (const Cell& c : r.cells)
        if (c.row >= rows || c.col >= cols) return false;
    return true;
  }

 private:
  std::vector<Region> regions_;
};

inline Mask region_mask(const GridSpec& g, const RegionMap& m, std::string_view name) {
  const Region& region = m.at(name);
  Mask mask(g.width(), g.height(), 0);
  for (const Cell& c : region.cells) {
    if (c.row >= g.rows() || c.col >= g.cols())
      throw Error(ErrorKind::CellOutOfGrid, "region '" + region.name + "' does not fit the grid");
    const auto [x0, x1] = g.col_range(c.col);
    const auto [y0, y1] = g.row_range(c.row);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) mask(x, y) = 1;
  }
  return mask;
}

namespace detail {

class LineScanner {
 public:
  LineScanner(std::string_view line, int line_no) : s_(line), line_no_(line_no) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no_) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
  }
  bool done() {
    skip_ws();
    return pos_ >= s_.size();
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }
  std::string word() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
      ++pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    }
    return std::string(s_.substr(start, pos_ - start));
  }
  int uint_value() {
    const std::size_t start = pos_;
    long long v = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      v = v * 10 + (s_[pos_] - '0');
      if (v > 1'000'000) fail("cell index too large");
      ++pos_;
    }
    if (pos_ == start) fail("expected unsigned integer");
    return static_cast<int>(v);
  }
  Cell cell() {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != 'r') fail("expected cell 'r<row>c<col>'");
    ++pos_;
    const int row = uint_value();
    if (pos_ >= s_.size() || s_[pos_] != 'c') fail("expected 'c' after row index");
    ++pos_;
    const int col = uint_value();
    return {row, col};
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
  int line_no_;
};

}  // namespace detail

/// Parses lines of the form `region <name> = r<row>c<col>[, r<row>c<col> ...]`.
/// '#' starts a comment; blank lines are ignored.
inline RegionMap parse_region_map(std::string_view text, int rows = 6, int cols = 4) {
  RegionMap map;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    detail::LineScanner scan(line, line_no);
    if (scan.done()) continue;
    if (scan.word() != "region") scan.fail("expected keyword 'region'");
    Region region;
    region.name = scan.word();
    if (region.name.empty()) scan.fail("expected region name");
    scan.expect('=');
    do {
      region.cells.insert(scan.cell());
    } while (scan.accept(','));
    if (!scan.done()) scan.fail("unexpected trailing text");
    try {
      map.add(std::move(region), rows, cols);
    } catch (const Error& e) {
      throw Error(e.kind(), "line " + std::to_string(line_no) + ": " + e.detail());
    }
  }
  return map;
}

/// Stand-in frontal-face layout on the 6x4 grid, identical to data/default.regions.
inline constexpr std::string_view kDefaultRegionMapText =
    "# Default facial region layout for a 6x4 (rows x cols) grid over a\n"
    "# frontal, pre-cropped face. Rows run top to bottom, columns left to right.\n"
    "region eyes_eyebrows = r1c1, r1c2, r2c1, r2c2\n"
    "region cheeks = r3c0, r3c3\n"
    "region mouth = r4c1, r4c2\n";

inline RegionMap default_region_map() { return parse_region_map(kDefaultRegionMapText, 6, 4); }

}  // namespace faceflow
