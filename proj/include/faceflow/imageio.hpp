#pragma once

// Binary netpbm (P5 / P6) decoding, grayscale conversion, and frame
// sequence loading.

#include <fnmatch.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "faceflow/error.hpp"
#include "faceflow/raster.hpp"

namespace faceflow {

/// Interleaved 8-bit RGB image; data holds 3 * width * height bytes.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;
};

/// Ordered frames with uniform dimensions.
struct FrameSequence {
  std::vector<Image> frames;

  std::size_t size() const noexcept { return frames.size(); }
  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
};

namespace detail {

struct NetpbmHeader {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t payload_offset = 0;
};

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_separators() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long long number(const char* field) {
    skip_separators();
    const std::size_t start = pos_;
    long long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (1LL << 31)) throw Error(ErrorKind::MalformedHeader, std::string(field) + " out of range");
      ++pos_;
    }
    if (pos_ == start) throw Error(ErrorKind::MalformedHeader, std::string("non-numeric ") + field);
    return value;
  }

  std::size_t pos() const noexcept { return pos_; }
  void advance(std::size_t n) { pos_ += n; }
  bool at_end() const noexcept { return pos_ >= bytes_.size(); }
  std::uint8_t peek() const { return bytes_[pos_]; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

inline NetpbmHeader parse_netpbm_header(std::span<const std::uint8_t> bytes, char kind,
                                        std::size_t channels) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != static_cast<std::uint8_t>(kind))
    throw Error(ErrorKind::MalformedHeader, std::string("expected magic P") + kind);
  HeaderReader reader(bytes);
  reader.advance(2);
  if (reader.at_end() || !(std::isspace(reader.peek()) || reader.peek() == '#'))
    throw Error(ErrorKind::MalformedHeader, "missing separator after magic");

  NetpbmHeader h;
  const long long width = reader.number("width");
  const long long height = reader.number("height");
  const long long maxval = reader.number("maxval");
  if (width < 1 || height < 1) throw Error(ErrorKind::MalformedHeader, "zero image dimension");
  if (maxval < 1) throw Error(ErrorKind::MalformedHeader, "maxval must be positive");
  if (maxval > 255)
    throw Error(ErrorKind::UnsupportedMaxval, "maxval " + std::to_string(maxval) + " exceeds 255");
  // Exactly one whitespace byte separates maxval from the raster.
  if (reader.at_end() || !std::isspace(reader.peek()))
    throw Error(ErrorKind::MalformedHeader, "missing separator after maxval");
  reader.advance(1);

  h.width = static_cast<int>(width);
  h.height = static_cast<int>(height);
  h.maxval = static_cast<int>(maxval);
  h.payload_offset = reader.pos();

  const std::size_t need = channels * static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const std::size_t have = bytes.size() - h.payload_offset;
  if (have < need)
    throw Error(ErrorKind::TruncatedPayload,
                "payload has " + std::to_string(have) + " bytes, expected " + std::to_string(need));
  return h;
}

}  // namespace detail

inline Image decode_pgm(std::span<const std::uint8_t> bytes) {
  const auto h = detail::parse_netpbm_header(bytes, '5', 1);
  Image img(h.width, h.height);
  const auto payload = bytes.subspan(h.payload_offset);
  auto out = img.pixels();
  const double scale = static_cast<double>(h.maxval);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(1.0, payload[i] / scale);
  return img;
}

inline RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
  const auto h = detail::parse_netpbm_header(bytes, '6', 3);
  RgbImage img{h.width, h.height, {}};
  const auto payload = bytes.subspan(h.payload_offset, 3 * static_cast<std::size_t>(h.width) * h.height);
  img.data.assign(payload.begin(), payload.end());
  return img;
}

/// Quantizes to 8 bits (round to nearest) and emits a P5 buffer.
inline std::vector<std::uint8_t> encode_pgm(const Image& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.size());
  for (double v : img.pixels())
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  return out;
}

/// BT.601 luma, normalized to [0, 1].
inline Image rgb_to_gray(const RgbImage& rgb) {
  Image img(rgb.width, rgb.height);
  auto out = img.pixels();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint8_t r = rgb.data[3 * i];
    const std::uint8_t g = rgb.data[3 * i + 1];
    const std::uint8_t b = rgb.data[3 * i + 2];
    if (r == g && g == b) {
      out[i] = r / 255.0;
    } else {
      out[i] = std::clamp((0.299 * r + 0.587 * g + 0.114 * b) / 255.0, 0.0, 1.0);
    }
  }
  return img;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

/// Decodes a P5 or P6 buffer (P6 is converted with rgb_to_gray).
inline Image decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return rgb_to_gray(decode_ppm(bytes));
  return decode_pgm(bytes);
}

/// Natural ordering: digit runs compare numerically, so "f2" < "f10".
inline bool natural_less(std::string_view a, std::string_view b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i]));
    const bool db = std::isdigit(static_cast<unsigned char>(b[j]));
    if (da && db) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      auto na = a.substr(i, ie - i);
      auto nb = b.substr(j, je - j);
      while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
      while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  if ((a.size() - i) != (b.size() - j)) return (a.size() - i) < (b.size() - j);
  return a < b;  // e.g. "f01" vs "f1": fall back to plain comparison for a total order
}

/// Lists regular files in dir whose names match the shell glob, in natural order.
inline std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir,
                                                      const std::string& pattern) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorKind::Io, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (fnmatch(pattern.c_str(), name.c_str(), 0) == 0) files.push_back(entry.path());
  }
  if (ec) throw Error(ErrorKind::Io, "cannot list " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return natural_less(a.filename().string(), b.filename().string());
  });
  return files;
}

inline FrameSequence load_sequence(const std::filesystem::path& dir, const std::string& pattern = "*.p[gp]m") {
  const auto files = list_frames(dir, pattern);
  if (files.empty())
    throw Error(ErrorKind::EmptySequence, "no files matching '" + pattern + "' in " + dir.string());

  FrameSequence seq;
  seq.frames.reserve(files.size());
  for (const auto& file : files) {
    try {
      seq.frames.push_back(decode_frame(read_file_bytes(file)));
    } catch (const Error& e) {
      throw Error(e.kind(), file.filename().string() + ": " + e.detail());
    }
    const Image& f = seq.frames.back();
    if (!f.same_shape(seq.frames.front()))
      throw Error(ErrorKind::DimensionMismatch,
                  file.filename().string() + " is " + std::to_string(f.width()) + "x" +
                      std::to_string(f.height()) + ", expected " + std::to_string(seq.width()) + "x" +
                      std::to_string(seq.height()));
  }
  return seq;
}

}  // namespace faceflow
