#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "flowpatch/raster.hpp"

namespace flowpatch {

namespace fs = std::filesystem;

namespace detail {

inline bool has_image_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  static constexpr std::array<const char*, 9> known = {
      ".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".ppm", ".pgm", ".pnm"};
  return std::find(known.begin(), known.end(), ext) != known.end();
}

inline std::uint8_t to_byte(double s) {
  // Round half up; the clamp keeps out-of-range reals from wrapping.
  double scaled = std::floor(std::clamp(s, 0.0, 1.0) * 255.0 + 0.5);
  return static_cast<std::uint8_t>(scaled);
}

inline void put_u32_le(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
         (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}

}  // namespace detail

/// Image files in `dir`, sorted lexicographically by file name.
inline std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error("not a directory: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && detail::has_image_extension(entry.path())) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) {
              return a.filename().string() < b.filename().string();
            });
  return files;
}

inline Frame read_frame(const fs::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw Error("unreadable file: " + path.string());
  Frame f(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      for (int c = 0; c < 3; ++c) f.at(x, y, c) = row[x][2 - c] / 255.0;
    }
  }
  return f;
}

/// Reads a mask; any sample above half scale becomes a hole.
inline Mask read_mask(const fs::path& path) {
  cv::Mat gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (gray.empty()) throw Error("unreadable file: " + path.string());
  Mask m(gray.cols, gray.rows);
  for (int y = 0; y < gray.rows; ++y) {
    const auto* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < gray.cols; ++x) {
      m.at(x, y) = (row[x] / 255.0 > 0.5) ? 1 : 0;
    }
  }
  return m;
}

inline void write_frame(const Frame& f, const fs::path& path) {
  cv::Mat bgr(f.height(), f.width(), CV_8UC3);
  for (int y = 0; y < f.height(); ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < f.width(); ++x) {
      for (int c = 0; c < 3; ++c) row[x][2 - c] = detail::to_byte(f.at(x, y, c));
    }
  }
  if (!cv::imwrite(path.string(), bgr)) {
    throw Error("cannot write file: " + path.string());
  }
}

inline void write_mask(const Mask& m, const fs::path& path) {
  cv::Mat gray(m.height(), m.width(), CV_8UC1);
  for (int y = 0; y < m.height(); ++y) {
    auto* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < m.width(); ++x) row[x] = m.at(x, y) ? 255 : 0;
  }
  if (!cv::imwrite(path.string(), gray)) {
    throw Error("cannot write file: " + path.string());
  }
}

/// Loads paired frame and mask directories into a sequence.
///
/// Files are matched by lexicographic position, not by name. Every failure
/// names the offending file.
inline Sequence load_sequence(const fs::path& frame_dir, const fs::path& mask_dir) {
  const auto frame_files = list_images(frame_dir);
  const auto mask_files = list_images(mask_dir);
  if (frame_files.empty()) {
    throw Error("no image files in " + frame_dir.string());
  }
  if (frame_files.size() != mask_files.size()) {
    throw Error("count mismatch: " + std::to_string(frame_files.size()) +
                " frames in " + frame_dir.string() + " vs " +
                std::to_string(mask_files.size()) + " masks in " +
                mask_dir.string());
  }
  Sequence seq;
  for (std::size_t i = 0; i < frame_files.size(); ++i) {
    Frame f = read_frame(frame_files[i]);
    Mask m = read_mask(mask_files[i]);
    if (!seq.frames.empty() && !f.same_geometry(seq.frames.front())) {
      throw Error("geometry mismatch: " + frame_files[i].string());
    }
    if (!m.same_geometry(f)) {
      throw Error("geometry mismatch: " + mask_files[i].string());
    }
    seq.frames.push_back(std::move(f));
    seq.masks.push_back(std::move(m));
  }
  return seq;
}

// Middlebury .flo: float 202021.25 ("PIEH"), int32 width, int32 height,
// then row-major interleaved (u, v) float32, all little-endian.

inline constexpr float kFloMagic = 202021.25f;

inline std::vector<char> encode_flo(const FlowField& flow) {
  std::vector<char> out;
  out.reserve(12 + flow.width() * static_cast<std::size_t>(flow.height()) * 8);
  detail::put_u32_le(out, std::bit_cast<std::uint32_t>(kFloMagic));
  detail::put_u32_le(out, static_cast<std::uint32_t>(flow.width()));
  detail::put_u32_le(out, static_cast<std::uint32_t>(flow.height()));
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      detail::put_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(flow.u(x, y))));
      detail::put_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(flow.v(x, y))));
    }
  }
  return out;
}

inline FlowField decode_flo(std::span<const char> bytes, const std::string& name) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 4) throw Error("truncated payload: " + name);
  if (std::bit_cast<float>(detail::get_u32_le(p)) != kFloMagic) {
    throw Error("wrong magic: " + name);
  }
  if (bytes.size() < 12) throw Error("truncated payload: " + name);
  const auto width = static_cast<std::int32_t>(detail::get_u32_le(p + 4));
  const auto height = static_cast<std::int32_t>(detail::get_u32_le(p + 8));
  if (width <= 0 || height <= 0 || width > (1 << 16) || height > (1 << 16)) {
    throw Error("bad dimensions in " + name);
  }
  const std::size_t need = 12 + static_cast<std::size_t>(width) * height * 8;
  if (bytes.size() < need) throw Error("truncated payload: " + name);

  FlowField flow(width, height);
  const unsigned char* q = p + 12;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x, q += 8) {
      flow.u(x, y) = std::bit_cast<float>(detail::get_u32_le(q));
      flow.v(x, y) = std::bit_cast<float>(detail::get_u32_le(q + 4));
    }
  }
  return flow;
}

inline void write_flo(const FlowField& flow, const fs::path& path) {
  const auto bytes = encode_flo(flow);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("cannot write file: " + path.string());
}

inline FlowField read_flo(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("unreadable file: " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return decode_flo(bytes, path.string());
}

}  // namespace flowpatch
