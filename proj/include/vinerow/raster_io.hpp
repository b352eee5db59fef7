#pragma once

// On-disk formats for offline replay:
//  - masks: binary PGM (P5), maxval 255, pixel values restricted to {0, 255}
//  - depth: binary PGM (P5), maxval 65535, big-endian millimeters, 0 = invalid
//  - depth: raw float32 little-endian, 8-byte header (u32 width, u32 height)
//  - manifest: one "frame_index mask_path depth_path [class]" line per frame

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vinerow/error.hpp"
#include "vinerow/raster.hpp"

namespace vinerow::raster {

struct RasterBounds {
  std::size_t max_width = 8192;
  std::size_t max_height = 8192;
};

namespace detail {

inline std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& header,
                       const std::vector<unsigned char>& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

struct PgmHeader {
  std::size_t width = 0;
  std::size_t height = 0;
  unsigned maxval = 0;
  std::size_t data_offset = 0;
};

// Parses "P5 <w> <h> <maxval>" with comments, followed by a single whitespace.
inline PgmHeader parse_pgm_header(const std::vector<char>& bytes, const std::string& name) {
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) { throw FormatError(name + ": " + why); };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') fail("not a binary PGM (P5)");
  pos = 2;
  auto next_token = [&]() -> unsigned long {
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) fail("malformed header");
    return std::stoul(std::string(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                                  bytes.begin() + static_cast<std::ptrdiff_t>(pos)));
  };
  PgmHeader h;
  h.width = next_token();
  h.height = next_token();
  h.maxval = static_cast<unsigned>(next_token());
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    fail("malformed header");
  }
  h.data_offset = pos + 1;
  if (h.maxval == 0 || h.maxval > 65535) fail("unsupported maxval");
  return h;
}

inline void check_bounds(std::size_t w, std::size_t h, const RasterBounds& bounds,
                         const std::string& name) {
  if (w == 0 || h == 0 || w > bounds.max_width || h > bounds.max_height) {
    throw FormatError(name + ": dimension " + std::to_string(w) + "x" + std::to_string(h) +
                      " outside configured bounds");
  }
}

inline std::string pgm_header(std::size_t w, std::size_t h, unsigned maxval) {
  return "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n" + std::to_string(maxval) +
         "\n";
}

}  // namespace detail

inline SegMap load_mask(const std::filesystem::path& path, std::int64_t timestamp = 0,
                        const RasterBounds& bounds = {}) {
  const auto bytes = detail::read_file(path);
  const auto name = path.string();
  const auto h = detail::parse_pgm_header(bytes, name);
  if (h.maxval != 255) throw FormatError(name + ": mask must be 8-bit (maxval 255)");
  detail::check_bounds(h.width, h.height, bounds, name);
  if (bytes.size() - h.data_offset != h.width * h.height) {
    throw FormatError(name + ": pixel payload size mismatch");
  }
  SegMap out{BinaryGrid(h.width, h.height), timestamp};
  auto dst = out.cells.cells();
  for (std::size_t k = 0; k < dst.size(); ++k) {
    const auto v = static_cast<unsigned char>(bytes[h.data_offset + k]);
    if (v != 0 && v != 255) {
      throw FormatError(name + ": mask pixel " + std::to_string(k) + " has value " +
                        std::to_string(v) + " (expected 0 or 255)");
    }
    dst[k] = v == 255 ? 1 : 0;
  }
  return out;
}

inline void save_mask(const std::filesystem::path& path, const SegMap& mask) {
  std::vector<unsigned char> body(mask.cells.size());
  auto src = mask.cells.cells();
  for (std::size_t k = 0; k < body.size(); ++k) body[k] = src[k] != 0 ? 255 : 0;
  detail::write_file(path, detail::pgm_header(mask.width(), mask.height(), 255), body);
}

/// Loads either a 16-bit millimeter PGM or a raw float32 raster (detected by
/// magic bytes). Invalid pixels come back as the map's invalid marker (0).
inline DepthMap load_depth(const std::filesystem::path& path, const RasterBounds& bounds = {}) {
  const auto bytes = detail::read_file(path);
  const auto name = path.string();
  DepthMap out;
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') {
    const auto h = detail::parse_pgm_header(bytes, name);
    if (h.maxval != 65535) throw FormatError(name + ": depth PGM must be 16-bit (maxval 65535)");
    detail::check_bounds(h.width, h.height, bounds, name);
    if (bytes.size() - h.data_offset != 2 * h.width * h.height) {
      throw FormatError(name + ": pixel payload size mismatch");
    }
    out.cells = Grid<float>(h.width, h.height);
    auto dst = out.cells.cells();
    for (std::size_t k = 0; k < dst.size(); ++k) {
      const auto hi = static_cast<unsigned char>(bytes[h.data_offset + 2 * k]);
      const auto lo = static_cast<unsigned char>(bytes[h.data_offset + 2 * k + 1]);
      const unsigned mm = (hi << 8U) | lo;
      dst[k] = static_cast<float>(mm) / 1000.0F;
    }
    return out;
  }
  if (bytes.size() < 8) throw FormatError(name + ": truncated raw depth header");
  std::uint32_t w = 0;
  std::uint32_t hgt = 0;
  auto read_u32 = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int b = 3; b >= 0; --b) v = (v << 8U) | static_cast<unsigned char>(bytes[off + b]);
    return v;
  };
  w = read_u32(0);
  hgt = read_u32(4);
  detail::check_bounds(w, hgt, bounds, name);
  if (bytes.size() - 8 != 4ULL * w * hgt) throw FormatError(name + ": pixel payload size mismatch");
  out.cells = Grid<float>(w, hgt);
  auto dst = out.cells.cells();
  for (std::size_t k = 0; k < dst.size(); ++k) {
    const std::uint32_t bits = read_u32(8 + 4 * k);
    dst[k] = std::bit_cast<float>(bits);
  }
  return out;
}

/// 16-bit millimeter PGM. Values are rounded to the nearest millimeter;
/// invalid cells and depths beyond 65.534 m are written as 0.
inline void save_depth_mm(const std::filesystem::path& path, const DepthMap& depth) {
  std::vector<unsigned char> body(2 * depth.cells.size());
  auto src = depth.cells.cells();
  for (std::size_t k = 0; k < src.size(); ++k) {
    unsigned mm = 0;
    if (depth.valid(src[k])) {
      const double r = std::round(static_cast<double>(src[k]) * 1000.0);
      mm = r > 65535.0 ? 0U : static_cast<unsigned>(r);
    }
    body[2 * k] = static_cast<unsigned char>(mm >> 8U);
    body[2 * k + 1] = static_cast<unsigned char>(mm & 0xFFU);
  }
  detail::write_file(path, detail::pgm_header(depth.width(), depth.height(), 65535), body);
}

/// Raw float32 raster; bit-exact. Invalid cells are written as 0.
inline void save_depth_raw(const std::filesystem::path& path, const DepthMap& depth) {
  std::vector<unsigned char> body(8 + 4 * depth.cells.size());
  auto put_u32 = [&](std::size_t off, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) body[off + b] = static_cast<unsigned char>(v >> (8U * b));
  };
  put_u32(0, static_cast<std::uint32_t>(depth.width()));
  put_u32(4, static_cast<std::uint32_t>(depth.height()));
  auto src = depth.cells.cells();
  for (std::size_t k = 0; k < src.size(); ++k) {
    const float v = depth.valid(src[k]) ? src[k] : 0.0F;
    put_u32(8 + 4 * k, std::bit_cast<std::uint32_t>(v));
  }
  detail::write_file(path, "", body);
}

inline std::string frame_filename(const std::string& prefix, std::int64_t index,
                                  const std::string& ext) {
  std::ostringstream os;
  os << prefix << "_" << std::setw(6) << std::setfill('0') << index << ext;
  return os.str();
}

struct ManifestEntry {
  std::int64_t frame_index = 0;
  std::filesystem::path mask_path;
  std::filesystem::path depth_path;
  std::optional<std::string> label;
};

/// Relative paths are resolved against the manifest's directory. Blank lines
/// and '#' comments are ignored.
inline std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  const auto base = path.parent_path();
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const auto where = path.string() + ":" + std::to_string(lineno);
    if (tok.size() < 3 || tok.size() > 4) {
      throw FormatError(where + ": expected 'frame_index mask_path depth_path [class]'");
    }
    ManifestEntry e;
    try {
      std::size_t used = 0;
      e.frame_index = std::stoll(tok[0], &used);
      if (used != tok[0].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw FormatError(where + ": bad frame index '" + tok[0] + "'");
    }
    auto resolve = [&](const std::string& p) {
      std::filesystem::path fp(p);
      return fp.is_absolute() ? fp : base / fp;
    };
    e.mask_path = resolve(tok[1]);
    e.depth_path = resolve(tok[2]);
    if (tok.size() == 4) e.label = tok[3];
    out.push_back(std::move(e));
  }
  return out;
}

inline void save_manifest(const std::filesystem::path& path,
                          const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write manifest " + path.string());
  out << "# frame_index mask_path depth_path [class]\n";
  for (const auto& e : entries) {
    out << e.frame_index << ' ' << e.mask_path.generic_string() << ' '
        << e.depth_path.generic_string();
    if (e.label) out << ' ' << *e.label;
    out << '\n';
  }
}

}  // namespace vinerow::raster
