#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vinerow/error.hpp"

namespace vinerow {

/// Dense row-major h x w raster. Origin is the top-left pixel; `row` grows
/// downward and `col` grows rightward.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(std::size_t width, std::size_t height, T fill = T{})
      : width_(width), height_(height), cells_(width * height, fill) {}
  Grid(std::size_t width, std::size_t height, std::vector<T> cells)
      : width_(width), height_(height), cells_(std::move(cells)) {
    if (cells_.size() != width_ * height_) {
      throw DimensionError("grid cell count " + std::to_string(cells_.size()) +
                           " does not match " + std::to_string(width_) + "x" +
                           std::to_string(height_));
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return cells_.size(); }

  T& operator()(std::size_t row, std::size_t col) noexcept { return cells_[row * width_ + col]; }
  const T& operator()(std::size_t row, std::size_t col) const noexcept {
    return cells_[row * width_ + col];
  }

  std::span<T> row(std::size_t r) noexcept { return {cells_.data() + r * width_, width_}; }
  std::span<const T> row(std::size_t r) const noexcept {
    return {cells_.data() + r * width_, width_};
  }

  std::span<T> cells() noexcept { return cells_; }
  std::span<const T> cells() const noexcept { return cells_; }

  bool same_shape(std::size_t w, std::size_t h) const noexcept { return width_ == w && height_ == h; }
  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  /// Column-mirrored copy (col j -> w-1-j).
  Grid flipped_columns() const {
    Grid out(width_, height_);
    for (std::size_t r = 0; r < height_; ++r) {
      auto src = row(r);
      auto dst = out.row(r);
      std::reverse_copy(src.begin(), src.end(), dst.begin());
    }
    return out;
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.cells_ == b.cells_;
  }

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<T> cells_;
};

using BinaryGrid = Grid<std::uint8_t>;

inline std::size_t popcount(const BinaryGrid& g) {
  return static_cast<std::size_t>(std::count_if(g.cells().begin(), g.cells().end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

template <typename A, typename B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": " + std::to_string(a.width()) + "x" +
                         std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                         std::to_string(b.height()));
  }
}

}  // namespace vinerow
