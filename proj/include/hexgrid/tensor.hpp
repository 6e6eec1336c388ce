#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hexgrid/hexcore.hpp"

namespace hexgrid {

/// Batched multi-channel values on an offset-addressed grid, stored
/// row-major as (batch, channels, rows, cols).
///
/// Cells without a physical counterpart are ordinary data. The nn module also
/// uses this container for square-grid and flat activations, in which case
/// the grid only carries the shape.
template <class T>
class BasicHexTensor {
 public:
  BasicHexTensor() = default;
  BasicHexTensor(int batch, int channels, GridSpec grid, T fill = T{})
      : batch_(batch), channels_(channels), grid_(grid) {
    if (batch < 1 || channels < 1) throw std::invalid_argument("tensor batch and channels must be >= 1");
    values_.assign(static_cast<std::size_t>(batch) * static_cast<std::size_t>(channels) * grid.cells(), fill);
  }

  int batch() const { return batch_; }
  int channels() const { return channels_; }
  int rows() const { return grid_.rows; }
  int cols() const { return grid_.cols; }
  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::size_t plane_size() const { return grid_.cells(); }

  std::vector<T>& values() & { return values_; }
  const std::vector<T>& values() const& { return values_; }
  std::vector<T> values() && { return std::move(values_); }

  std::size_t index(int b, int c, int r, int col) const {
    return ((static_cast<std::size_t>(b) * channels_ + c) * grid_.rows + r) * grid_.cols + col;
  }
  T& operator()(int b, int c, int r, int col) { return values_[index(b, c, r, col)]; }
  const T& operator()(int b, int c, int r, int col) const { return values_[index(b, c, r, col)]; }

  /// One (batch, channel) plane.
  std::span<T> plane(int b, int c) { return {values_.data() + index(b, c, 0, 0), plane_size()}; }
  std::span<const T> plane(int b, int c) const { return {values_.data() + index(b, c, 0, 0), plane_size()}; }

  bool same_shape(const BasicHexTensor& o) const {
    return batch_ == o.batch_ && channels_ == o.channels_ && grid_.rows == o.grid_.rows && grid_.cols == o.grid_.cols;
  }

 private:
  int batch_ = 0;
  int channels_ = 0;
  GridSpec grid_{};
  std::vector<T> values_;
};

using HexTensor = BasicHexTensor<double>;
using HexTensorF = BasicHexTensor<float>;

/// Stack of hexagonal planes along an equidistant depth axis:
/// (batch, channels, depth, rows, cols).
class HexVolume {
 public:
  HexVolume() = default;
  HexVolume(int batch, int channels, int depth, GridSpec grid, double fill = 0.0)
      : batch_(batch), channels_(channels), depth_(depth), grid_(grid) {
    if (batch < 1 || channels < 1 || depth < 1) throw std::invalid_argument("volume dimensions must be >= 1");
    values_.assign(static_cast<std::size_t>(batch) * channels * depth * grid.cells(), fill);
  }

  int batch() const { return batch_; }
  int channels() const { return channels_; }
  int depth() const { return depth_; }
  const GridSpec& grid() const { return grid_; }
  std::vector<double>& values() & { return values_; }
  const std::vector<double>& values() const& { return values_; }
  std::vector<double> values() && { return std::move(values_); }

  std::size_t index(int b, int c, int z, int r, int col) const {
    return (((static_cast<std::size_t>(b) * channels_ + c) * depth_ + z) * grid_.rows + r) * grid_.cols + col;
  }
  double& operator()(int b, int c, int z, int r, int col) { return values_[index(b, c, z, r, col)]; }
  double operator()(int b, int c, int z, int r, int col) const { return values_[index(b, c, z, r, col)]; }

  /// Copy of depth slice z as a 2-D tensor.
  HexTensor slice(int z) const {
    HexTensor out(batch_, channels_, grid_);
    for (int b = 0; b < batch_; ++b)
      for (int c = 0; c < channels_; ++c)
        for (int r = 0; r < grid_.rows; ++r)
          for (int col = 0; col < grid_.cols; ++col) out(b, c, r, col) = (*this)(b, c, z, r, col);
    return out;
  }

 private:
  int batch_ = 0;
  int channels_ = 0;
  int depth_ = 0;
  GridSpec grid_{};
  std::vector<double> values_;
};

}  // namespace hexgrid
