#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hexgrid/hexcore.hpp"

namespace hexgrid {

enum class PoolMode { max, avg };

/// Hexagonal filter bank. Weights are indexed (out_channel, in_channel,
/// element) with elements in KernelLayout order.
class HexKernel {
 public:
  HexKernel() = default;
  /// Zero weights and zero bias.
  HexKernel(int size, int in_channels, int out_channels);

  /// All-ones weights, zero bias ("debug" kernel).
  static HexKernel debug(int size, int in_channels = 1, int out_channels = 1);
  /// Takes ownership of explicit weights; bias may be empty (treated as zero).
  static HexKernel from_weights(int size, int in_channels, int out_channels, std::vector<double> weights,
                                std::vector<double> bias = {});

  int size() const { return size_; }
  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int elements() const { return hex_element_count(size_); }
  bool is_debug() const { return debug_; }

  double& weight(int co, int ci, int e) { return weights_[offset(co, ci) + static_cast<std::size_t>(e)]; }
  double weight(int co, int ci, int e) const { return weights_[offset(co, ci) + static_cast<std::size_t>(e)]; }
  std::span<const double> weights(int co, int ci) const {
    return {weights_.data() + offset(co, ci), static_cast<std::size_t>(elements())};
  }

  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& bias() { return bias_; }
  const std::vector<double>& bias() const { return bias_; }

 private:
  std::size_t offset(int co, int ci) const {
    return (static_cast<std::size_t>(co) * in_ + ci) * static_cast<std::size_t>(elements());
  }

  int size_ = 0;
  int in_ = 1;
  int out_ = 1;
  bool debug_ = false;
  std::vector<double> weights_ = {0.0};
  std::vector<double> bias_ = {0.0};
};

/// Hexagonal kernel replicated over an odd number of depth slices, each slice
/// carrying independent weights: (out, in, depth_slice, element).
class HexKernel3d {
 public:
  HexKernel3d(int size, int depth, int in_channels, int out_channels);

  int size() const { return size_; }
  int depth() const { return depth_; }
  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int elements() const { return hex_element_count(size_); }

  double& weight(int co, int ci, int z, int e) { return weights_[offset(co, ci, z) + static_cast<std::size_t>(e)]; }
  double weight(int co, int ci, int z, int e) const { return weights_[offset(co, ci, z) + static_cast<std::size_t>(e)]; }
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& bias() { return bias_; }
  const std::vector<double>& bias() const { return bias_; }

  /// The 2-D kernel formed by depth slice z (zero bias).
  HexKernel slice(int z) const;

 private:
  std::size_t offset(int co, int ci, int z) const {
    return ((static_cast<std::size_t>(co) * in_ + ci) * depth_ + z) * static_cast<std::size_t>(elements());
  }

  int size_;
  int depth_;
  int in_;
  int out_;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

}  // namespace hexgrid
