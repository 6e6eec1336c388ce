#include "hexgrid/kernel.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace hexgrid {

HexKernel::HexKernel(int size, int in_channels, int out_channels)
    : size_(size), in_(in_channels), out_(out_channels) {
  if (size < 0) throw std::invalid_argument("kernel size must be non-negative");
  if (in_channels < 1 || out_channels < 1) throw std::invalid_argument("kernel channel counts must be >= 1");
  weights_.assign(static_cast<std::size_t>(in_) * out_ * elements(), 0.0);
  bias_.assign(static_cast<std::size_t>(out_), 0.0);
}

HexKernel HexKernel::debug(int size, int in_channels, int out_channels) {
  HexKernel k(size, in_channels, out_channels);
  std::fill(k.weights_.begin(), k.weights_.end(), 1.0);
  k.debug_ = true;
  return k;
}

HexKernel HexKernel::from_weights(int size, int in_channels, int out_channels, std::vector<double> weights,
                                  std::vector<double> bias) {
  HexKernel k(size, in_channels, out_channels);
  if (weights.size() != k.weights_.size()) {
    throw std::invalid_argument("kernel expects " + std::to_string(k.weights_.size()) + " weights, got " +
                                std::to_string(weights.size()));
  }
  if (!bias.empty() && bias.size() != static_cast<std::size_t>(out_channels)) {
    throw std::invalid_argument("kernel bias must have one value per output channel");
  }
  k.weights_ = std::move(weights);
  if (!bias.empty()) k.bias_ = std::move(bias);
  return k;
}

HexKernel3d::HexKernel3d(int size, int depth, int in_channels, int out_channels)
    : size_(size), depth_(depth), in_(in_channels), out_(out_channels) {
  if (size < 0) throw std::invalid_argument("kernel size must be non-negative");
  if (depth < 1 || depth % 2 == 0) {
    throw std::invalid_argument("depth kernel extent must be odd, got " + std::to_string(depth));
  }
  if (in_channels < 1 || out_channels < 1) throw std::invalid_argument("kernel channel counts must be >= 1");
  weights_.assign(static_cast<std::size_t>(in_) * out_ * depth_ * elements(), 0.0);
  bias_.assign(static_cast<std::size_t>(out_), 0.0);
}

HexKernel HexKernel3d::slice(int z) const {
  HexKernel k(size_, in_, out_);
  for (int co = 0; co < out_; ++co)
    for (int ci = 0; ci < in_; ++ci)
      for (int e = 0; e < elements(); ++e) k.weight(co, ci, e) = weight(co, ci, z, e);
  return k;
}

}  // namespace hexgrid
