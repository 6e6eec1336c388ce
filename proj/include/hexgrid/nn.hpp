#pragma once

// Minimal reverse-mode training stack: a sequential model of layers with
// hand-written backward passes. Activations are HexTensor values; square-grid
// and flat (dense) activations reuse the container with the grid acting only
// as a shape, dense activations having shape (batch, features, 1, 1).

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hexgrid/engine.hpp"
#include "hexgrid/tensor.hpp"

namespace hexgrid::nn {

enum class LayerKind { hexconv, squareconv, hexmaxpool, squaremaxpool, dense, relu, flatten };

const char* to_string(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  int size = 0;    ///< ring count n (hex) or odd side length k (square)
  int stride = 1;  ///< pooling layers
  int in = 0;      ///< input channels or features
  int out = 0;     ///< output channels or features

  static LayerSpec hexconv(int n, int in, int out) { return {LayerKind::hexconv, n, 1, in, out}; }
  static LayerSpec squareconv(int k, int in, int out) { return {LayerKind::squareconv, k, 1, in, out}; }
  static LayerSpec hexmaxpool(int n, int stride) { return {LayerKind::hexmaxpool, n, stride, 0, 0}; }
  static LayerSpec squaremaxpool(int k, int stride) { return {LayerKind::squaremaxpool, k, stride, 0, 0}; }
  static LayerSpec dense(int in, int out) { return {LayerKind::dense, 0, 1, in, out}; }
  static LayerSpec relu() { return {LayerKind::relu, 0, 1, 0, 0}; }
  static LayerSpec flatten() { return {LayerKind::flatten, 0, 1, 0, 0}; }

  std::size_t parameter_count() const;
};

/// Per-sample activation shape.
struct Shape {
  int channels = 1;
  int rows = 1;
  int cols = 1;

  std::size_t features() const { return static_cast<std::size_t>(channels) * rows * cols; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

struct ModelConfig {
  std::string name;
  Shape input;
  std::vector<LayerSpec> layers;
  std::uint64_t seed = 0;
  int threads = 1;  ///< worker cap inside hex layers; results do not depend on it

  /// Closed-form count; throws std::invalid_argument if layers do not compose.
  std::size_t parameter_count() const;
  /// Activation shape after every layer; throws if layers do not compose.
  std::vector<Shape> shapes() const;
};

/// h-CNN / s-CNN architectures used by the grid comparison experiment.
ModelConfig hex_cnn_small(Shape input, std::uint64_t seed);
ModelConfig square_cnn_small(Shape input, std::uint64_t seed);
ModelConfig square_cnn_large(Shape input, std::uint64_t seed);

struct Param {
  std::vector<double>* value;
  std::vector<double>* grad;
};

class Layer {
 public:
  virtual ~Layer() = default;
  /// Caches whatever backward() needs.
  virtual HexTensor forward(const HexTensor& x) = 0;
  /// Returns the input gradient and accumulates parameter gradients.
  virtual HexTensor backward(const HexTensor& grad_out) = 0;
  virtual std::vector<Param> parameters() { return {}; }
};

class Model {
 public:
  explicit Model(const ModelConfig& cfg);

  HexTensor forward(const HexTensor& x);
  void backward(const HexTensor& grad_logits);
  void zero_grad();

  std::vector<Param> parameters();
  std::size_t parameter_count();
  const ModelConfig& config() const { return cfg_; }
  std::vector<std::unique_ptr<Layer>>& layers() { return layers_; }

 private:
  ModelConfig cfg_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Builds the layers; weights uniform in +-sqrt(1/fan_in) from a generator
/// seeded with cfg.seed, biases zero.
Model init_model(const ModelConfig& cfg);

struct LossResult {
  double loss = 0.0;
  HexTensor grad;  ///< d loss / d logits
};

/// Mean softmax cross-entropy over the batch. Logits have shape
/// (batch, classes, 1, 1). Throws std::out_of_range for bad labels.
LossResult softmax_cross_entropy(const HexTensor& logits, std::span<const int> labels);

/// Index of the largest logit, lowest index on ties.
int predicted_class(const HexTensor& logits, int sample);

/// Fraction of samples whose predicted class equals the label.
double accuracy(const HexTensor& logits, std::span<const int> labels);

}  // namespace hexgrid::nn
