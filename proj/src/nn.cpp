#include "hexgrid/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "hexgrid/lattice.hpp"

namespace hexgrid::nn {

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::hexconv: return "hexconv";
    case LayerKind::squareconv: return "squareconv";
    case LayerKind::hexmaxpool: return "hexmaxpool";
    case LayerKind::squaremaxpool: return "squaremaxpool";
    case LayerKind::dense: return "dense";
    case LayerKind::relu: return "relu";
    case LayerKind::flatten: return "flatten";
  }
  return "?";
}

std::size_t LayerSpec::parameter_count() const {
  const auto in_sz = static_cast<std::size_t>(in);
  const auto out_sz = static_cast<std::size_t>(out);
  switch (kind) {
    case LayerKind::hexconv: return in_sz * out_sz * static_cast<std::size_t>(hex_element_count(size)) + out_sz;
    case LayerKind::squareconv: return in_sz * out_sz * static_cast<std::size_t>(size * size) + out_sz;
    case LayerKind::dense: return in_sz * out_sz + out_sz;
    default: return 0;
  }
}

namespace {

int square_pool_extent(int length, int stride) { return (length - 1) / stride + 1; }

[[noreturn]] void compose_error(const LayerSpec& layer, std::size_t index, const std::string& what) {
  throw std::invalid_argument("layer " + std::to_string(index) + " (" + to_string(layer.kind) + "): " + what);
}

}  // namespace

std::vector<Shape> ModelConfig::shapes() const {
  std::vector<Shape> out;
  Shape s = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    switch (l.kind) {
      case LayerKind::hexconv:
      case LayerKind::squareconv:
        if (l.in != s.channels) compose_error(l, i, "expects " + std::to_string(l.in) + " channels");
        if (l.kind == LayerKind::squareconv && l.size % 2 == 0) compose_error(l, i, "square kernel must be odd");
        s.channels = l.out;
        break;
      case LayerKind::hexmaxpool: {
        const StrideLattice lattice = strided_lattice(GridSpec(s.rows, s.cols), l.stride);
        s.rows = lattice.out_rows;
        s.cols = lattice.out_cols;
        break;
      }
      case LayerKind::squaremaxpool:
        s.rows = square_pool_extent(s.rows, l.stride);
        s.cols = square_pool_extent(s.cols, l.stride);
        break;
      case LayerKind::flatten:
        s = Shape{static_cast<int>(s.features()), 1, 1};
        break;
      case LayerKind::dense:
        if (s.rows != 1 || s.cols != 1) compose_error(l, i, "needs a flattened input");
        if (l.in != s.channels) compose_error(l, i, "expects " + std::to_string(l.in) + " features, got " +
                                                        std::to_string(s.channels));
        s.channels = l.out;
        break;
      case LayerKind::relu:
        break;
    }
    out.push_back(s);
  }
  return out;
}

std::size_t ModelConfig::parameter_count() const {
  shapes();
  std::size_t total = 0;
  for (const auto& l : layers) total += l.parameter_count();
  return total;
}

namespace {

std::vector<LayerSpec> small_stack(bool hex, int flat_features) {
  constexpr int channels = 16;
  std::vector<LayerSpec> layers;
  auto conv = [&](int in, int out) { return hex ? LayerSpec::hexconv(1, in, out) : LayerSpec::squareconv(3, in, out); };
  auto pool = [&] { return hex ? LayerSpec::hexmaxpool(1, 2) : LayerSpec::squaremaxpool(3, 2); };
  layers.push_back(conv(1, channels));
  layers.push_back(LayerSpec::relu());
  layers.push_back(pool());
  layers.push_back(conv(channels, channels));
  layers.push_back(LayerSpec::relu());
  layers.push_back(pool());
  layers.push_back(LayerSpec::flatten());
  layers.push_back(LayerSpec::dense(flat_features, 40));
  layers.push_back(LayerSpec::relu());
  layers.push_back(LayerSpec::dense(40, 16));
  layers.push_back(LayerSpec::relu());
  layers.push_back(LayerSpec::dense(16, 4));
  return layers;
}

// Fills in the width of the first dense layer (declared with in == 0) from
// the output of the layers before it.
ModelConfig finish(std::string name, Shape input, std::vector<LayerSpec> layers, std::uint64_t seed) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].kind != LayerKind::dense || layers[i].in != 0 || i == 0) continue;
    const ModelConfig stem{name, input, {layers.begin(), layers.begin() + static_cast<std::ptrdiff_t>(i)}, seed};
    layers[i].in = static_cast<int>(stem.shapes().back().features());
  }
  ModelConfig cfg{std::move(name), input, std::move(layers), seed};
  cfg.shapes();
  return cfg;
}

}  // namespace

ModelConfig hex_cnn_small(Shape input, std::uint64_t seed) {
  return finish("h-CNN-small", input, small_stack(true, 0), seed);
}

ModelConfig square_cnn_small(Shape input, std::uint64_t seed) {
  return finish("s-CNN-small", input, small_stack(false, 0), seed);
}

ModelConfig square_cnn_large(Shape input, std::uint64_t seed) {
  std::vector<LayerSpec> layers{
      LayerSpec::squareconv(3, input.channels, 8), LayerSpec::relu(), LayerSpec::squaremaxpool(3, 2),
      LayerSpec::squareconv(3, 8, 16),             LayerSpec::relu(), LayerSpec::squaremaxpool(3, 2),
      LayerSpec::squareconv(3, 16, 32),            LayerSpec::relu(), LayerSpec::squaremaxpool(3, 2),
      LayerSpec::flatten(),                        LayerSpec::dense(0, 1152), LayerSpec::relu(),
      LayerSpec::dense(1152, 512),                 LayerSpec::relu(), LayerSpec::dense(512, 4),
  };
  return finish("s-CNN-large", input, std::move(layers), seed);
}

// ---------------------------------------------------------------------------
// Layers

namespace {

void init_uniform(std::vector<double>& w, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : w) v = dist(rng);
}

class HexConvLayer final : public Layer {
 public:
  HexConvLayer(const LayerSpec& spec, int threads, std::mt19937_64& rng) : kernel_(spec.size, spec.in, spec.out) {
    cfg_.threads = threads;
    init_uniform(kernel_.weights(), static_cast<std::size_t>(spec.in) * kernel_.elements(), rng);
    grad_w_.assign(kernel_.weights().size(), 0.0);
    grad_b_.assign(kernel_.bias().size(), 0.0);
  }

  HexTensor forward(const HexTensor& x) override {
    input_ = x;
    return conv2d(x, kernel_, cfg_);
  }

  HexTensor backward(const HexTensor& grad_out) override {
    ConvGradients g = conv2d_backward(grad_out, input_, kernel_, cfg_);
    for (std::size_t i = 0; i < grad_w_.size(); ++i) grad_w_[i] += g.grad_w[i];
    for (std::size_t i = 0; i < grad_b_.size(); ++i) grad_b_[i] += g.grad_b[i];
    return std::move(g.grad_x);
  }

  std::vector<Param> parameters() override { return {{&kernel_.weights(), &grad_w_}, {&kernel_.bias(), &grad_b_}}; }

 private:
  HexKernel kernel_;
  ConvConfig cfg_{};
  HexTensor input_;
  std::vector<double> grad_w_;
  std::vector<double> grad_b_;
};

class HexMaxPoolLayer final : public Layer {
 public:
  HexMaxPoolLayer(const LayerSpec& spec, int threads) : size_(spec.size) {
    cfg_.threads = threads;
    cfg_.stride = spec.stride;
    cfg_.mode = OpKind::maxpool;
  }

  HexTensor forward(const HexTensor& x) override {
    input_ = x;
    return pool2d(x, size_, cfg_);
  }

  HexTensor backward(const HexTensor& grad_out) override { return pool2d_backward(grad_out, input_, size_, cfg_); }

 private:
  int size_;
  ConvConfig cfg_{};
  HexTensor input_;
};

// Same-padded k x k correlation, stride 1.
class SquareConvLayer final : public Layer {
 public:
  SquareConvLayer(const LayerSpec& spec, std::mt19937_64& rng)
      : k_(spec.size), in_(spec.in), out_(spec.out) {
    weights_.assign(static_cast<std::size_t>(out_) * in_ * k_ * k_, 0.0);
    bias_.assign(static_cast<std::size_t>(out_), 0.0);
    init_uniform(weights_, static_cast<std::size_t>(in_) * k_ * k_, rng);
    grad_w_.assign(weights_.size(), 0.0);
    grad_b_.assign(bias_.size(), 0.0);
  }

  // Each image is unrolled into a (in*k*k) x (rows*cols) patch matrix with
  // zeros outside the grid; the layer is then a matrix product.
  HexTensor forward(const HexTensor& x) override {
    grid_ = x.grid();
    const std::size_t taps = static_cast<std::size_t>(in_) * k_ * k_;
    const std::size_t cells = grid_.cells();
    patches_.assign(static_cast<std::size_t>(x.batch()) * taps * cells, 0.0);
    HexTensor out(x.batch(), out_, x.grid());
    for (int b = 0; b < x.batch(); ++b) {
      double* cols = patches_.data() + static_cast<std::size_t>(b) * taps * cells;
      unroll(x, b, cols);
      for (int co = 0; co < out_; ++co) {
        double* dst = out.plane(b, co).data();
        const double* w = weights_.data() + static_cast<std::size_t>(co) * taps;
        for (std::size_t t = 0; t < taps; ++t) {
          const double* src = cols + t * cells;
          for (std::size_t p = 0; p < cells; ++p) dst[p] += w[t] * src[p];
        }
        for (std::size_t p = 0; p < cells; ++p) dst[p] += bias_[static_cast<std::size_t>(co)];
      }
    }
    return out;
  }

  HexTensor backward(const HexTensor& grad_out) override {
    const int batch = grad_out.batch();
    const std::size_t taps = static_cast<std::size_t>(in_) * k_ * k_;
    const std::size_t cells = grid_.cells();
    HexTensor grad_x(batch, in_, grid_);
    std::vector<double> grad_cols(taps * cells);
    for (int b = 0; b < batch; ++b) {
      const double* cols = patches_.data() + static_cast<std::size_t>(b) * taps * cells;
      std::fill(grad_cols.begin(), grad_cols.end(), 0.0);
      for (int co = 0; co < out_; ++co) {
        const double* g = grad_out.plane(b, co).data();
        const double* w = weights_.data() + static_cast<std::size_t>(co) * taps;
        double* gw = grad_w_.data() + static_cast<std::size_t>(co) * taps;
        for (std::size_t p = 0; p < cells; ++p) grad_b_[static_cast<std::size_t>(co)] += g[p];
        for (std::size_t t = 0; t < taps; ++t) {
          gw[t] += dot(g, cols + t * cells, cells);
          double* gc = grad_cols.data() + t * cells;
          for (std::size_t p = 0; p < cells; ++p) gc[p] += w[t] * g[p];
        }
      }
      fold(grad_cols.data(), b, grad_x);
    }
    return grad_x;
  }

  std::vector<Param> parameters() override { return {{&weights_, &grad_w_}, {&bias_, &grad_b_}}; }

 private:

  // Visits every (tap row t, cell p, source cell) triple of image b with
  // the source inside the grid.
  template <class F>
  void for_each_tap(F&& f) const {
    const int rows = grid_.rows, cols = grid_.cols, half = k_ / 2;
    const std::size_t cells = grid_.cells();
    for (int ci = 0; ci < in_; ++ci)
      for (int a = 0; a < k_; ++a)
        for (int c = 0; c < k_; ++c) {
          const std::size_t t = (static_cast<std::size_t>(ci) * k_ + a) * k_ + c;
          const int dr = a - half, dc = c - half;
          for (int r = std::max(0, -dr); r < std::min(rows, rows - dr); ++r)
            for (int cc = std::max(0, -dc); cc < std::min(cols, cols - dc); ++cc)
              f(ci, t * cells + static_cast<std::size_t>(r) * cols + cc,
                static_cast<std::size_t>(r + dr) * cols + cc + dc);
        }
  }

  void unroll(const HexTensor& x, int b, double* cols) const {
    for_each_tap([&](int ci, std::size_t at, std::size_t src) { cols[at] = x.plane(b, ci)[src]; });
  }

  void fold(const double* grad_cols, int b, HexTensor& grad_x) const {
    for_each_tap([&](int ci, std::size_t at, std::size_t src) { grad_x.plane(b, ci)[src] += grad_cols[at]; });
  }

  // Four partial sums in a fixed order: deterministic, and not serialised on
  // one add chain.
  static double dot(const double* a, const double* b, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
      for (std::size_t l = 0; l < 4; ++l) acc[l] += a[i + l] * b[i + l];
    for (; i < n; ++i) acc[0] += a[i] * b[i];
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
  }

  int k_, in_, out_;
  std::vector<double> weights_, bias_, grad_w_, grad_b_;
  GridSpec grid_{1, 1};
  std::vector<double> patches_;
};

// k x k max pooling over in-grid cells, centres at (s*R, s*C).
class SquareMaxPoolLayer final : public Layer {
 public:
  explicit SquareMaxPoolLayer(const LayerSpec& spec) : k_(spec.size), stride_(spec.stride) {}

  HexTensor forward(const HexTensor& x) override {
    input_ = x;
    const int out_rows = square_pool_extent(x.rows(), stride_);
    const int out_cols = square_pool_extent(x.cols(), stride_);
    HexTensor out(x.batch(), x.channels(), GridSpec(out_rows, out_cols));
    argmax_.assign(out.size(), 0);
    const int half = k_ / 2;
    std::size_t o = 0;
    for (int b = 0; b < x.batch(); ++b)
      for (int c = 0; c < x.channels(); ++c) {
        const auto src = x.plane(b, c);
        for (int R = 0; R < out_rows; ++R)
          for (int C = 0; C < out_cols; ++C, ++o) {
            double best = -std::numeric_limits<double>::infinity();
            std::size_t best_at = 0;
            for (int r = std::max(0, stride_ * R - half); r <= std::min(x.rows() - 1, stride_ * R + half); ++r)
              for (int cc = std::max(0, stride_ * C - half); cc <= std::min(x.cols() - 1, stride_ * C + half); ++cc) {
                const std::size_t at = static_cast<std::size_t>(r) * x.cols() + cc;
                if (src[at] > best) best = src[at], best_at = at;
              }
            out.values()[o] = best;
            argmax_[o] = best_at;
          }
      }
    return out;
  }

  HexTensor backward(const HexTensor& grad_out) override {
    HexTensor grad_x(input_.batch(), input_.channels(), input_.grid());
    const std::size_t plane_out = grad_out.plane_size();
    for (std::size_t o = 0; o < grad_out.size(); ++o) {
      const std::size_t plane = o / plane_out;
      grad_x.values()[plane * input_.plane_size() + argmax_[o]] += grad_out.values()[o];
    }
    return grad_x;
  }

 private:
  int k_, stride_;
  HexTensor input_;
  std::vector<std::size_t> argmax_;
};

class DenseLayer final : public Layer {
 public:
  DenseLayer(const LayerSpec& spec, std::mt19937_64& rng) : in_(spec.in), out_(spec.out) {
    weights_.assign(static_cast<std::size_t>(in_) * out_, 0.0);
    bias_.assign(static_cast<std::size_t>(out_), 0.0);
    init_uniform(weights_, static_cast<std::size_t>(in_), rng);
    grad_w_.assign(weights_.size(), 0.0);
    grad_b_.assign(bias_.size(), 0.0);
  }

  HexTensor forward(const HexTensor& x) override {
    input_ = x;
    HexTensor out(x.batch(), out_, GridSpec(1, 1));
    for (int b = 0; b < x.batch(); ++b) {
      const double* in = x.values().data() + static_cast<std::size_t>(b) * in_;
      for (int o = 0; o < out_; ++o) {
        const double* w = weights_.data() + static_cast<std::size_t>(o) * in_;
        double acc = bias_[static_cast<std::size_t>(o)];
        for (int i = 0; i < in_; ++i) acc += w[i] * in[i];
        out.values()[static_cast<std::size_t>(b) * out_ + o] = acc;
      }
    }
    return out;
  }

  HexTensor backward(const HexTensor& grad_out) override {
    HexTensor grad_x(input_.batch(), in_, GridSpec(1, 1));
    for (int b = 0; b < input_.batch(); ++b) {
      const double* in = input_.values().data() + static_cast<std::size_t>(b) * in_;
      double* gx = grad_x.values().data() + static_cast<std::size_t>(b) * in_;
      for (int o = 0; o < out_; ++o) {
        const double g = grad_out.values()[static_cast<std::size_t>(b) * out_ + o];
        if (g == 0.0) continue;
        grad_b_[static_cast<std::size_t>(o)] += g;
        const double* w = weights_.data() + static_cast<std::size_t>(o) * in_;
        double* gw = grad_w_.data() + static_cast<std::size_t>(o) * in_;
        for (int i = 0; i < in_; ++i) {
          gw[i] += g * in[i];
          gx[i] += g * w[i];
        }
      }
    }
    return grad_x;
  }

  std::vector<Param> parameters() override { return {{&weights_, &grad_w_}, {&bias_, &grad_b_}}; }

 private:
  int in_, out_;
  std::vector<double> weights_, bias_, grad_w_, grad_b_;
  HexTensor input_;
};

class ReluLayer final : public Layer {
 public:
  HexTensor forward(const HexTensor& x) override {
    input_ = x;
    HexTensor out = x;
    for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
    return out;
  }

  HexTensor backward(const HexTensor& grad_out) override {
    HexTensor grad = grad_out;
    for (std::size_t i = 0; i < grad.size(); ++i)
      if (!(input_.values()[i] > 0.0)) grad.values()[i] = 0.0;
    return grad;
  }

 private:
  HexTensor input_;
};

class FlattenLayer final : public Layer {
 public:
  HexTensor forward(const HexTensor& x) override {
    shape_ = x;
    HexTensor out(x.batch(), x.channels() * x.rows() * x.cols(), GridSpec(1, 1));
    out.values() = x.values();
    return out;
  }

  HexTensor backward(const HexTensor& grad_out) override {
    HexTensor grad(shape_.batch(), shape_.channels(), shape_.grid());
    grad.values() = grad_out.values();
    return grad;
  }

 private:
  HexTensor shape_;
};

}  // namespace

Model::Model(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.shapes();
  std::mt19937_64 rng(cfg_.seed);
  for (const LayerSpec& spec : cfg_.layers) {
    switch (spec.kind) {
      case LayerKind::hexconv: layers_.push_back(std::make_unique<HexConvLayer>(spec, cfg_.threads, rng)); break;
      case LayerKind::squareconv: layers_.push_back(std::make_unique<SquareConvLayer>(spec, rng)); break;
      case LayerKind::hexmaxpool: layers_.push_back(std::make_unique<HexMaxPoolLayer>(spec, cfg_.threads)); break;
      case LayerKind::squaremaxpool: layers_.push_back(std::make_unique<SquareMaxPoolLayer>(spec)); break;
      case LayerKind::dense: layers_.push_back(std::make_unique<DenseLayer>(spec, rng)); break;
      case LayerKind::relu: layers_.push_back(std::make_unique<ReluLayer>()); break;
      case LayerKind::flatten: layers_.push_back(std::make_unique<FlattenLayer>()); break;
    }
  }
}

HexTensor Model::forward(const HexTensor& x) {
  if (x.channels() != cfg_.input.channels || x.rows() != cfg_.input.rows || x.cols() != cfg_.input.cols) {
    throw std::invalid_argument(cfg_.name + ": input shape does not match the first layer");
  }
  HexTensor h = x;
  for (auto& layer : layers_) h = layer->forward(h);
  return h;
}

void Model::backward(const HexTensor& grad_logits) {
  HexTensor g = grad_logits;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
}

void Model::zero_grad() {
  for (Param& p : parameters()) std::fill(p.grad->begin(), p.grad->end(), 0.0);
}

std::vector<Param> Model::parameters() {
  std::vector<Param> out;
  for (auto& layer : layers_)
    for (const Param& p : layer->parameters()) out.push_back(p);
  return out;
}

std::size_t Model::parameter_count() {
  std::size_t n = 0;
  for (const Param& p : parameters()) n += p.value->size();
  return n;
}

Model init_model(const ModelConfig& cfg) { return Model(cfg); }

LossResult softmax_cross_entropy(const HexTensor& logits, std::span<const int> labels) {
  const int batch = logits.batch();
  const int classes = logits.channels();
  if (static_cast<int>(labels.size()) != batch) throw std::invalid_argument("one label per sample required");
  LossResult result{0.0, HexTensor(batch, classes, GridSpec(1, 1))};
  for (int b = 0; b < batch; ++b) {
    const int label = labels[static_cast<std::size_t>(b)];
    if (label < 0 || label >= classes) throw std::out_of_range("label " + std::to_string(label) + " out of range");
    const double* z = logits.values().data() + static_cast<std::size_t>(b) * classes;
    double* g = result.grad.values().data() + static_cast<std::size_t>(b) * classes;
    const double top = *std::max_element(z, z + classes);
    double sum = 0.0;
    for (int c = 0; c < classes; ++c) sum += std::exp(z[c] - top);
    const double log_sum = std::log(sum) + top;
    result.loss += log_sum - z[label];
    for (int c = 0; c < classes; ++c) g[c] = std::exp(z[c] - log_sum) / batch;
    g[label] -= 1.0 / batch;
  }
  result.loss /= batch;
  return result;
}

int predicted_class(const HexTensor& logits, int sample) {
  const int classes = logits.channels();
  const double* z = logits.values().data() + static_cast<std::size_t>(sample) * classes;
  return static_cast<int>(std::max_element(z, z + classes) - z);
}

double accuracy(const HexTensor& logits, std::span<const int> labels) {
  int correct = 0;
  for (int b = 0; b < logits.batch(); ++b) correct += predicted_class(logits, b) == labels[static_cast<std::size_t>(b)];
  return static_cast<double>(correct) / logits.batch();
}

}  // namespace hexgrid::nn
