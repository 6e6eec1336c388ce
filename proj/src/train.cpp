#include "hexgrid/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace hexgrid::nn {

HexTensor Dataset::gather(const std::vector<int>& indices) const {
  HexTensor batch(static_cast<int>(indices.size()), images.channels(), images.grid());
  const std::size_t sample = static_cast<std::size_t>(images.channels()) * images.plane_size();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = images.values().begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(indices[i]) * sample);
    std::copy_n(src, sample, batch.values().begin() + static_cast<std::ptrdiff_t>(i * sample));
  }
  return batch;
}

bool LearningCurve::reached(double target) const {
  return std::any_of(epochs.begin(), epochs.end(), [&](const EpochStats& e) { return e.accuracy >= target; });
}

EpochStats evaluate(Model& model, const Dataset& data, int batch_size) {
  EpochStats stats;
  int correct = 0;
  double loss_sum = 0.0;
  for (int start = 0; start < data.size(); start += batch_size) {
    const int count = std::min(batch_size, data.size() - start);
    std::vector<int> idx(static_cast<std::size_t>(count));
    std::iota(idx.begin(), idx.end(), start);
    const HexTensor logits = model.forward(data.gather(idx));
    const std::vector<int> labels(data.labels.begin() + start, data.labels.begin() + start + count);
    loss_sum += softmax_cross_entropy(logits, labels).loss * count;
    for (int b = 0; b < count; ++b) correct += predicted_class(logits, b) == labels[static_cast<std::size_t>(b)];
  }
  stats.accuracy = static_cast<double>(correct) / data.size();
  stats.loss = loss_sum / data.size();
  return stats;
}

LearningCurve train(Model& model, const TrainConfig& cfg, const Dataset& data, std::uint64_t shuffle_seed) {
  if (cfg.epochs < 1 || cfg.batch_size < 1) throw std::invalid_argument("epochs and batch size must be positive");
  if (data.size() == 0) throw std::invalid_argument("empty training set");
  for (int label : data.labels)
    if (label < 0 || label >= cfg.classes) throw std::invalid_argument("dataset label outside the configured classes");

  std::mt19937_64 rng(shuffle_seed);
  std::vector<Param> params = model.parameters();
  std::vector<std::vector<double>> velocity;
  for (const Param& p : params) velocity.emplace_back(p.value->size(), 0.0);

  std::vector<int> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);

  LearningCurve curve;
  double lr = cfg.learning_rate;
  double best_loss = std::numeric_limits<double>::infinity();
  int stale = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::vector<int> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                 order.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<int> labels;
      labels.reserve(idx.size());
      for (int i : idx) labels.push_back(data.labels[static_cast<std::size_t>(i)]);

      model.zero_grad();
      const LossResult loss = softmax_cross_entropy(model.forward(data.gather(idx)), labels);
      if (!std::isfinite(loss.loss)) {
        curve.diverged = true;
        curve.diagnostic = "non-finite minibatch loss in epoch " + std::to_string(epoch);
        return curve;
      }
      model.backward(loss.grad);
      for (std::size_t p = 0; p < params.size(); ++p) {
        std::vector<double>& w = *params[p].value;
        const std::vector<double>& g = *params[p].grad;
        std::vector<double>& v = velocity[p];
        for (std::size_t i = 0; i < w.size(); ++i) {
          v[i] = cfg.momentum * v[i] + g[i];
          w[i] -= lr * v[i];
        }
      }
    }

    EpochStats stats = evaluate(model, data, cfg.batch_size);
    stats.epoch = epoch;
    stats.learning_rate = lr;
    if (!std::isfinite(stats.loss)) {
      curve.diverged = true;
      curve.diagnostic = "non-finite training loss after epoch " + std::to_string(epoch);
      return curve;
    }
    curve.epochs.push_back(stats);

    if (stats.loss < best_loss - cfg.plateau_threshold) {
      best_loss = stats.loss;
      stale = 0;
    } else if (++stale >= cfg.plateau_patience) {
      lr *= cfg.plateau_factor;
      stale = 0;
    }
  }
  return curve;
}

}  // namespace hexgrid::nn
