#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hexgrid/nn.hpp"

namespace hexgrid::nn {

/// Images stacked along the batch axis with one label each.
struct Dataset {
  HexTensor images;
  std::vector<int> labels;

  int size() const { return static_cast<int>(labels.size()); }
  /// Copies the listed samples into a new batch.
  HexTensor gather(const std::vector<int>& indices) const;
};

struct TrainConfig {
  int epochs = 100;
  int images_per_class = 128;
  int classes = 4;
  int batch_size = 32;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double plateau_factor = 0.5;      ///< LR multiplier on a plateau
  int plateau_patience = 5;         ///< epochs without improvement before reducing
  double plateau_threshold = 1e-4;  ///< minimum loss decrease counted as improvement
  int iterations = 10;
  std::uint64_t seed = 1;
};

struct EpochStats {
  int epoch = 0;
  double accuracy = 0.0;  ///< on the full training set after the epoch
  double loss = 0.0;      ///< mean cross-entropy on the full training set after the epoch
  double learning_rate = 0.0;
};

struct LearningCurve {
  std::vector<EpochStats> epochs;
  bool diverged = false;
  std::string diagnostic;

  double final_accuracy() const { return epochs.empty() ? 0.0 : epochs.back().accuracy; }
  bool reached(double accuracy) const;
};

/// SGD with momentum and plateau halving of the learning rate. Minibatch order
/// is reshuffled every epoch from a generator seeded with `shuffle_seed`.
/// A non-finite loss stops training and marks the curve as diverged.
LearningCurve train(Model& model, const TrainConfig& cfg, const Dataset& data, std::uint64_t shuffle_seed);

/// Evaluates mean loss and accuracy over `data` in chunks of `batch_size`.
EpochStats evaluate(Model& model, const Dataset& data, int batch_size);

}  // namespace hexgrid::nn
