#pragma once

// The hex-vs-square comparison: regenerate the data and reinitialise the
// models in every iteration, train, and summarise the learning curves.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hexgrid/datagen.hpp"
#include "hexgrid/train.hpp"

namespace hexgrid::experiment {

enum ModelId { kHexSmall = 0, kSquareSmall = 1, kSquareLarge = 2, kModelCount = 3 };

const char* model_name(ModelId id);

struct Config {
  int iterations = 10;
  std::uint64_t seed = 1;
  datagen::DatasetConfig data;  ///< seed and images_per_class are taken per iteration / from train
  nn::TrainConfig train;
  std::vector<ModelId> models{kHexSmall, kSquareSmall, kSquareLarge};
  int threads = 1;
};

/// Seeds for iteration `it`: independent streams for the data, each model's
/// initialisation and each model's minibatch order.
std::uint64_t derive_seed(std::uint64_t seed, int iteration, int stream);

nn::ModelConfig model_config(ModelId id, const datagen::DatasetConfig& data, std::uint64_t seed);

struct ModelRuns {
  ModelId id;
  std::string name;
  std::size_t parameters = 0;
  std::vector<nn::LearningCurve> curves;  ///< one per iteration
};

struct Summary {
  std::string name;
  int iterations = 0;
  double reached_full = 0.0;  ///< fraction of iterations reaching 100% accuracy
  double above_chance = 0.0;  ///< fraction whose final accuracy exceeds 1/classes
  double mean_final = 0.0;
  int diverged = 0;
  std::size_t parameters = 0;
};

Summary summarise(const ModelRuns& runs, int classes);

/// `progress` (optional) receives one line per finished training run.
std::vector<ModelRuns> run(const Config& cfg, const std::function<void(const std::string&)>& progress = {});

}  // namespace hexgrid::experiment
