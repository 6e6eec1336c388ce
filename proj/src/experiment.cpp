#include "hexgrid/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <random>
#include <stdexcept>

namespace hexgrid::experiment {

const char* model_name(ModelId id) {
  switch (id) {
    case kHexSmall: return "h-CNN-small";
    case kSquareSmall: return "s-CNN-small";
    case kSquareLarge: return "s-CNN-large";
    default: break;
  }
  throw std::invalid_argument("unknown model id");
}

std::uint64_t derive_seed(std::uint64_t seed, int iteration, int stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iteration), static_cast<std::uint32_t>(stream)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

nn::ModelConfig model_config(ModelId id, const datagen::DatasetConfig& data, std::uint64_t seed) {
  const nn::Shape small{1, data.grid.rows, data.grid.cols};
  const int side = datagen::Resampler(data.grid, 2).side();
  switch (id) {
    case kHexSmall: return nn::hex_cnn_small(small, seed);
    case kSquareSmall: {
      const int s = datagen::Resampler(data.grid, 1).side();
      return nn::square_cnn_small({1, s, s}, seed);
    }
    case kSquareLarge: return nn::square_cnn_large({1, side, side}, seed);
    default: break;
  }
  throw std::invalid_argument("unknown model id");
}

Summary summarise(const ModelRuns& runs, int classes) {
  Summary s;
  s.name = runs.name;
  s.parameters = runs.parameters;
  s.iterations = static_cast<int>(runs.curves.size());
  if (s.iterations == 0) return s;
  const double chance = 1.0 / classes;
  for (const nn::LearningCurve& c : runs.curves) {
    s.reached_full += c.reached(1.0);
    s.above_chance += c.final_accuracy() > chance;
    s.mean_final += c.final_accuracy();
    s.diverged += c.diverged;
  }
  s.reached_full /= s.iterations;
  s.above_chance /= s.iterations;
  s.mean_final /= s.iterations;
  return s;
}

std::vector<ModelRuns> run(const Config& cfg, const std::function<void(const std::string&)>& progress) {
  if (cfg.iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  std::vector<ModelRuns> out;
  for (ModelId id : cfg.models) out.push_back({id, model_name(id), 0, {}});

  for (int it = 0; it < cfg.iterations; ++it) {
    datagen::DatasetConfig data = cfg.data;
    data.seed = derive_seed(cfg.seed, it, 0);
    data.images_per_class = cfg.train.images_per_class;
    const datagen::DatasetBundle bundle = datagen::build_dataset(data);
    for (ModelRuns& runs : out) {
      const int stream = 1 + 2 * static_cast<int>(runs.id);
      nn::ModelConfig mc = model_config(runs.id, data, derive_seed(cfg.seed, it, stream));
      mc.threads = cfg.threads;
      nn::Model model = nn::init_model(mc);
      runs.parameters = mc.parameter_count();
      const nn::Dataset& set = runs.id == kHexSmall      ? bundle.hex
                               : runs.id == kSquareSmall ? bundle.square_small
                                                         : bundle.square_large;
      const auto t0 = std::chrono::steady_clock::now();
      runs.curves.push_back(nn::train(model, cfg.train, set, derive_seed(cfg.seed, it, stream + 1)));
      if (progress) {
        const nn::LearningCurve& c = runs.curves.back();
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        char line[160];
        std::snprintf(line, sizeof line, "iteration %d %s: final accuracy %.4f%s (%.1f s)", it, runs.name.c_str(),
                      c.final_accuracy(), c.diverged ? " [diverged]" : "", secs);
        progress(line);
      }
    }
  }
  return out;
}

}  // namespace hexgrid::experiment
