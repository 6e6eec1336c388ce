#include "hexgrid/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "hexgrid/nn.hpp"

namespace hexgrid::nn {
namespace {

constexpr double kStep = 1e-6;

// Shuffled, well-separated values nudged away from zero: ReLU kinks and max
// ties stay out of reach of the perturbation.
HexTensor kink_free(std::mt19937_64& rng, int batch, Shape s) {
  HexTensor t(batch, s.channels, GridSpec(s.rows, s.cols));
  std::vector<double>& v = t.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.01 * static_cast<double>(i) - 0.3;
  std::shuffle(v.begin(), v.end(), rng);
  for (double& x : v)
    if (std::abs(x) < 0.005) x += 0.02;
  return t;
}

double central(double& slot, const std::function<double()>& f) {
  const double saved = slot;
  slot = saved + kStep;
  const double up = f();
  slot = saved - kStep;
  const double down = f();
  slot = saved;
  return (up - down) / (2.0 * kStep);
}

// Single layer, objective <forward(x), r> for a random projection r.
GradCheckEntry check_layer(const std::string& name, Shape in, const LayerSpec& spec, std::mt19937_64& rng) {
  Model model = init_model(ModelConfig{name, in, {spec}, rng()});
  Layer& layer = *model.layers().front();
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (const Param& p : layer.parameters())
    for (double& v : *p.value) v = uni(rng);

  HexTensor x = kink_free(rng, 2, in);
  HexTensor r = layer.forward(x);
  for (double& v : r.values()) v = uni(rng);
  auto objective = [&] {
    const HexTensor y = layer.forward(x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y.values()[i] * r.values()[i];
    return s;
  };

  model.zero_grad();
  layer.forward(x);
  const HexTensor grad_x = layer.backward(r);

  GradCheckEntry e{name, 0.0, kLayerGradTolerance, 0};
  auto compare = [&](double analytic, double& slot) {
    e.max_error = std::max(e.max_error, gradient_relative_error(analytic, central(slot, objective), e.threshold));
    ++e.checked;
  };
  for (std::size_t i = 0; i < x.size(); ++i) compare(grad_x.values()[i], x.values()[i]);
  for (const Param& p : layer.parameters()) {
    const std::vector<double> analytic = *p.grad;
    for (std::size_t i = 0; i < analytic.size(); ++i) compare(analytic[i], (*p.value)[i]);
  }
  return e;
}

// Whole model under softmax cross-entropy: every first-layer parameter and a
// seeded 1-in-40 sample of the rest.
GradCheckEntry check_model(const ModelConfig& cfg, std::mt19937_64& rng) {
  Model model = init_model(cfg);
  HexTensor x(4, cfg.input.channels, GridSpec(cfg.input.rows, cfg.input.cols));
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (double& v : x.values()) v = uni(rng);
  const std::vector<int> labels{0, 1, 2, 3};
  auto loss = [&] { return softmax_cross_entropy(model.forward(x), labels).loss; };

  model.zero_grad();
  model.backward(softmax_cross_entropy(model.forward(x), labels).grad);

  GradCheckEntry e{cfg.name + " end-to-end", 0.0, kModelGradTolerance, 0};
  const std::vector<Param> params = model.parameters();
  for (std::size_t t = 0; t < params.size(); ++t)
    for (std::size_t i = 0; i < params[t].value->size(); ++i) {
      if (t > 1 && rng() % 40 != 0) continue;
      const double numeric = central((*params[t].value)[i], loss);
      e.max_error = std::max(e.max_error, gradient_relative_error((*params[t].grad)[i], numeric, e.threshold));
      ++e.checked;
    }
  return e;
}

}  // namespace

double gradient_relative_error(double analytic, double numeric, double threshold) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), kGradAbsoluteFloor / threshold});
}

double GradCheckReport::max_error() const {
  double m = 0.0;
  for (const GradCheckEntry& e : entries) m = std::max(m, e.max_error);
  return m;
}

bool GradCheckReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const GradCheckEntry& e) { return e.passed(); });
}

GradCheckReport gradient_suite(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GradCheckReport report;
  auto layer = [&](const char* name, Shape in, LayerSpec spec) {
    report.entries.push_back(check_layer(name, in, spec, rng));
  };
  layer("hexconv n=0", {2, 4, 5}, LayerSpec::hexconv(0, 2, 2));
  layer("hexconv n=1", {2, 5, 6}, LayerSpec::hexconv(1, 2, 3));
  layer("hexconv n=2", {1, 6, 5}, LayerSpec::hexconv(2, 1, 2));
  layer("hexmaxpool n=1 s=2", {2, 7, 6}, LayerSpec::hexmaxpool(1, 2));
  layer("hexmaxpool n=2 s=3", {1, 8, 9}, LayerSpec::hexmaxpool(2, 3));
  layer("squareconv k=3", {2, 5, 6}, LayerSpec::squareconv(3, 2, 3));
  layer("squaremaxpool k=3 s=2", {2, 7, 6}, LayerSpec::squaremaxpool(3, 2));
  layer("dense", {7, 1, 1}, LayerSpec::dense(7, 5));
  layer("relu", {3, 4, 4}, LayerSpec::relu());
  layer("flatten", {3, 4, 5}, LayerSpec::flatten());
  report.entries.push_back(check_model(hex_cnn_small({1, 16, 16}, rng()), rng));
  report.entries.push_back(check_model(square_cnn_small({1, 16, 16}, rng()), rng));
  return report;
}

}  // namespace hexgrid::nn
