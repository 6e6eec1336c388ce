#pragma once

// Shared helpers for the test binaries: seeded random tensors and kernels,
// comparison utilities and a central finite-difference driver.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <functional>
#include <random>
#include <vector>

#include "hexgrid/hexcore.hpp"
#include "hexgrid/kernel.hpp"
#include "hexgrid/tensor.hpp"

namespace hexgrid::testing {

inline HexTensor random_tensor(std::mt19937_64& rng, int batch, int channels, GridSpec grid, double lo = -1.0,
                               double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  HexTensor t(batch, channels, grid);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

/// Values are a shuffled, well-separated sequence so max selections are
/// stable under small perturbations.
inline HexTensor distinct_tensor(std::mt19937_64& rng, int batch, int channels, GridSpec grid) {
  HexTensor t(batch, channels, grid);
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.01 * static_cast<double>(i) - 0.3;
  std::shuffle(v.begin(), v.end(), rng);
  t.values() = v;
  return t;
}

inline HexKernel random_kernel(std::mt19937_64& rng, int size, int in, int out) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  HexKernel k(size, in, out);
  for (double& w : k.weights()) w = dist(rng);
  for (double& b : k.bias()) b = dist(rng);
  return k;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Relative error with an absolute floor: values whose absolute difference is
/// below `floor` count as exact.
inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= floor) return 0.0;
  return diff / std::max({std::abs(analytic), std::abs(numeric), 1e-300});
}

/// Central differences of a scalar function with respect to every entry of
/// `params` (perturbed in place and restored).
inline std::vector<double> numeric_gradient(std::vector<double>& params, const std::function<double()>& f,
                                            double step = 1e-6) {
  std::vector<double> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + step;
    const double up = f();
    params[i] = saved - step;
    const double down = f();
    params[i] = saved;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

inline double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double m = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) m = std::max(m, relative_error(analytic[i], numeric[i]));
  return m;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace hexgrid::testing
