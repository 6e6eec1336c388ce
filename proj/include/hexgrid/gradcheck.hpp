#pragma once

// Finite-difference gradient suite over every layer kind and the two small
// experiment models. Central differences with step 1e-6 in double precision.

#include <cstdint>
#include <string>
#include <vector>

namespace hexgrid::nn {

struct GradCheckEntry {
  std::string name;
  double max_error = 0.0;  ///< max elementwise relative error over inputs and parameters
  double threshold = 0.0;
  std::size_t checked = 0;  ///< number of entries compared
  bool passed() const { return max_error < threshold; }
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_error() const;
  bool passed() const;
};

inline constexpr double kLayerGradTolerance = 1e-5;
inline constexpr double kModelGradTolerance = 1e-4;

/// Absolute floor: differences up to 1e-8 always pass.
inline constexpr double kGradAbsoluteFloor = 1e-8;

/// |a - n| / max(|a|, |n|, kGradAbsoluteFloor / threshold). Below the
/// threshold exactly when the plain relative error is, or when the absolute
/// difference is within the floor; unlike a hard cut-off it still reports how
/// close small gradients came.
double gradient_relative_error(double analytic, double numeric, double threshold);

GradCheckReport gradient_suite(std::uint64_t seed);

}  // namespace hexgrid::nn
