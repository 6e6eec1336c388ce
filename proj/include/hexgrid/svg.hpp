#pragma once

// SVG rendering: hexagonal images as tilings of flat-topped hexagons, and
// learning curves as line plots.

#include <string>
#include <vector>

#include "hexgrid/tensor.hpp"

namespace hexgrid::svg {

struct HexImageStyle {
  double cell = 12.0;  ///< hexagon circumradius in SVG units
  std::string title;
  /// Colour range; equal bounds mean "use the data range".
  double lo = 0.0;
  double hi = 0.0;
};

/// One <polygon> per cell of plane (b, c), each carrying its coordinates and
/// value as data attributes.
std::string render_hex_image(const HexTensor& x, int b = 0, int c = 0, const HexImageStyle& style = {});

struct CurveSet {
  std::string label;
  std::string colour;                       ///< any SVG colour
  std::vector<std::vector<double>> curves;  ///< one accuracy series per iteration
};

/// Accuracy (0..1) against epoch, one thin line per iteration and a thick
/// line for the per-epoch mean of each set.
std::string render_learning_curves(const std::vector<CurveSet>& sets, const std::string& title);

}  // namespace hexgrid::svg
