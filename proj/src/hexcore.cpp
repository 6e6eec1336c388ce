#include "hexgrid/hexcore.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace hexgrid {

GridSpec::GridSpec(int rows_, int cols_, double pitch_) : rows(rows_), cols(cols_), pitch(pitch_) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("grid must have at least one row and one column, got " + std::to_string(rows) +
                                "x" + std::to_string(cols));
  }
  if (!(pitch > 0.0) || !std::isfinite(pitch)) {
    throw std::invalid_argument("grid pitch must be positive and finite");
  }
}

bool contains(const GridSpec& g, OffsetCoord p) {
  return p.row >= 0 && p.row < g.rows && p.col >= 0 && p.col < g.cols;
}

Point2 pixel_center(OffsetCoord p, const GridSpec& g) {
  if (!contains(g, p)) {
    throw std::out_of_range("pixel (" + std::to_string(p.row) + ", " + std::to_string(p.col) +
                            ") outside " + std::to_string(g.rows) + "x" + std::to_string(g.cols) + " grid");
  }
  const double x = p.col * (std::sqrt(3.0) / 2.0) * g.pitch;
  const double y = -(p.row + 0.5 * column_parity(p.col)) * g.pitch;
  return {x, y};
}

int hex_distance(AxialCoord a, AxialCoord b) {
  const int dq = a.q - b.q;
  const int dr = a.r - b.r;
  return (std::abs(dq) + std::abs(dr) + std::abs(dq + dr)) / 2;
}

KernelLayout::KernelLayout(int size) : size_(size) {
  if (size < 0) throw std::invalid_argument("kernel size must be non-negative");
  elements_.reserve(static_cast<std::size_t>(hex_element_count(size)));
  column_start_.reserve(static_cast<std::size_t>(2 * size + 1));
  for (int dc = -size; dc <= size; ++dc) {
    column_start_.push_back(static_cast<int>(elements_.size()));
    const int height = kernel_column_height(size, dc);
    for (int slot = 0; slot < height; ++slot) elements_.push_back({dc, slot});
  }
}

std::vector<std::pair<OffsetCoord, int>> indexed_neighborhood(OffsetCoord center, int n, const GridSpec& g) {
  if (n < 0) throw std::invalid_argument("neighbourhood radius must be non-negative");
  if (!contains(g, center)) throw std::out_of_range("neighbourhood centre outside grid");
  std::vector<std::pair<OffsetCoord, int>> out;
  out.reserve(static_cast<std::size_t>(hex_element_count(n)));
  const int parity = column_parity(center.col);
  int index = 0;
  for (int dc = -n; dc <= n; ++dc) {
    const int col = center.col + dc;
    const int top = center.row + column_top_offset(n, dc, parity);
    const int height = kernel_column_height(n, dc);
    for (int slot = 0; slot < height; ++slot, ++index) {
      const OffsetCoord p{top + slot, col};
      if (contains(g, p)) out.emplace_back(p, index);
    }
  }
  return out;
}

std::vector<OffsetCoord> neighborhood(OffsetCoord center, int n, const GridSpec& g) {
  std::vector<OffsetCoord> out;
  for (const auto& [p, index] : indexed_neighborhood(center, n, g)) out.push_back(p);
  return out;
}

}  // namespace hexgrid
