#include "hexgrid/lattice.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace hexgrid {

StrideLattice strided_lattice(const GridSpec& g, int stride) {
  if (stride < 1) throw std::invalid_argument("stride must be >= 1, got " + std::to_string(stride));

  StrideLattice lattice;
  lattice.stride = stride;

  // Columns are used left to right until one has no centre inside the grid
  // (only possible when rows < stride); everything right of it is dropped so
  // the output stays a regular super-lattice.
  const int candidate_cols = (g.cols - 1) / stride + 1;
  int out_rows = -1;
  int out_cols = 0;
  for (int c = 0; c < candidate_cols; ++c) {
    const int anchor = lattice.row_anchor(c);
    if (anchor > g.rows - 1) break;
    const int rows_here = (g.rows - 1 - anchor) / stride + 1;
    out_rows = out_rows < 0 ? rows_here : std::min(out_rows, rows_here);
    ++out_cols;
  }
  if (out_cols == 0 || out_rows <= 0) {
    throw std::domain_error("stride " + std::to_string(stride) + " leaves no kernel centre in a " +
                            std::to_string(g.rows) + "x" + std::to_string(g.cols) + " grid");
  }
  lattice.out_rows = out_rows;
  lattice.out_cols = out_cols;
  return lattice;
}

}  // namespace hexgrid
