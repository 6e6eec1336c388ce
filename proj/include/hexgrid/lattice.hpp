#pragma once

#include <vector>

#include "hexgrid/hexcore.hpp"

namespace hexgrid {

/// Valid kernel-centre positions for a hexagonal stride.
///
/// The lattice is anchored at pixel (0, 0) and generated by `stride` steps
/// straight down and `stride` steps along the down-right diagonal. Output
/// column C sits on input column stride*C; its topmost centre is on row
/// row_anchor(C) = floor(stride*C/2) mod stride. All output columns have the
/// same length: candidates that would make columns ragged are omitted.
struct StrideLattice {
  int stride = 1;
  int out_rows = 0;
  int out_cols = 0;

  int row_anchor(int out_col) const { return (stride * out_col / 2) % stride; }

  OffsetCoord center(int out_row, int out_col) const {
    return {row_anchor(out_col) + stride * out_row, stride * out_col};
  }

  GridSpec output_grid(const GridSpec& input) const { return GridSpec(out_rows, out_cols, input.pitch * stride); }
};

/// Throws std::invalid_argument for stride < 1 and std::domain_error when no
/// centre exists.
StrideLattice strided_lattice(const GridSpec& g, int stride);

}  // namespace hexgrid
