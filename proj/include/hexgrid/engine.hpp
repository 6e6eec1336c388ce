#pragma once

// Fast hexagonal convolution and pooling.
//
// A size-n hexagonal kernel is split into n+1 rectangular sub-kernels:
// sub-kernel 0 is the centre column (2n+1 rows), sub-kernel i >= 1 holds the
// two columns at offsets -i and +i (2n+1-i rows each) and is applied with a
// horizontal dilation of 2i. Each sub-kernel is correlated with the input in
// two column-strided passes, one for the even and one for the odd output
// columns, because the vertical alignment of a side column relative to the
// centre depends on the parity of the centre column. The passes are
// interleaved back into full output rows and summed over sub-kernels.

#include <vector>

#include "hexgrid/kernel.hpp"
#include "hexgrid/lattice.hpp"
#include "hexgrid/tensor.hpp"

namespace hexgrid {

struct SubKernel {
  int ring = 0;      ///< i: the columns sit at horizontal offsets -i and +i
  int height = 1;    ///< rows per column, 2n+1-i
  int columns = 1;   ///< 1 for the centre column, 2 otherwise
  int dilation = 1;  ///< horizontal spacing between the two columns, 2i
  /// KernelLayout index of each (row, column) slot, row-major.
  std::vector<int> element_index;
  /// (out, in, row, column) weights.
  std::vector<double> weights;

  int column_offset(int j) const { return columns == 1 ? 0 : (j == 0 ? -ring : ring); }
};

struct SubKernelSet {
  int size = 0;
  int in_channels = 1;
  int out_channels = 1;
  std::vector<SubKernel> parts;

  /// Weights back in (out, in, element) KernelLayout order.
  std::vector<double> flatten() const;
  int value_count() const;
};

SubKernelSet decompose(const HexKernel& k);
/// Geometry only (single channel pair, zero weights).
SubKernelSet decompose(int size);

enum class OpKind { conv2d, conv3d, maxpool, avgpool };

struct ConvConfig {
  int stride = 1;
  OpKind mode = OpKind::conv2d;
  int depth_kernel = 1;  ///< conv3d only; must be odd
  int depth_stride = 1;  ///< conv3d only
  int threads = 1;       ///< worker cap for (batch x channel) tiles
};

/// Placement of one column-parity pass of one sub-kernel. Output columns
/// first_out_col, first_out_col+2, ... are produced from input columns
/// stride*C; the window of output row R starts at input row
/// row_anchor + stride*R + top_offset. Pads are the zero rows/columns the
/// pass needs around the input.
struct PassGeometry {
  int parity = 0;         ///< output-column parity handled by the pass
  int out_cols = 0;       ///< number of output columns in the pass
  int center_parity = 0;  ///< parity of the input column under the centres
  int row_anchor = 0;
  int top_offset = 0;
  int pad_top = 0;
  int pad_bottom = 0;
  int pad_left = 0;
  int pad_right = 0;
};

PassGeometry pass_geometry(const GridSpec& input, const StrideLattice& lattice, const SubKernel& sub, int size,
                           int parity);

template <class T>
BasicHexTensor<T> conv2d(const BasicHexTensor<T>& x, const HexKernel& k, const ConvConfig& cfg);

/// cfg.mode selects maxpool or avgpool.
template <class T>
BasicHexTensor<T> pool2d(const BasicHexTensor<T>& x, int n, const ConvConfig& cfg);

HexVolume conv3d(const HexVolume& x, const HexKernel3d& k, const ConvConfig& cfg);

struct ConvGradients {
  HexTensor grad_x;
  std::vector<double> grad_w;  ///< (out, in, element)
  std::vector<double> grad_b;
};

ConvGradients conv2d_backward(const HexTensor& grad_out, const HexTensor& x, const HexKernel& k,
                              const ConvConfig& cfg);

/// Max mode routes each output gradient to the first maximal cell in
/// KernelLayout order; avg mode spreads it evenly over the in-grid cells.
HexTensor pool2d_backward(const HexTensor& grad_out, const HexTensor& x, int n, const ConvConfig& cfg);

extern template BasicHexTensor<double> conv2d(const BasicHexTensor<double>&, const HexKernel&, const ConvConfig&);
extern template BasicHexTensor<float> conv2d(const BasicHexTensor<float>&, const HexKernel&, const ConvConfig&);
extern template BasicHexTensor<double> pool2d(const BasicHexTensor<double>&, int, const ConvConfig&);
extern template BasicHexTensor<float> pool2d(const BasicHexTensor<float>&, int, const ConvConfig&);

}  // namespace hexgrid
