#pragma once

// Reference implementations of the grid operations. Every output cell is
// computed independently by walking the kernel disc in axial coordinates and
// converting each tap back to offset form. Slow on purpose; the fast engine is
// tested against these.

#include "hexgrid/kernel.hpp"
#include "hexgrid/lattice.hpp"
#include "hexgrid/tensor.hpp"

namespace hexgrid::oracle {

/// Cross-correlation with zero padding; output on the stride lattice.
HexTensor conv2d(const HexTensor& x, const HexKernel& k, int stride);

/// Max or mean over the in-grid part of each size-n disc.
HexTensor pool2d(const HexTensor& x, int n, int stride, PoolMode mode);

/// Hexagonal in-plane correlation stacked along depth with symmetric zero
/// padding; depth centres are slices 0, depth_stride, 2*depth_stride, ...
HexVolume conv3d(const HexVolume& x, const HexKernel3d& k, int stride, int depth_stride);

}  // namespace hexgrid::oracle
