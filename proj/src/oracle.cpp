#include "hexgrid/oracle.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace hexgrid::oracle {
namespace {

// Visit every pixel of the size-n disc around `center`, in canonical element
// order, as (pixel, element index). The disc is enumerated purely in axial
// terms: for column offset dq the admissible dr satisfy |dq|+|dr|+|dq+dr| <= 2n.
template <class Visit>
void for_each_tap(OffsetCoord center, int n, const GridSpec& g, Visit&& visit) {
  const AxialCoord a = offset_to_axial(center);
  int element = 0;
  for (int dq = -n; dq <= n; ++dq) {
    const int dr_lo = std::max(-n, -n - dq);
    const int dr_hi = std::min(n, n - dq);
    for (int dr = dr_lo; dr <= dr_hi; ++dr, ++element) {
      const OffsetCoord p = axial_to_offset({a.q + dq, a.r + dr});
      if (contains(g, p)) visit(p, element);
    }
  }
}

}  // namespace

HexTensor conv2d(const HexTensor& x, const HexKernel& k, int stride) {
  if (k.in_channels() != x.channels()) {
    throw std::invalid_argument("kernel expects " + std::to_string(k.in_channels()) + " input channels, tensor has " +
                                std::to_string(x.channels()));
  }
  const StrideLattice lattice = strided_lattice(x.grid(), stride);
  HexTensor out(x.batch(), k.out_channels(), lattice.output_grid(x.grid()));
  for (int b = 0; b < x.batch(); ++b) {
    for (int co = 0; co < k.out_channels(); ++co) {
      for (int R = 0; R < lattice.out_rows; ++R) {
        for (int C = 0; C < lattice.out_cols; ++C) {
          double acc = k.bias()[static_cast<std::size_t>(co)];
          for (int ci = 0; ci < x.channels(); ++ci) {
            for_each_tap(lattice.center(R, C), k.size(), x.grid(), [&](OffsetCoord p, int e) {
              acc += k.weight(co, ci, e) * x(b, ci, p.row, p.col);
            });
          }
          out(b, co, R, C) = acc;
        }
      }
    }
  }
  return out;
}

HexTensor pool2d(const HexTensor& x, int n, int stride, PoolMode mode) {
  if (n < 1) throw std::invalid_argument("pooling size must be >= 1");
  const StrideLattice lattice = strided_lattice(x.grid(), stride);
  HexTensor out(x.batch(), x.channels(), lattice.output_grid(x.grid()));
  for (int b = 0; b < x.batch(); ++b) {
    for (int c = 0; c < x.channels(); ++c) {
      for (int R = 0; R < lattice.out_rows; ++R) {
        for (int C = 0; C < lattice.out_cols; ++C) {
          double best = -std::numeric_limits<double>::infinity();
          double sum = 0.0;
          int count = 0;
          for_each_tap(lattice.center(R, C), n, x.grid(), [&](OffsetCoord p, int) {
            const double v = x(b, c, p.row, p.col);
            best = std::max(best, v);
            sum += v;
            ++count;
          });
          out(b, c, R, C) = mode == PoolMode::max ? best : sum / count;
        }
      }
    }
  }
  return out;
}

HexVolume conv3d(const HexVolume& x, const HexKernel3d& k, int stride, int depth_stride) {
  if (k.in_channels() != x.channels()) throw std::invalid_argument("kernel/volume channel mismatch");
  if (depth_stride < 1) throw std::invalid_argument("depth stride must be >= 1");
  const StrideLattice lattice = strided_lattice(x.grid(), stride);
  const int half = (k.depth() - 1) / 2;
  const int out_depth = (x.depth() - 1) / depth_stride + 1;
  HexVolume out(x.batch(), k.out_channels(), out_depth, lattice.output_grid(x.grid()));

  for (int Z = 0; Z < out_depth; ++Z) {
    const int zc = Z * depth_stride;
    for (int kz = 0; kz < k.depth(); ++kz) {
      const int z = zc + kz - half;
      if (z < 0 || z >= x.depth()) continue;
      const HexTensor plane = conv2d(x.slice(z), k.slice(kz), stride);
      for (int b = 0; b < x.batch(); ++b)
        for (int co = 0; co < k.out_channels(); ++co)
          for (int R = 0; R < lattice.out_rows; ++R)
            for (int C = 0; C < lattice.out_cols; ++C) out(b, co, Z, R, C) += plane(b, co, R, C);
    }
    for (int b = 0; b < x.batch(); ++b)
      for (int co = 0; co < k.out_channels(); ++co)
        for (int R = 0; R < lattice.out_rows; ++R)
          for (int C = 0; C < lattice.out_cols; ++C) out(b, co, Z, R, C) += k.bias()[static_cast<std::size_t>(co)];
  }
  return out;
}

}  // namespace hexgrid::oracle
