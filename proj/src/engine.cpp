#include "hexgrid/engine.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

#include "hexgrid/parallel.hpp"

namespace hexgrid {

SubKernelSet decompose(int size) { return decompose(HexKernel(size, 1, 1)); }

SubKernelSet decompose(const HexKernel& k) {
  const int n = k.size();
  const KernelLayout layout(n);
  SubKernelSet set;
  set.size = n;
  set.in_channels = k.in_channels();
  set.out_channels = k.out_channels();
  for (int ring = 0; ring <= n; ++ring) {
    SubKernel sub;
    sub.ring = ring;
    sub.height = kernel_column_height(n, ring);
    sub.columns = ring == 0 ? 1 : 2;
    sub.dilation = ring == 0 ? 1 : 2 * ring;
    for (int a = 0; a < sub.height; ++a)
      for (int j = 0; j < sub.columns; ++j) sub.element_index.push_back(layout.index_of(sub.column_offset(j), a));

    sub.weights.reserve(static_cast<std::size_t>(k.out_channels()) * k.in_channels() * sub.element_index.size());
    for (int co = 0; co < k.out_channels(); ++co)
      for (int ci = 0; ci < k.in_channels(); ++ci)
        for (const int e : sub.element_index) sub.weights.push_back(k.weight(co, ci, e));
    set.parts.push_back(std::move(sub));
  }
  return set;
}

int SubKernelSet::value_count() const {
  int total = 0;
  for (const auto& p : parts) total += static_cast<int>(p.element_index.size());
  return total;
}

std::vector<double> SubKernelSet::flatten() const {
  const std::size_t elements = static_cast<std::size_t>(value_count());
  std::vector<double> out(static_cast<std::size_t>(out_channels) * in_channels * elements, 0.0);
  for (const auto& p : parts) {
    const std::size_t slots = p.element_index.size();
    for (int co = 0; co < out_channels; ++co)
      for (int ci = 0; ci < in_channels; ++ci)
        for (std::size_t s = 0; s < slots; ++s) {
          const std::size_t pair = static_cast<std::size_t>(co) * in_channels + ci;
          out[pair * elements + static_cast<std::size_t>(p.element_index[s])] = p.weights[pair * slots + s];
        }
  }
  return out;
}

PassGeometry pass_geometry(const GridSpec& input, const StrideLattice& lattice, const SubKernel& sub, int size,
                           int parity) {
  PassGeometry g;
  g.parity = parity;
  g.out_cols = parity < lattice.out_cols ? (lattice.out_cols - parity + 1) / 2 : 0;
  if (g.out_cols == 0) return g;

  const int s = lattice.stride;
  g.center_parity = column_parity(s * parity);
  g.row_anchor = lattice.row_anchor(parity);
  g.top_offset = column_top_offset(size, sub.ring, g.center_parity);

  const int first_row = g.row_anchor + g.top_offset;
  const int last_row = g.row_anchor + s * (lattice.out_rows - 1) + g.top_offset + sub.height - 1;
  const int first_col = s * parity - sub.ring;
  const int last_col = s * (parity + 2 * (g.out_cols - 1)) + sub.ring;
  g.pad_top = std::max(0, -first_row);
  g.pad_bottom = std::max(0, last_row - (input.rows - 1));
  g.pad_left = std::max(0, -first_col);
  g.pad_right = std::max(0, last_col - (input.cols - 1));
  return g;
}

namespace {

struct Pass {
  int part = 0;
  PassGeometry geo;
};

std::vector<Pass> plan_passes(const GridSpec& input, const StrideLattice& lattice, const SubKernelSet& set) {
  std::vector<Pass> passes;
  for (int part = 0; part < static_cast<int>(set.parts.size()); ++part) {
    for (int parity = 0; parity < 2; ++parity) {
      const PassGeometry geo = pass_geometry(input, lattice, set.parts[static_cast<std::size_t>(part)], set.size, parity);
      if (geo.out_cols > 0) passes.push_back({part, geo});
    }
  }
  return passes;
}

// The input columns read by column j of a pass's sub-kernel, gathered from
// the padded plane: view(r, K) = padded(r, origin_col + 2*stride*K). Every
// output channel reuses the same view, and rows of a view are contiguous.
template <class T>
struct ColumnView {
  int rows = 0;
  int width = 0;
  T* data = nullptr;

  T* row(int r) const { return data + static_cast<std::size_t>(r) * width; }
  std::size_t size() const { return static_cast<std::size_t>(rows) * width; }
};

int view_origin_col(const PassGeometry& geo, const SubKernel& sub, int stride, int j) {
  return stride * geo.parity + sub.column_offset(j) + geo.pad_left;
}

// Padded row read by slot row `a` for output row 0.
int view_origin_row(const PassGeometry& geo, int a) { return geo.row_anchor + geo.top_offset + geo.pad_top + a; }

// Copies the in-grid part of a view; everything else keeps its fill value.
template <class T>
void gather_view(std::span<const T> plane, const GridSpec& g, const PassGeometry& geo, const SubKernel& sub,
                 int stride, int j, ColumnView<T> v) {
  const int col0 = view_origin_col(geo, sub, stride, j) - geo.pad_left;
  for (int K = 0; K < v.width; ++K) {
    const int c = col0 + 2 * stride * K;
    if (c < 0 || c >= g.cols) continue;
    for (int r = 0; r < g.rows; ++r) v.row(r + geo.pad_top)[K] = plane[static_cast<std::size_t>(r) * g.cols + c];
  }
}

// One view per (pass, sub-kernel column) pair.
struct ViewSlot {
  std::size_t pass;
  int column;
  int rows;
  int width;
};

std::vector<ViewSlot> view_slots(const GridSpec& g, const std::vector<Pass>& passes, const SubKernelSet& set) {
  std::vector<ViewSlot> out;
  for (std::size_t p = 0; p < passes.size(); ++p) {
    const PassGeometry& geo = passes[p].geo;
    for (int j = 0; j < set.parts[static_cast<std::size_t>(passes[p].part)].columns; ++j)
      out.push_back({p, j, g.rows + geo.pad_top + geo.pad_bottom, geo.out_cols});
  }
  return out;
}

// Views of every (batch, channel) plane in one arena:
// views[(b * channels + c) * slots.size() + slot].
template <class T>
struct ViewSet {
  std::vector<T> arena;
  std::vector<ColumnView<T>> views;

  ViewSet(std::size_t planes, const std::vector<ViewSlot>& slots, T fill) {
    std::size_t block = 0;
    for (const ViewSlot& v : slots) block += static_cast<std::size_t>(v.rows) * v.width;
    arena.assign(planes * block, fill);
    views.reserve(planes * slots.size());
    T* at = arena.data();
    for (std::size_t p = 0; p < planes; ++p)
      for (const ViewSlot& v : slots) {
        views.push_back({v.rows, v.width, at});
        at += static_cast<std::size_t>(v.rows) * v.width;
      }
  }

  const ColumnView<T>& operator[](std::size_t i) const { return views[i]; }
};

template <class T>
ViewSet<T> gather_all(const BasicHexTensor<T>& x, const std::vector<Pass>& passes, const SubKernelSet& set,
                      const std::vector<ViewSlot>& slots, int stride, T fill, int threads) {
  const std::size_t planes = static_cast<std::size_t>(x.batch()) * x.channels();
  ViewSet<T> out(planes, slots, fill);
  parallel_for(planes, threads, [&](std::size_t bc) {
    const int b = static_cast<int>(bc / static_cast<std::size_t>(x.channels()));
    const int c = static_cast<int>(bc % static_cast<std::size_t>(x.channels()));
    for (std::size_t v = 0; v < slots.size(); ++v) {
      const Pass& pass = passes[slots[v].pass];
      gather_view<T>(x.plane(b, c), x.grid(), pass.geo, set.parts[static_cast<std::size_t>(pass.part)], stride,
                     slots[v].column, out[bc * slots.size() + v]);
    }
  });
  return out;
}

// Index of the first view of pass p within one plane's block.
std::vector<std::size_t> first_view_of_pass(const std::vector<ViewSlot>& slots, std::size_t passes) {
  std::vector<std::size_t> first(passes, 0);
  for (std::size_t v = slots.size(); v-- > 0;) first[slots[v].pass] = v;
  return first;
}

// acc(R, K) op= view(row0 + s*R, K). With unit stride the rows are adjacent
// and the whole window is one contiguous run.
template <class T, class Op>
void sweep(T* acc, const ColumnView<T>& view, int row0, int stride, int out_rows, Op op) {
  const int w = view.width;
  if (stride == 1) {
    const T* in = view.row(row0);
    const int n = out_rows * w;
    for (int i = 0; i < n; ++i) op(acc[i], in[i]);
    return;
  }
  for (int R = 0; R < out_rows; ++R) {
    const T* in = view.row(row0 + stride * R);
    T* a = acc + static_cast<std::size_t>(R) * w;
    for (int K = 0; K < w; ++K) op(a[K], in[K]);
  }
}

// Output channels handled together by one forward tile; each input value
// read is used for all of them.
constexpr int kChannelBlock = 4;

// acc_q(R, K) += w[q] * view(row0 + s*R, K) for the kChannelBlock
// accumulators stacked `plane` apart in acc.
template <class T>
void sweep_block(T* acc, std::size_t plane, const ColumnView<T>& view, int row0, int stride, int out_rows,
                 const T* w) {
  const int width = view.width;
  const int runs = stride == 1 ? 1 : out_rows;
  const int len = stride == 1 ? out_rows * width : width;
  for (int R = 0; R < runs; ++R) {
    const T* __restrict in = view.row(row0 + stride * R);
    T* __restrict a0 = acc + static_cast<std::size_t>(R) * width;
    T* __restrict a1 = a0 + plane;
    T* __restrict a2 = a1 + plane;
    T* __restrict a3 = a2 + plane;
    for (int i = 0; i < len; ++i) {
      const T v = in[i];
      a0[i] += w[0] * v;
      a1[i] += w[1] * v;
      a2[i] += w[2] * v;
      a3[i] += w[3] * v;
    }
  }
}

// Dot product with four interleaved partial sums combined in a fixed order:
// deterministic, and not serialised on a single add chain.
double dot(const double* a, const double* b, int n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

// Columns parity, parity+2, ... of an output-shaped plane, packed.
template <class T>
void split_columns(std::span<const T> plane, int rows, int cols, int parity, int width, std::vector<T>& out) {
  out.resize(static_cast<std::size_t>(rows) * width);
  for (int R = 0; R < rows; ++R)
    for (int K = 0; K < width; ++K)
      out[static_cast<std::size_t>(R) * width + K] = plane[static_cast<std::size_t>(R) * cols + parity + 2 * K];
}

// Flattened in-grid cells (KernelLayout order) of every pooling window.
struct PoolWindows {
  std::vector<std::size_t> start;  ///< window o is cells[start[o], start[o+1])
  std::vector<std::size_t> cells;
};

// Windows depend only on the geometry; training revisits the same few
// geometries every step, so they are cached per thread.
const PoolWindows& pool_windows(const GridSpec& g, int n, const StrideLattice& lattice) {
  thread_local std::map<std::array<int, 4>, PoolWindows> cache;
  const std::array<int, 4> key{g.rows, g.cols, n, lattice.stride};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  PoolWindows w;
  w.start.push_back(0);
  for (int R = 0; R < lattice.out_rows; ++R)
    for (int C = 0; C < lattice.out_cols; ++C) {
      for (const OffsetCoord& p : neighborhood(lattice.center(R, C), n, g))
        w.cells.push_back(static_cast<std::size_t>(p.row) * g.cols + p.col);
      w.start.push_back(w.cells.size());
    }
  if (cache.size() > 64) cache.clear();
  return cache.emplace(key, std::move(w)).first->second;
}

void check_channels(int kernel_in, int tensor_channels) {
  if (kernel_in != tensor_channels) {
    throw std::invalid_argument("kernel expects " + std::to_string(kernel_in) + " input channels, tensor has " +
                                std::to_string(tensor_channels));
  }
}

}  // namespace

template <class T>
BasicHexTensor<T> conv2d(const BasicHexTensor<T>& x, const HexKernel& k, const ConvConfig& cfg) {
  check_channels(k.in_channels(), x.channels());
  const StrideLattice lattice = strided_lattice(x.grid(), cfg.stride);
  const SubKernelSet set = decompose(k);
  const std::vector<Pass> passes = plan_passes(x.grid(), lattice, set);
  const std::vector<ViewSlot> slots = view_slots(x.grid(), passes, set);
  const std::vector<std::size_t> first = first_view_of_pass(slots, passes.size());
  const int s = lattice.stride;
  const auto views = gather_all<T>(x, passes, set, slots, s, T{0}, cfg.threads);

  const int in_ch = x.channels();
  const int out_ch = k.out_channels();
  BasicHexTensor<T> out(x.batch(), out_ch, lattice.output_grid(x.grid()));

  const int blocks = (out_ch + kChannelBlock - 1) / kChannelBlock;
  parallel_for(static_cast<std::size_t>(x.batch()) * blocks, cfg.threads, [&](std::size_t tile) {
    const int b = static_cast<int>(tile / static_cast<std::size_t>(blocks));
    const int co0 = static_cast<int>(tile % static_cast<std::size_t>(blocks)) * kChannelBlock;
    const int active = std::min(kChannelBlock, out_ch - co0);
    std::vector<T> acc;
    for (std::size_t p = 0; p < passes.size(); ++p) {
      const PassGeometry& geo = passes[p].geo;
      const SubKernel& sub = set.parts[static_cast<std::size_t>(passes[p].part)];
      const std::size_t sub_slots = sub.element_index.size();
      const std::size_t plane = static_cast<std::size_t>(lattice.out_rows) * geo.out_cols;
      acc.assign(plane * kChannelBlock, T{0});

      for (int ci = 0; ci < in_ch; ++ci) {
        const ColumnView<T>* view = &views[(static_cast<std::size_t>(b) * in_ch + ci) * slots.size() + first[p]];
        for (int a = 0; a < sub.height; ++a)
          for (int j = 0; j < sub.columns; ++j) {
            const std::size_t slot = static_cast<std::size_t>(a * sub.columns + j);
            T w[kChannelBlock] = {};
            for (int q = 0; q < active; ++q)
              w[q] = static_cast<T>(sub.weights[(static_cast<std::size_t>(co0 + q) * in_ch + ci) * sub_slots + slot]);
            sweep_block(acc.data(), plane, view[j], view_origin_row(geo, a), s, lattice.out_rows, w);
          }
      }
      // Interleave the pass's columns back into the full output.
      for (int q = 0; q < active; ++q) {
        std::span<T> dst = out.plane(b, co0 + q);
        const T* src = acc.data() + plane * static_cast<std::size_t>(q);
        for (int R = 0; R < lattice.out_rows; ++R)
          for (int K = 0; K < geo.out_cols; ++K)
            dst[static_cast<std::size_t>(R) * lattice.out_cols + geo.parity + 2 * K] +=
                src[static_cast<std::size_t>(R) * geo.out_cols + K];
      }
    }
    for (int q = 0; q < active; ++q) {
      const T bias = static_cast<T>(k.bias()[static_cast<std::size_t>(co0 + q)]);
      for (T& v : out.plane(b, co0 + q)) v += bias;
    }
  });
  return out;
}

template <class T>
BasicHexTensor<T> pool2d(const BasicHexTensor<T>& x, int n, const ConvConfig& cfg) {
  if (n < 1) throw std::invalid_argument("pooling size must be >= 1");
  if (cfg.mode != OpKind::maxpool && cfg.mode != OpKind::avgpool) {
    throw std::invalid_argument("pool2d needs maxpool or avgpool mode");
  }
  const bool use_max = cfg.mode == OpKind::maxpool;
  const StrideLattice lattice = strided_lattice(x.grid(), cfg.stride);
  const SubKernelSet set = decompose(n);
  const std::vector<Pass> passes = plan_passes(x.grid(), lattice, set);
  const std::vector<ViewSlot> slots = view_slots(x.grid(), passes, set);
  const std::vector<std::size_t> first = first_view_of_pass(slots, passes.size());
  const int s = lattice.stride;
  const T fill = use_max ? -std::numeric_limits<T>::infinity() : T{0};
  const auto views = gather_all<T>(x, passes, set, slots, s, fill, cfg.threads);

  // In-grid cell counts per output cell, pooled from an all-ones mask with the
  // same passes.
  std::vector<T> counts;
  if (!use_max) {
    counts.assign(static_cast<std::size_t>(lattice.out_rows) * lattice.out_cols, T{0});
    const BasicHexTensor<T> ones(1, 1, x.grid(), T{1});
    const auto mask = gather_all<T>(ones, passes, set, slots, s, T{0}, 1);
    std::vector<T> acc;
    for (std::size_t p = 0; p < passes.size(); ++p) {
      const PassGeometry& geo = passes[p].geo;
      const SubKernel& sub = set.parts[static_cast<std::size_t>(passes[p].part)];
      acc.assign(static_cast<std::size_t>(lattice.out_rows) * geo.out_cols, T{0});
      for (int a = 0; a < sub.height; ++a)
        for (int j = 0; j < sub.columns; ++j)
          sweep(acc.data(), mask[first[p] + static_cast<std::size_t>(j)], view_origin_row(geo, a), s, lattice.out_rows,
                [](T& o, T v) { o += v; });
      for (int R = 0; R < lattice.out_rows; ++R)
        for (int K = 0; K < geo.out_cols; ++K)
          counts[static_cast<std::size_t>(R) * lattice.out_cols + geo.parity + 2 * K] +=
              acc[static_cast<std::size_t>(R) * geo.out_cols + K];
    }
  }

  const int channels = x.channels();
  BasicHexTensor<T> out(x.batch(), channels, lattice.output_grid(x.grid()), fill);
  parallel_for(static_cast<std::size_t>(x.batch()) * channels, cfg.threads, [&](std::size_t tile) {
    const int b = static_cast<int>(tile / static_cast<std::size_t>(channels));
    const int c = static_cast<int>(tile % static_cast<std::size_t>(channels));
    std::span<T> dst = out.plane(b, c);
    std::vector<T> acc;
    for (std::size_t p = 0; p < passes.size(); ++p) {
      const PassGeometry& geo = passes[p].geo;
      const SubKernel& sub = set.parts[static_cast<std::size_t>(passes[p].part)];
      const ColumnView<T>* view = &views[tile * slots.size() + first[p]];
      acc.assign(static_cast<std::size_t>(lattice.out_rows) * geo.out_cols, fill);
      for (int a = 0; a < sub.height; ++a)
        for (int j = 0; j < sub.columns; ++j) {
          if (use_max) {
            sweep(acc.data(), view[j], view_origin_row(geo, a), s, lattice.out_rows,
                  [](T& o, T v) { o = std::max(o, v); });
          } else {
            sweep(acc.data(), view[j], view_origin_row(geo, a), s, lattice.out_rows, [](T& o, T v) { o += v; });
          }
        }
      for (int R = 0; R < lattice.out_rows; ++R)
        for (int K = 0; K < geo.out_cols; ++K) {
          T& cell = dst[static_cast<std::size_t>(R) * lattice.out_cols + geo.parity + 2 * K];
          const T v = acc[static_cast<std::size_t>(R) * geo.out_cols + K];
          cell = use_max ? std::max(cell, v) : cell + v;
        }
    }
    if (!use_max) {
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] /= counts[i];
    }
  });
  return out;
}

template BasicHexTensor<double> conv2d(const BasicHexTensor<double>&, const HexKernel&, const ConvConfig&);
template BasicHexTensor<float> conv2d(const BasicHexTensor<float>&, const HexKernel&, const ConvConfig&);
template BasicHexTensor<double> pool2d(const BasicHexTensor<double>&, int, const ConvConfig&);
template BasicHexTensor<float> pool2d(const BasicHexTensor<float>&, int, const ConvConfig&);

HexVolume conv3d(const HexVolume& x, const HexKernel3d& k, const ConvConfig& cfg) {
  check_channels(k.in_channels(), x.channels());
  if (k.depth() % 2 == 0) throw std::invalid_argument("depth kernel extent must be odd");
  if (cfg.depth_stride < 1) throw std::invalid_argument("depth stride must be >= 1");
  const StrideLattice lattice = strided_lattice(x.grid(), cfg.stride);
  const int half = (k.depth() - 1) / 2;
  const int out_depth = (x.depth() - 1) / cfg.depth_stride + 1;
  HexVolume out(x.batch(), k.out_channels(), out_depth, lattice.output_grid(x.grid()));

  ConvConfig plane_cfg = cfg;
  plane_cfg.mode = OpKind::conv2d;
  std::vector<HexTensor> slices;
  slices.reserve(static_cast<std::size_t>(x.depth()));
  for (int z = 0; z < x.depth(); ++z) slices.push_back(x.slice(z));
  std::vector<HexKernel> kernel_slices;
  for (int kz = 0; kz < k.depth(); ++kz) kernel_slices.push_back(k.slice(kz));

  for (int Z = 0; Z < out_depth; ++Z) {
    const int zc = Z * cfg.depth_stride;
    for (int kz = 0; kz < k.depth(); ++kz) {
      const int z = zc + kz - half;
      if (z < 0 || z >= x.depth()) continue;
      const HexTensor plane =
          conv2d(slices[static_cast<std::size_t>(z)], kernel_slices[static_cast<std::size_t>(kz)], plane_cfg);
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

ConvGradients conv2d_backward(const HexTensor& grad_out, const HexTensor& x, const HexKernel& k,
                              const ConvConfig& cfg) {
  check_channels(k.in_channels(), x.channels());
  const StrideLattice lattice = strided_lattice(x.grid(), cfg.stride);
  if (grad_out.batch() != x.batch() || grad_out.channels() != k.out_channels() ||
      grad_out.rows() != lattice.out_rows || grad_out.cols() != lattice.out_cols) {
    throw std::invalid_argument("conv2d_backward: gradient shape does not match the forward output");
  }
  const SubKernelSet set = decompose(k);
  const std::vector<Pass> passes = plan_passes(x.grid(), lattice, set);
  const std::vector<ViewSlot> slots = view_slots(x.grid(), passes, set);
  const std::vector<std::size_t> first = first_view_of_pass(slots, passes.size());
  const int s = lattice.stride;
  const auto views = gather_all<double>(x, passes, set, slots, s, 0.0, cfg.threads);

  const int batch = x.batch();
  const int in_ch = x.channels();
  const int out_ch = k.out_channels();
  const int elements = k.elements();

  ConvGradients grads;
  grads.grad_x = HexTensor(batch, in_ch, x.grid());
  grads.grad_w.assign(k.weights().size(), 0.0);
  grads.grad_b.assign(static_cast<std::size_t>(out_ch), 0.0);

  for (int co = 0; co < out_ch; ++co)
    for (int b = 0; b < batch; ++b)
      for (const double g : grad_out.plane(b, co)) grads.grad_b[static_cast<std::size_t>(co)] += g;

  // Output gradient split into its even and odd columns:
  // index ((b * out_ch + co) * 2 + parity).
  std::vector<std::vector<double>> split(static_cast<std::size_t>(batch) * out_ch * 2);
  for (int b = 0; b < batch; ++b)
    for (int co = 0; co < out_ch; ++co)
      for (int parity = 0; parity < 2; ++parity) {
        const int width = parity < lattice.out_cols ? (lattice.out_cols - parity + 1) / 2 : 0;
        split_columns<double>(grad_out.plane(b, co), lattice.out_rows, lattice.out_cols, parity, width,
                              split[(static_cast<std::size_t>(b) * out_ch + co) * 2 + static_cast<std::size_t>(parity)]);
      }
  auto split_of = [&](int b, int co, int parity) -> const std::vector<double>& {
    return split[(static_cast<std::size_t>(b) * out_ch + co) * 2 + static_cast<std::size_t>(parity)];
  };

  // Input gradient: scatter through each pass into view-shaped buffers, then
  // back onto the grid.
  parallel_for(static_cast<std::size_t>(batch) * in_ch, cfg.threads, [&](std::size_t tile) {
    const int b = static_cast<int>(tile / static_cast<std::size_t>(in_ch));
    const int ci = static_cast<int>(tile % static_cast<std::size_t>(in_ch));
    std::span<double> dst = grads.grad_x.plane(b, ci);
    std::vector<double> arena;
    for (std::size_t p = 0; p < passes.size(); ++p) {
      const PassGeometry& geo = passes[p].geo;
      const SubKernel& sub = set.parts[static_cast<std::size_t>(passes[p].part)];
      const std::size_t sub_slots = sub.element_index.size();
      const ColumnView<double>* shape = &views[tile * slots.size() + first[p]];
      std::size_t total = 0;
      for (int j = 0; j < sub.columns; ++j) total += shape[j].size();
      arena.assign(total, 0.0);
      std::vector<ColumnView<double>> scratch;
      for (int j = 0, at = 0; j < sub.columns; at += static_cast<int>(shape[j].size()), ++j)
        scratch.push_back({shape[j].rows, shape[j].width, arena.data() + at});

      // Output channels are folded in groups of kChannelBlock; zero weights
      // against a zero gradient pad the last group.
      const std::vector<double> zeros(split_of(b, 0, geo.parity).size(), 0.0);
      for (int co0 = 0; co0 < out_ch; co0 += kChannelBlock) {
        const double* g[kChannelBlock];
        for (int q = 0; q < kChannelBlock; ++q)
          g[q] = co0 + q < out_ch ? split_of(b, co0 + q, geo.parity).data() : zeros.data();
        for (int a = 0; a < sub.height; ++a)
          for (int j = 0; j < sub.columns; ++j) {
            const std::size_t slot = static_cast<std::size_t>(a * sub.columns + j);
            double w[kChannelBlock] = {};
            for (int q = 0; q < kChannelBlock && co0 + q < out_ch; ++q)
              w[q] = sub.weights[(static_cast<std::size_t>(co0 + q) * in_ch + ci) * sub_slots + slot];
            const ColumnView<double>& sc = scratch[static_cast<std::size_t>(j)];
            const int row0 = view_origin_row(geo, a);
            const int runs = s == 1 ? 1 : lattice.out_rows;
            const int len = s == 1 ? lattice.out_rows * sc.width : sc.width;
            for (int R = 0; R < runs; ++R) {
              double* __restrict row = sc.row(row0 + s * R);
              const std::size_t off = static_cast<std::size_t>(R) * sc.width;
              const double* __restrict g0 = g[0] + off;
              const double* __restrict g1 = g[1] + off;
              const double* __restrict g2 = g[2] + off;
              const double* __restrict g3 = g[3] + off;
              for (int i = 0; i < len; ++i) row[i] += (w[0] * g0[i] + w[1] * g1[i]) + (w[2] * g2[i] + w[3] * g3[i]);
            }
          }
      }
      for (int j = 0; j < sub.columns; ++j) {
        const ColumnView<double>& sc = scratch[static_cast<std::size_t>(j)];
        const int col0 = view_origin_col(geo, sub, s, j) - geo.pad_left;
        for (int K = 0; K < sc.width; ++K) {
          const int c = col0 + 2 * s * K;
          if (c < 0 || c >= x.cols()) continue;
          for (int r = 0; r < x.rows(); ++r) dst[static_cast<std::size_t>(r) * x.cols() + c] += sc.row(r + geo.pad_top)[K];
        }
      }
    }
  });

  // Weight gradient: correlate the output gradient with the input views.
  parallel_for(static_cast<std::size_t>(out_ch) * in_ch, cfg.threads, [&](std::size_t tile) {
    const int co = static_cast<int>(tile / static_cast<std::size_t>(in_ch));
    const int ci = static_cast<int>(tile % static_cast<std::size_t>(in_ch));
    double* gw = grads.grad_w.data() + tile * static_cast<std::size_t>(elements);
    for (std::size_t p = 0; p < passes.size(); ++p) {
      const PassGeometry& geo = passes[p].geo;
      const SubKernel& sub = set.parts[static_cast<std::size_t>(passes[p].part)];
      for (int a = 0; a < sub.height; ++a)
        for (int j = 0; j < sub.columns; ++j) {
          const int row0 = view_origin_row(geo, a);
          double acc = 0.0;
          for (int b = 0; b < batch; ++b) {
            const ColumnView<double>& src =
                views[(static_cast<std::size_t>(b) * in_ch + ci) * slots.size() + first[p] + static_cast<std::size_t>(j)];
            const double* g = split_of(b, co, geo.parity).data();
            if (s == 1) {
              acc += dot(g, src.row(row0), lattice.out_rows * src.width);
              continue;
            }
            for (int R = 0; R < lattice.out_rows; ++R) {
              const double* in_row = src.row(row0 + s * R);
              const double* g_row = g + static_cast<std::size_t>(R) * src.width;
              acc += dot(g_row, in_row, src.width);
            }
          }
          gw[sub.element_index[static_cast<std::size_t>(a * sub.columns + j)]] += acc;
        }
    }
  });
  return grads;
}

HexTensor pool2d_backward(const HexTensor& grad_out, const HexTensor& x, int n, const ConvConfig& cfg) {
  if (n < 1) throw std::invalid_argument("pooling size must be >= 1");
  if (cfg.mode != OpKind::maxpool && cfg.mode != OpKind::avgpool) {
    throw std::invalid_argument("pool2d_backward needs maxpool or avgpool mode");
  }
  const StrideLattice lattice = strided_lattice(x.grid(), cfg.stride);
  if (grad_out.batch() != x.batch() || grad_out.channels() != x.channels() || grad_out.rows() != lattice.out_rows ||
      grad_out.cols() != lattice.out_cols) {
    throw std::invalid_argument("pool2d_backward: gradient shape does not match the forward output");
  }
  const bool use_max = cfg.mode == OpKind::maxpool;

  const PoolWindows& windows = pool_windows(x.grid(), n, lattice);
  HexTensor grad_x(x.batch(), x.channels(), x.grid());
  parallel_for(static_cast<std::size_t>(x.batch()) * x.channels(), cfg.threads, [&](std::size_t tile) {
    const int b = static_cast<int>(tile / static_cast<std::size_t>(x.channels()));
    const int c = static_cast<int>(tile % static_cast<std::size_t>(x.channels()));
    std::span<const double> in = x.plane(b, c);
    std::span<const double> g = grad_out.plane(b, c);
    std::span<double> dst = grad_x.plane(b, c);
    for (std::size_t o = 0; o + 1 < windows.start.size(); ++o) {
      const std::span<const std::size_t> cells(windows.cells.data() + windows.start[o],
                                                windows.start[o + 1] - windows.start[o]);
      if (use_max) {
        std::size_t best = cells.front();
        for (const std::size_t cell : cells)
          if (in[cell] > in[best]) best = cell;
        dst[best] += g[o];
      } else {
        const double share = g[o] / static_cast<double>(cells.size());
        for (const std::size_t cell : cells) dst[cell] += share;
      }
    }
  });
  return grad_x;
}

}  // namespace hexgrid
