#pragma once

// Geometry of the offset-addressed hexagonal grid.
//
// A pointy-column hexagonal array is stored as a rectangular tensor: pixels
// are grouped into vertical columns and every odd-indexed column is shifted
// up by half a pitch so that all columns share the same rows. In physical
// space odd columns therefore sit half a pitch *lower* than even columns.
// Rows are counted top to bottom and columns left to right.

#include <cstddef>
#include <cstdint>
#include <compare>
#include <utility>
#include <vector>

namespace hexgrid {

/// Token written into file headers to pin the parity convention above.
inline constexpr const char* kParityToken = "odd-low";

struct GridSpec {
  int rows = 1;
  int cols = 1;
  double pitch = 1.0;

  GridSpec() = default;
  /// Throws std::invalid_argument unless rows, cols >= 1 and pitch > 0.
  GridSpec(int rows, int cols, double pitch = 1.0);

  std::size_t cells() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct OffsetCoord {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const OffsetCoord&, const OffsetCoord&) = default;
};

/// Axial hex coordinate: q runs along columns, r along the up-left/down-right
/// diagonal family. Neighbours of (q, r) are (q±1, r), (q, r±1), (q+1, r-1)
/// and (q-1, r+1).
struct AxialCoord {
  int q = 0;
  int r = 0;

  friend auto operator<=>(const AxialCoord&, const AxialCoord&) = default;
};

/// 0 for even columns, 1 for odd ones; valid for negative indices too.
constexpr int column_parity(int col) { return ((col % 2) + 2) % 2; }

constexpr AxialCoord offset_to_axial(OffsetCoord p) {
  return {p.col, p.row - (p.col - column_parity(p.col)) / 2};
}

constexpr OffsetCoord axial_to_offset(AxialCoord a) {
  return {a.r + (a.q - column_parity(a.q)) / 2, a.q};
}

bool contains(const GridSpec& g, OffsetCoord p);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Physical centre of a pixel; y decreases downwards. Throws std::out_of_range
/// for coordinates outside the grid.
Point2 pixel_center(OffsetCoord p, const GridSpec& g);

/// Graph distance on the hexagonal lattice.
int hex_distance(AxialCoord a, AxialCoord b);

/// 60 degree rotation of `p` about `center`.
constexpr AxialCoord rotate60(AxialCoord p, AxialCoord center) {
  const int dq = p.q - center.q;
  const int dr = p.r - center.r;
  return {center.q - dr, center.r + dq + dr};
}

/// Element of a hexagonal kernel: column offset from the centre and the
/// vertical index inside that column (0 = topmost).
struct KernelElement {
  int dc = 0;
  int slot = 0;

  friend bool operator==(const KernelElement&, const KernelElement&) = default;
};

/// Number of pixels in a hexagon of `n` rings around a centre pixel.
constexpr int hex_element_count(int n) { return 3 * n * n + 3 * n + 1; }

/// Height of the kernel column at horizontal offset `dc`.
constexpr int kernel_column_height(int n, int dc) { return 2 * n + 1 - (dc < 0 ? -dc : dc); }

/// Row offset (relative to the centre row) of the topmost pixel of the column
/// `dc` columns away from a centre sitting in a column of parity
/// `center_parity`. This is the single closed form used to align columns.
constexpr int column_top_offset(int n, int dc, int center_parity) {
  const int adc = dc < 0 ? -dc : dc;
  return -n + (adc + center_parity) / 2;
}

/// Element order of a size-n hexagonal kernel: column-major, columns left to
/// right, each column top to bottom.
class KernelLayout {
 public:
  explicit KernelLayout(int size);

  int size() const { return size_; }
  std::size_t element_count() const { return elements_.size(); }
  const std::vector<KernelElement>& elements() const { return elements_; }

  /// Index of the first element of column `dc` in the canonical order.
  int column_start(int dc) const { return column_start_[static_cast<std::size_t>(dc + size_)]; }
  int index_of(int dc, int slot) const { return column_start(dc) + slot; }

 private:
  int size_;
  std::vector<KernelElement> elements_;
  std::vector<int> column_start_;
};

/// In-grid pixels within `n` rings of `center`, in KernelLayout order.
std::vector<OffsetCoord> neighborhood(OffsetCoord center, int n, const GridSpec& g);

/// Like neighborhood() but also reports each pixel's KernelLayout index.
std::vector<std::pair<OffsetCoord, int>> indexed_neighborhood(OffsetCoord center, int n, const GridSpec& g);

}  // namespace hexgrid
