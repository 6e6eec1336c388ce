#pragma once

// Synthetic hexagonal-shape dataset and its resampling onto square grids.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "hexgrid/hexcore.hpp"
#include "hexgrid/tensor.hpp"
#include "hexgrid/train.hpp"

namespace hexgrid::datagen {

inline constexpr int kShapeClasses = 4;

/// Shape classes: 0 filled disc of radius 1 (7 px), 1 hollow ring of radius 2
/// (12 px), 2 filled disc of radius 2 (19 px), 3 hollow ring of radius 1 (6 px).
const char* shape_name(int class_id);
int shape_radius(int class_id);

/// Pixels of a shape centred at `center`; throws std::out_of_range if any
/// pixel falls outside the grid and std::invalid_argument for unknown classes.
std::vector<OffsetCoord> shape_pixels(int class_id, OffsetCoord center, const GridSpec& g);

/// Centres at which the whole shape fits inside the grid.
std::vector<OffsetCoord> valid_centers(int class_id, const GridSpec& g);

struct DatasetConfig {
  GridSpec grid{16, 16};
  double noise_sigma = 0.3;
  std::uint64_t seed = 1;
  int images_per_class = 128;
};

struct Sample {
  HexTensor image;  ///< (1, 1, rows, cols)
  int label = 0;
  OffsetCoord center;
};

/// Shape of amplitude 1 at a uniformly drawn valid centre on a zero
/// background, plus i.i.d. Gaussian noise on every cell.
Sample make_image(int class_id, std::mt19937_64& rng, const DatasetConfig& cfg);

/// Inverse-distance (power 2) interpolation from the three nearest hex pixel
/// centres onto a square grid covering the hex grid's bounding box. The
/// interpolation stencil depends only on the geometry and is built once.
class Resampler {
 public:
  /// factor 1: side = round(sqrt(rows*cols)); factor 2: twice that side.
  Resampler(const GridSpec& hex, int factor);

  int side() const { return side_; }
  const GridSpec& hex_grid() const { return hex_; }
  /// Resamples every (batch, channel) plane.
  HexTensor apply(const HexTensor& x) const;

  struct Tap {
    std::size_t hex_index;
    double weight;
  };
  /// Interpolation taps of square pixel (row, col).
  std::span<const Tap> taps(int row, int col) const;
  Point2 square_center(int row, int col) const;

 private:
  GridSpec hex_;
  int side_ = 0;
  double x_min_ = 0, x_max_ = 0, y_min_ = 0, y_max_ = 0;
  std::vector<Tap> taps_;  ///< three per square pixel
};

HexTensor resample_to_square(const HexTensor& x, int factor);

/// The three views of one noisy hex dataset: the hex images themselves and
/// their resamplings at factor 1 and 2. Samples are ordered so that sample k
/// has label k % 4.
struct DatasetBundle {
  nn::Dataset hex;
  nn::Dataset square_small;
  nn::Dataset square_large;
  std::vector<OffsetCoord> centers;
};

DatasetBundle build_dataset(const DatasetConfig& cfg);

}  // namespace hexgrid::datagen
