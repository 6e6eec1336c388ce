#include "hexgrid/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hexgrid::datagen {
namespace {

struct ShapeDef {
  const char* name;
  int radius;
  bool hollow;
};

constexpr std::array<ShapeDef, kShapeClasses> kShapes{{
    {"disc-1", 1, false},
    {"ring-2", 2, true},
    {"disc-2", 2, false},
    {"ring-1", 1, true},
}};

const ShapeDef& shape(int class_id) {
  if (class_id < 0 || class_id >= kShapeClasses) {
    throw std::invalid_argument("unknown shape class " + std::to_string(class_id));
  }
  return kShapes[static_cast<std::size_t>(class_id)];
}

}  // namespace

const char* shape_name(int class_id) { return shape(class_id).name; }
int shape_radius(int class_id) { return shape(class_id).radius; }

std::vector<OffsetCoord> shape_pixels(int class_id, OffsetCoord center, const GridSpec& g) {
  const ShapeDef& def = shape(class_id);
  const AxialCoord c = offset_to_axial(center);
  std::vector<OffsetCoord> out;
  for (int dq = -def.radius; dq <= def.radius; ++dq)
    for (int dr = -def.radius; dr <= def.radius; ++dr) {
      const AxialCoord p{c.q + dq, c.r + dr};
      const int d = hex_distance(p, c);
      if (d > def.radius || (def.hollow && d != def.radius)) continue;
      const OffsetCoord o = axial_to_offset(p);
      if (!contains(g, o)) throw std::out_of_range(std::string(def.name) + " does not fit at this centre");
      out.push_back(o);
    }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<OffsetCoord> valid_centers(int class_id, const GridSpec& g) {
  const int radius = shape_radius(class_id);
  std::vector<OffsetCoord> out;
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c)
      if (neighborhood({r, c}, radius, g).size() == static_cast<std::size_t>(hex_element_count(radius)))
        out.push_back({r, c});
  return out;
}

Sample make_image(int class_id, std::mt19937_64& rng, const DatasetConfig& cfg) {
  if (!(cfg.noise_sigma >= 0.0)) throw std::invalid_argument("noise sigma must be non-negative");
  const std::vector<OffsetCoord> centers = valid_centers(class_id, cfg.grid);
  if (centers.empty()) throw std::domain_error(std::string(shape_name(class_id)) + " does not fit in the grid");

  std::uniform_int_distribution<std::size_t> pick(0, centers.size() - 1);
  Sample s{HexTensor(1, 1, cfg.grid), class_id, centers[pick(rng)]};
  for (const OffsetCoord& p : shape_pixels(class_id, s.center, cfg.grid)) s.image(0, 0, p.row, p.col) = 1.0;
  if (cfg.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    for (double& v : s.image.values()) v += noise(rng);
  }
  return s;
}

Resampler::Resampler(const GridSpec& hex, int factor) : hex_(hex) {
  if (factor != 1 && factor != 2) throw std::invalid_argument("resampling factor must be 1 or 2");
  side_ = static_cast<int>(std::lround(std::sqrt(static_cast<double>(hex.cells())))) * factor;

  x_min_ = 0.0;
  x_max_ = (hex.cols - 1) * (std::sqrt(3.0) / 2.0) * hex.pitch;
  y_max_ = 0.0;
  y_min_ = -((hex.rows - 1) + (hex.cols > 1 ? 0.5 : 0.0)) * hex.pitch;
  if (!(x_max_ > x_min_) || !(y_max_ > y_min_)) {
    throw std::domain_error("hex grid bounding box is degenerate; need at least two rows and two columns");
  }

  std::vector<Point2> centers;
  centers.reserve(hex.cells());
  for (int r = 0; r < hex.rows; ++r)
    for (int c = 0; c < hex.cols; ++c) centers.push_back(pixel_center({r, c}, hex));

  const std::size_t nearest = std::min<std::size_t>(3, centers.size());
  taps_.reserve(static_cast<std::size_t>(side_) * side_ * 3);
  std::vector<std::pair<double, std::size_t>> dist(centers.size());
  for (int i = 0; i < side_; ++i)
    for (int j = 0; j < side_; ++j) {
      const Point2 p = square_center(i, j);
      for (std::size_t k = 0; k < centers.size(); ++k)
        dist[k] = {std::hypot(p.x - centers[k].x, p.y - centers[k].y), k};
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(nearest), dist.end());

      std::array<Tap, 3> t{};
      if (dist[0].first < 1e-12 * hex.pitch) {
        t = {Tap{dist[0].second, 1.0}, Tap{dist[1].second, 0.0}, Tap{dist[2].second, 0.0}};
      } else {
        double total = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
          t[k] = {dist[k].second, 1.0 / (dist[k].first * dist[k].first)};
          total += t[k].weight;
        }
        for (Tap& tap : t) tap.weight /= total;
      }
      taps_.insert(taps_.end(), t.begin(), t.end());
    }
}

Point2 Resampler::square_center(int row, int col) const {
  const double w = (x_max_ - x_min_) / side_;
  const double h = (y_max_ - y_min_) / side_;
  return {x_min_ + (col + 0.5) * w, y_max_ - (row + 0.5) * h};
}

std::span<const Resampler::Tap> Resampler::taps(int row, int col) const {
  return {taps_.data() + (static_cast<std::size_t>(row) * side_ + col) * 3, 3};
}

HexTensor Resampler::apply(const HexTensor& x) const {
  if (x.rows() != hex_.rows || x.cols() != hex_.cols) throw std::invalid_argument("resampler built for another grid");
  HexTensor out(x.batch(), x.channels(), GridSpec(side_, side_));
  for (int b = 0; b < x.batch(); ++b)
    for (int c = 0; c < x.channels(); ++c) {
      const auto src = x.plane(b, c);
      auto dst = out.plane(b, c);
      for (std::size_t p = 0; p < dst.size(); ++p) {
        double v = 0.0;
        for (std::size_t k = 0; k < 3; ++k) v += taps_[p * 3 + k].weight * src[taps_[p * 3 + k].hex_index];
        dst[p] = v;
      }
    }
  return out;
}

HexTensor resample_to_square(const HexTensor& x, int factor) { return Resampler(x.grid(), factor).apply(x); }

DatasetBundle build_dataset(const DatasetConfig& cfg) {
  if (cfg.images_per_class < 1) throw std::invalid_argument("images_per_class must be >= 1");
  const int total = cfg.images_per_class * kShapeClasses;
  DatasetBundle bundle;
  bundle.hex.images = HexTensor(total, 1, cfg.grid);
  bundle.hex.labels.resize(static_cast<std::size_t>(total));
  bundle.centers.resize(static_cast<std::size_t>(total));

  for (int k = 0; k < total; ++k) {
    // Each image draws from its own generator so it can be regenerated alone.
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(seq);
    const int label = k % kShapeClasses;
    const Sample s = make_image(label, rng, cfg);
    std::copy(s.image.values().begin(), s.image.values().end(),
              bundle.hex.images.values().begin() + static_cast<std::ptrdiff_t>(k * cfg.grid.cells()));
    bundle.hex.labels[static_cast<std::size_t>(k)] = label;
    bundle.centers[static_cast<std::size_t>(k)] = s.center;
  }

  bundle.square_small = {Resampler(cfg.grid, 1).apply(bundle.hex.images), bundle.hex.labels};
  bundle.square_large = {Resampler(cfg.grid, 2).apply(bundle.hex.images), bundle.hex.labels};
  return bundle;
}

}  // namespace hexgrid::datagen
