// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance            all criteria
//   acceptance 1 4 7      a subset
//
// Exit status is 0 only if every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hexgrid/engine.hpp"
#include "hexgrid/experiment.hpp"
#include "hexgrid/gradcheck.hpp"
#include "hexgrid/hexio.hpp"
#include "hexgrid/lattice.hpp"
#include "hexgrid/oracle.hpp"
#include "hexgrid/parallel.hpp"

using namespace hexgrid;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void fill(std::vector<double>& v, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& x : v) x = dist(rng);
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ---------------------------------------------------------------------------

Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  double conv = 0, maxp = 0, avgp = 0, conv3 = 0;
  std::size_t cases = 0;
  for (int n = 0; n <= 3; ++n)
    for (int s = 1; s <= 3; ++s)
      for (int rows = 1; rows <= 12; ++rows)
        for (int cols = 1; cols <= 13; ++cols)
          for (int ch : {1, 3})
            for (int batch : {1, 2}) {
              HexTensor x(batch, ch, GridSpec(rows, cols));
              fill(x.values(), rng);
              HexKernel k(n, ch, 1 + static_cast<int>(rng() % 3));
              fill(k.weights(), rng);
              fill(k.bias(), rng);
              ConvConfig cfg;
              cfg.stride = s;
              conv = std::max(conv, max_diff(conv2d(x, k, cfg).values(), oracle::conv2d(x, k, s).values()));
              if (n == 0) {  // pooling neighbourhoods start at n = 1
                ++cases;
                continue;
              }
              cfg.mode = OpKind::maxpool;
              maxp = std::max(maxp, max_diff(pool2d(x, n, cfg).values(), oracle::pool2d(x, n, s, PoolMode::max).values()));
              cfg.mode = OpKind::avgpool;
              avgp = std::max(avgp, max_diff(pool2d(x, n, cfg).values(), oracle::pool2d(x, n, s, PoolMode::avg).values()));
              ++cases;
            }
  // conv3d: every (n, s, k_d, depth, depth stride) on random grids from the envelope.
  for (int n = 0; n <= 3; ++n)
    for (int s = 1; s <= 3; ++s)
      for (int kd : {1, 3})
        for (int depth = 1; depth <= 5; ++depth)
          for (int ds : {1, 2})
            for (int trial = 0; trial < 3; ++trial) {
              const GridSpec g(1 + static_cast<int>(rng() % 12), 1 + static_cast<int>(rng() % 13));
              const int ch = rng() % 2 ? 3 : 1;
              HexVolume x(1 + static_cast<int>(rng() % 2), ch, depth, g);
              fill(x.values(), rng);
              HexKernel3d k(n, kd, ch, 2);
              fill(k.weights(), rng);
              fill(k.bias(), rng);
              ConvConfig cfg;
              cfg.stride = s;
              cfg.mode = OpKind::conv3d;
              cfg.depth_kernel = kd;
              cfg.depth_stride = ds;
              conv3 = std::max(conv3, max_diff(conv3d(x, k, cfg).values(), oracle::conv3d(x, k, s, ds).values()));
              ++cases;
            }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = conv < 1e-10 && conv3 < 1e-10 && maxp == 0.0 && avgp < 1e-12 && secs < 120.0;
  o.detail = std::to_string(cases) + " cases (pools n>=1); max|engine-oracle| conv2d " + fmt("%.2e", conv) + ", conv3d " +
             fmt("%.2e", conv3) + ", maxpool " + fmt("%.2e", maxp) + ", avgpool " + fmt("%.2e", avgp) + "; " +
             fmt("%.1f s", secs) + " (limit 120 s)";
  return o;
}

// ---------------------------------------------------------------------------

Outcome kernel_geometry() {
  Outcome o{true, ""};
  for (int n = 0; n <= 3; ++n) {
    // Independent count: axial offsets within hex distance n of the origin.
    int within = 0;
    for (int q = -n; q <= n; ++q)
      for (int r = -n; r <= n; ++r) within += std::max({std::abs(q), std::abs(r), std::abs(q + r)}) <= n;
    const int layout = static_cast<int>(KernelLayout(n).element_count());
    const int expected[] = {1, 7, 19, 37};
    o.pass = o.pass && layout == expected[n] && within == expected[n] && hex_element_count(n) == expected[n];
    o.detail += (n ? "/" : "elements ") + std::to_string(layout);
  }
  const SubKernelSet d = decompose(2);
  std::vector<int> heights;
  for (const SubKernel& p : d.parts) heights.push_back(p.height);
  o.pass = o.pass && heights == std::vector<int>{5, 4, 3};
  o.detail += "; size-2 sub-kernels " + std::to_string(d.parts.size()) + " with heights";
  for (int h : heights) o.detail += " " + std::to_string(h);
  return o;
}

// ---------------------------------------------------------------------------

Outcome stride_lattice() {
  std::mt19937_64 rng(303);
  std::size_t compared = 0, mismatches = 0;
  for (int s = 1; s <= 3; ++s)
    for (int rows = 1; rows <= 12; ++rows)
      for (int cols = 1; cols <= 13; ++cols) {
        const GridSpec g(rows, cols);
        // Output extent from the sampling rule alone: columns sC < cols up to
        // the first one without an in-grid centre, rows cut to the shortest.
        int out_cols = 0, out_rows = rows;
        for (int C = 0; s * C < cols && (s * C / 2) % s < rows; ++C, ++out_cols)
          out_rows = std::min(out_rows, (rows - (s * C / 2) % s + s - 1) / s);
        HexTensor x(1, 2, g);
        fill(x.values(), rng);
        for (int n = 0; n <= 2; ++n) {
          HexKernel k(n, 2, 2);
          fill(k.weights(), rng);
          fill(k.bias(), rng);
          ConvConfig one, strided;
          strided.stride = s;
          const HexTensor full = conv2d(x, k, one);
          const HexTensor part = conv2d(x, k, strided);
          if (part.rows() != out_rows || part.cols() != out_cols) {
            ++mismatches;
            continue;
          }
          for (int c = 0; c < 2; ++c)
            for (int R = 0; R < out_rows; ++R)
              for (int C = 0; C < out_cols; ++C) {
                const int rho = (s * C / 2) % s;
                mismatches += part(0, c, R, C) != full(0, c, rho + s * R, s * C);
                ++compared;
              }
        }
      }
  return {mismatches == 0 && compared > 0,
          std::to_string(compared) + " strided outputs compared exactly, " + std::to_string(mismatches) + " mismatches"};
}

// ---------------------------------------------------------------------------

Outcome symmetry() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double worst = 0.0;
  int images = 0;
  // Centres in an odd and an even column.
  const std::pair<GridSpec, OffsetCoord> setups[] = {{GridSpec(15, 15), {7, 7}}, {GridSpec(16, 17), {8, 8}}};
  for (int i = 0; i < 100; ++i, ++images) {
    const auto& [g, center] = setups[i % 2];
    const AxialCoord c = offset_to_axial(center);
    HexTensor x(1, 1, g);
    std::vector<bool> done(g.cells(), false);
    for (int r = 0; r < g.rows; ++r)
      for (int col = 0; col < g.cols; ++col) {
        AxialCoord p = offset_to_axial({r, col});
        if (hex_distance(p, c) > 4 || done[static_cast<std::size_t>(r) * g.cols + col]) continue;
        const double v = dist(rng);
        for (int t = 0; t < 6; ++t, p = rotate60(p, c)) {
          const OffsetCoord o = axial_to_offset(p);
          x(0, 0, o.row, o.col) = v;
          done[static_cast<std::size_t>(o.row) * g.cols + o.col] = true;
        }
      }
    for (int n : {1, 2}) {
      const HexTensor y = conv2d(x, HexKernel::debug(n), ConvConfig{});
      for (int r = 0; r < g.rows; ++r)
        for (int col = 0; col < g.cols; ++col) {
          const OffsetCoord q = axial_to_offset(rotate60(offset_to_axial({r, col}), c));
          if (contains(g, q)) worst = std::max(worst, std::abs(y(0, 0, r, col) - y(0, 0, q.row, q.col)));
        }
    }
  }
  return {worst <= 1e-12, std::to_string(images) + " symmetric images, debug n=1,2; max asymmetry " +
                              fmt("%.2e", worst) + " (limit 1e-12)"};
}

// ---------------------------------------------------------------------------

Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  const nn::GradCheckReport report = nn::gradient_suite(505);
  const double secs = seconds_since(t0);
  double layer = 0.0, model = 0.0;
  std::size_t entries = 0;
  for (const nn::GradCheckEntry& e : report.entries) {
    (e.threshold == nn::kLayerGradTolerance ? layer : model) = std::max(
        e.threshold == nn::kLayerGradTolerance ? layer : model, e.max_error);
    entries += e.checked;
  }
  return {report.passed() && layer < 1e-5 && model < 1e-4 && secs < 60.0,
          std::to_string(report.entries.size()) + " checks, " + std::to_string(entries) +
              " entries; max relative error per layer " + fmt("%.2e", layer) + " (limit 1e-5), end-to-end " +
              fmt("%.2e", model) + " (limit 1e-4); " + fmt("%.1f s", secs)};
}

// ---------------------------------------------------------------------------

Outcome reproduction() {
  const std::clock_t cpu0 = std::clock();
  const auto t0 = std::chrono::steady_clock::now();
  experiment::Config cfg;  // defaults: 10 iterations, 100 epochs, 128 images per class
  cfg.models = {experiment::kHexSmall, experiment::kSquareSmall};
  cfg.threads = default_thread_count();
  const auto runs = experiment::run(cfg, [](const std::string& line) { std::fprintf(stderr, "  %s\n", line.c_str()); });
  const experiment::Summary h = experiment::summarise(runs[0], cfg.train.classes);
  const experiment::Summary s = experiment::summarise(runs[1], cfg.train.classes);
  const double cpu = static_cast<double>(std::clock() - cpu0) / CLOCKS_PER_SEC;
  const double wall = seconds_since(t0);

  const bool a = h.reached_full * h.iterations >= 9 - 1e-9;
  const bool b = h.mean_final > s.mean_final;
  const bool c = s.above_chance < h.above_chance;
  bool d = true;
  std::string counts;
  for (int id = 0; id < experiment::kModelCount; ++id) {
    const auto mid = static_cast<experiment::ModelId>(id);
    const std::size_t p = experiment::model_config(mid, cfg.data, 1).parameter_count();
    const double target = mid == experiment::kSquareLarge ? 1.2e6 : 13e3;
    d = d && std::abs(static_cast<double>(p) / target - 1.0) <= 0.2;
    counts += std::string(id ? ", " : "") + experiment::model_name(mid) + " " + std::to_string(p);
  }
  const bool budget = cpu <= 900.0;

  auto mark = [](bool ok) { return ok ? "ok" : "FAILED"; };
  char line[640];
  std::snprintf(line, sizeof line,
                "(a) h-CNN reached 100%% in %d/%d [%s]; (b) mean final h %.4f vs s %.4f [%s]; "
                "(c) above chance h %d/%d vs s %d/%d [%s]; (d) params %s [%s]; cpu %.0f s, wall %.0f s (limit 900 s) [%s]",
                static_cast<int>(std::lround(h.reached_full * h.iterations)), h.iterations, mark(a), h.mean_final,
                s.mean_final, mark(b), static_cast<int>(std::lround(h.above_chance * h.iterations)), h.iterations,
                static_cast<int>(std::lround(s.above_chance * s.iterations)), s.iterations, mark(c), counts.c_str(),
                mark(d), cpu, wall, mark(budget));
  return {a && b && c && d && budget, line};
}

// ---------------------------------------------------------------------------

Outcome file_round_trip() {
  std::mt19937_64 rng(707);
  const fs::path dir = fs::temp_directory_path() / ("hexgrid_acceptance_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  auto value = [&] {
    // Full-range finite doubles: random sign, exponent and mantissa.
    std::uint64_t bits;
    double v;
    do {
      bits = rng();
      std::memcpy(&v, &bits, sizeof v);
    } while (!std::isfinite(v));
    return v;
  };
  auto same_bits = [](const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
  };
  int tensors = 0, kernels = 0;
  for (int i = 0; i < 1000; ++i) {
    HexTensor x(1, 1 + static_cast<int>(rng() % 3), GridSpec(1 + static_cast<int>(rng() % 12), 1 + static_cast<int>(rng() % 13)));
    for (double& v : x.values()) v = value();
    io::save_hexcsv(dir / "t.hexcsv", x);
    const HexTensor y = io::load_hexcsv(dir / "t.hexcsv");
    tensors += y.same_shape(x) && same_bits(x.values(), y.values());

    HexKernel k(static_cast<int>(rng() % 4), 1 + static_cast<int>(rng() % 3), 1 + static_cast<int>(rng() % 3));
    for (double& v : k.weights()) v = value();
    for (double& v : k.bias()) v = value();
    io::save_kernel(dir / "k.kernel", k);
    const HexKernel back = io::load_kernel(dir / "k.kernel");
    kernels += back.size() == k.size() && same_bits(k.weights(), back.weights()) && same_bits(k.bias(), back.bias());
  }
  fs::remove_all(dir);
  return {tensors == 1000 && kernels == 1000, "bit-exact hexCSV files " + std::to_string(tensors) +
                                                  "/1000, kernel files " + std::to_string(kernels) + "/1000"};
}

// ---------------------------------------------------------------------------

Outcome coordinates() {
  const GridSpec big(50, 51);
  int round_trips = 0;
  for (int r = 0; r < big.rows; ++r)
    for (int c = 0; c < big.cols; ++c) round_trips += axial_to_offset(offset_to_axial({r, c})) == OffsetCoord{r, c};
  // Axial -> offset -> axial over the axial image of the grid as well.
  for (int r = 0; r < big.rows; ++r)
    for (int c = 0; c < big.cols; ++c) {
      const AxialCoord a = offset_to_axial({r, c});
      round_trips += offset_to_axial(axial_to_offset(a)) == a;
    }

  const GridSpec small(10, 11, 1.7);
  int pairs = 0, disagreements = 0;
  for (int r1 = 0; r1 < small.rows; ++r1)
    for (int c1 = 0; c1 < small.cols; ++c1)
      for (int r2 = 0; r2 < small.rows; ++r2)
        for (int c2 = 0; c2 < small.cols; ++c2) {
          const Point2 p = pixel_center({r1, c1}, small), q = pixel_center({r2, c2}, small);
          const bool at_pitch = std::abs(std::hypot(p.x - q.x, p.y - q.y) - small.pitch) <= 1e-9 * small.pitch;
          const bool neighbours = hex_distance(offset_to_axial({r1, c1}), offset_to_axial({r2, c2})) == 1;
          disagreements += at_pitch != neighbours;
          ++pairs;
        }
  const int expected = 2 * big.rows * big.cols;
  return {round_trips == expected && disagreements == 0,
          "offset<->axial round trips " + std::to_string(round_trips) + "/" + std::to_string(expected) +
              " on 50x51; distance-1 vs pitch disagreements " + std::to_string(disagreements) + " over " +
              std::to_string(pairs) + " pairs on 10x11"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria{
      {1, {"oracle equivalence", oracle_equivalence}},
      {2, {"kernel geometry", kernel_geometry}},
      {3, {"stride lattice", stride_lattice}},
      {4, {"symmetry conservation", symmetry}},
      {5, {"gradient suite", gradients}},
      {6, {"desk-scale reproduction", reproduction}},
      {7, {"file-format round trip", file_round_trip}},
      {8, {"coordinate layer", coordinates}},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int id = std::atoi(argv[i]);
    if (!criteria.count(id)) {
      std::fprintf(stderr, "usage: %s [criterion 1-8 ...]\n", argv[0]);
      return 1;
    }
    selected.insert(id);
  }
  if (selected.empty())
    for (const auto& entry : criteria) selected.insert(entry.first);

  bool all = true;
  for (int id : selected) {
    const auto& [name, check] = criteria.at(id);
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
