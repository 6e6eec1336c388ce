// hexgrid: command-line entry points for the hexagonal convolution library.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 check failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hexgrid/datagen.hpp"
#include "hexgrid/engine.hpp"
#include "hexgrid/experiment.hpp"
#include "hexgrid/gradcheck.hpp"
#include "hexgrid/hexio.hpp"
#include "hexgrid/oracle.hpp"
#include "hexgrid/parallel.hpp"
#include "hexgrid/svg.hpp"

namespace fs = std::filesystem;
using namespace hexgrid;

namespace {

enum Exit { kOk = 0, kUsage = 1, kDataError = 2, kCheckFailed = 3 };

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

HexKernel parse_kernel_arg(const std::string& arg, int in_channels, int out_channels) {
  if (arg.rfind("debug:", 0) == 0) {
    const std::string tail = arg.substr(6);
    int n = -1;
    try {
      std::size_t used = 0;
      n = std::stoi(tail, &used);
      if (used != tail.size()) n = -1;
    } catch (const std::exception&) {
    }
    if (n < 0 || n > 64) throw DataError("bad debug kernel '" + arg + "': expected debug:<n> with n >= 0");
    return HexKernel::debug(n, in_channels, out_channels);
  }
  return io::load_kernel(arg);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create directory " + dir.string());
}

// ---------------------------------------------------------------- convolve

struct ConvolveArgs {
  std::string input, kernel, output;
  int stride = 1;
  int out_channels = 1;
};

int cmd_convolve(const ConvolveArgs& a) {
  const HexTensor x = io::load_hexcsv(a.input);
  const HexKernel k = parse_kernel_arg(a.kernel, x.channels(), a.out_channels);
  if (k.in_channels() != x.channels()) {
    throw DataError("kernel expects " + std::to_string(k.in_channels()) + " input channels, image has " +
                    std::to_string(x.channels()));
  }
  ConvConfig cfg;
  cfg.stride = a.stride;
  cfg.threads = default_thread_count();
  io::save_hexcsv(a.output, conv2d(x, k, cfg));
  return kOk;
}

// -------------------------------------------------------------------- pool

struct PoolArgs {
  std::string input, output, mode = "max";
  int size = 1;
  int stride = 1;
};

int cmd_pool(const PoolArgs& a) {
  const HexTensor x = io::load_hexcsv(a.input);
  ConvConfig cfg;
  cfg.stride = a.stride;
  cfg.mode = a.mode == "max" ? OpKind::maxpool : OpKind::avgpool;
  cfg.threads = default_thread_count();
  io::save_hexcsv(a.output, pool2d(x, a.size, cfg));
  return kOk;
}

// ------------------------------------------------------------- demo-shapes

// Largest |y(p) - y(rotate60(p))| over cells whose rotation stays on the grid.
double max_asymmetry(const HexTensor& y, OffsetCoord center) {
  const AxialCoord c = offset_to_axial(center);
  double worst = 0.0;
  for (int r = 0; r < y.rows(); ++r)
    for (int col = 0; col < y.cols(); ++col) {
      const OffsetCoord q = axial_to_offset(rotate60(offset_to_axial({r, col}), c));
      if (!contains(y.grid(), q)) continue;
      worst = std::max(worst, std::abs(y(0, 0, r, col) - y(0, 0, q.row, q.col)));
    }
  return worst;
}

struct DemoArgs {
  std::string out;
  std::uint64_t seed = 1;
};

int cmd_demo_shapes(const DemoArgs& a) {
  const fs::path dir(a.out);
  ensure_dir(dir);
  const GridSpec grid(15, 15);
  const OffsetCoord center{7, 7};
  const AxialCoord c = offset_to_axial(center);

  std::vector<std::pair<std::string, HexTensor>> inputs;
  for (int k = 0; k < datagen::kShapeClasses; ++k) {
    HexTensor x(1, 1, grid);
    for (const OffsetCoord& p : datagen::shape_pixels(k, center, grid)) x(0, 0, p.row, p.col) = 1.0;
    inputs.emplace_back(datagen::shape_name(k), std::move(x));
  }
  // A random image that is constant on every rotation orbit.
  {
    std::mt19937_64 rng(a.seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    HexTensor x(1, 1, grid);
    std::vector<bool> done(grid.cells(), false);
    for (int r = 0; r < grid.rows; ++r)
      for (int col = 0; col < grid.cols; ++col) {
        AxialCoord p = offset_to_axial({r, col});
        if (hex_distance(p, c) > 4 || done[static_cast<std::size_t>(r) * grid.cols + col]) continue;
        const double v = dist(rng);
        for (int i = 0; i < 6; ++i, p = rotate60(p, c)) {
          const OffsetCoord o = axial_to_offset(p);
          x(0, 0, o.row, o.col) = v;
          done[static_cast<std::size_t>(o.row) * grid.cols + o.col] = true;
        }
      }
    inputs.emplace_back("random-symmetric", std::move(x));
  }

  const double tolerance = 1e-12;
  nlohmann::json report;
  report["grid"] = {{"rows", grid.rows}, {"cols", grid.cols}, {"parity", kParityToken}};
  report["center"] = {{"row", center.row}, {"col", center.col}};
  report["kernel"] = "debug:1";
  report["tolerance"] = tolerance;
  report["shapes"] = nlohmann::json::array();
  double worst = 0.0;
  ConvConfig cfg;
  cfg.threads = default_thread_count();
  for (const auto& [name, x] : inputs) {
    const HexTensor y = conv2d(x, HexKernel::debug(1), cfg);
    const double in_asym = max_asymmetry(x, center);
    const double out_asym = max_asymmetry(y, center);
    worst = std::max(worst, out_asym);
    io::save_hexcsv(dir / (name + ".hexcsv"), x);
    io::save_hexcsv(dir / (name + "_debug1.hexcsv"), y);
    io::write_file_atomic(dir / (name + ".svg"), svg::render_hex_image(x, 0, 0, {12.0, name + " (input)"}));
    io::write_file_atomic(dir / (name + "_debug1.svg"),
                          svg::render_hex_image(y, 0, 0, {12.0, name + " convolved with debug:1"}));
    report["shapes"].push_back({{"name", name},
                                {"input_max_asymmetry", in_asym},
                                {"output_max_asymmetry", out_asym},
                                {"symmetric", out_asym <= tolerance}});
  }
  report["max_asymmetry"] = worst;
  report["passed"] = worst <= tolerance;
  io::write_file_atomic(dir / "symmetry.json", report.dump(2) + "\n");
  std::cout << "max asymmetry " << io::format_double(worst) << " (tolerance " << tolerance << ")\n";
  return worst <= tolerance ? kOk : kCheckFailed;
}

// -------------------------------------------------------------- experiment

struct ExperimentArgs {
  std::string out;
  int iterations = 10;
  std::uint64_t seed = 1;
  int epochs = 100;
  int images_per_class = 128;
  std::vector<std::string> models{"h-CNN-small", "s-CNN-small", "s-CNN-large"};
};

int cmd_experiment(const ExperimentArgs& a) {
  const fs::path dir(a.out);
  ensure_dir(dir);
  experiment::Config cfg;
  cfg.iterations = a.iterations;
  cfg.seed = a.seed;
  cfg.train.epochs = a.epochs;
  cfg.train.images_per_class = a.images_per_class;
  cfg.threads = default_thread_count();
  cfg.models.clear();
  for (const std::string& m : a.models)
    for (int id = 0; id < experiment::kModelCount; ++id)
      if (m == experiment::model_name(static_cast<experiment::ModelId>(id)))
        cfg.models.push_back(static_cast<experiment::ModelId>(id));

  const auto runs = experiment::run(cfg, [](const std::string& line) { std::cerr << line << std::endl; });

  std::ostringstream curves;
  curves << "model,iteration,epoch,accuracy,loss,lr\n";
  for (const auto& r : runs)
    for (std::size_t it = 0; it < r.curves.size(); ++it)
      for (const nn::EpochStats& e : r.curves[it].epochs)
        curves << r.name << ',' << it << ',' << e.epoch << ',' << io::format_double(e.accuracy) << ','
               << io::format_double(e.loss) << ',' << io::format_double(e.learning_rate) << '\n';
  io::write_file_atomic(dir / "curves.csv", curves.str());

  std::ostringstream summary;
  summary << "model,iterations,reached_100_fraction,above_chance_fraction,mean_final_accuracy,diverged,parameters\n";
  for (const auto& r : runs) {
    const experiment::Summary s = experiment::summarise(r, cfg.train.classes);
    summary << s.name << ',' << s.iterations << ',' << io::format_double(s.reached_full) << ','
            << io::format_double(s.above_chance) << ',' << io::format_double(s.mean_final) << ',' << s.diverged << ','
            << s.parameters << '\n';
  }
  io::write_file_atomic(dir / "summary.csv", summary.str());

  const char* colours[] = {"#1b9e77", "#d95f02", "#7570b3"};
  std::vector<svg::CurveSet> sets;
  for (const auto& r : runs) {
    svg::CurveSet set{r.name, colours[r.id], {}};
    for (const nn::LearningCurve& c : r.curves) {
      std::vector<double> acc;
      for (const nn::EpochStats& e : c.epochs) acc.push_back(e.accuracy);
      set.curves.push_back(std::move(acc));
    }
    sets.push_back(std::move(set));
  }
  io::write_file_atomic(dir / "learning_curves.svg",
                        svg::render_learning_curves(sets, "Learning curves, " + std::to_string(a.iterations) +
                                                              " iterations"));
  std::cout << summary.str();
  return kOk;
}

// ---------------------------------------------------------------- gradcheck

int cmd_gradcheck(std::uint64_t seed) {
  const nn::GradCheckReport report = nn::gradient_suite(seed);
  std::printf("%-28s %8s %14s %10s\n", "check", "entries", "max_rel_error", "threshold");
  for (const nn::GradCheckEntry& e : report.entries)
    std::printf("%-28s %8zu %14.3e %10.0e %s\n", e.name.c_str(), e.checked, e.max_error, e.threshold,
                e.passed() ? "ok" : "FAIL");
  std::printf("max relative error: %.3e\n", report.max_error());
  return report.passed() ? kOk : kCheckFailed;
}

// -------------------------------------------------------------------- bench

struct BenchArgs {
  std::vector<int> sizes{16, 32, 64};
  std::vector<int> kernel_sizes{1, 2};
  std::vector<int> strides{1, 2};
  int batch = 1;
  int in_channels = 4;
  int out_channels = 4;
  int repeats = 3;
  std::uint64_t seed = 1;
  std::string output;
};

template <class F>
double best_ms(int repeats, F&& f) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

int cmd_bench(const BenchArgs& a) {
  std::mt19937_64 rng(a.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ConvConfig cfg;
  cfg.threads = default_thread_count();
  std::ostringstream csv;
  csv << "rows,cols,n,stride,batch,in_channels,out_channels,threads,oracle_ms,engine_ms,speedup,max_abs_diff\n";
  bool consistent = true;
  for (int size : a.sizes)
    for (int n : a.kernel_sizes)
      for (int s : a.strides) {
        HexTensor x(a.batch, a.in_channels, GridSpec(size, size));
        for (double& v : x.values()) v = dist(rng);
        HexKernel k(n, a.in_channels, a.out_channels);
        for (double& w : k.weights()) w = dist(rng);
        for (double& b : k.bias()) b = dist(rng);
        cfg.stride = s;
        HexTensor ref, got;
        const double oracle_ms = best_ms(a.repeats, [&] { ref = oracle::conv2d(x, k, s); });
        const double engine_ms = best_ms(a.repeats, [&] { got = conv2d(x, k, cfg); });
        double diff = 0.0;
        for (std::size_t i = 0; i < ref.size(); ++i) diff = std::max(diff, std::abs(ref.values()[i] - got.values()[i]));
        consistent = consistent && diff < 1e-10;
        char row[256];
        std::snprintf(row, sizeof row, "%d,%d,%d,%d,%d,%d,%d,%d,%.4f,%.4f,%.3f,%.3e\n", size, size, n, s, a.batch,
                      a.in_channels, a.out_channels, cfg.threads, oracle_ms, engine_ms,
                      engine_ms > 0 ? oracle_ms / engine_ms : 0.0, diff);
        csv << row;
      }
  if (a.output.empty())
    std::cout << csv.str();
  else
    io::write_file_atomic(a.output, csv.str());
  if (!consistent) std::cerr << "engine and oracle disagree beyond 1e-10\n";
  return consistent ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hexagonal-grid convolution, pooling and the hex-vs-square CNN experiment"};
  app.require_subcommand(1);

  ConvolveArgs conv;
  auto* convolve = app.add_subcommand("convolve", "Convolve a hexCSV image with a kernel file or debug:<n>");
  convolve->add_option("--input", conv.input, "hexCSV image")->required();
  convolve->add_option("--kernel", conv.kernel, "kernel file, or debug:<n> for the all-ones size-n kernel")->required();
  convolve->add_option("--stride", conv.stride, "stride")->check(CLI::PositiveNumber);
  convolve->add_option("--out-channels", conv.out_channels, "output channels of a debug kernel")->check(CLI::PositiveNumber);
  convolve->add_option("--output", conv.output, "hexCSV result")->required();

  PoolArgs pool;
  auto* pooling = app.add_subcommand("pool", "Max or average pool a hexCSV image");
  pooling->add_option("--mode", pool.mode, "max or avg")->check(CLI::IsMember({"max", "avg"}));
  pooling->add_option("--size", pool.size, "neighbourhood size n")->check(CLI::NonNegativeNumber);
  pooling->add_option("--stride", pool.stride, "stride")->check(CLI::PositiveNumber);
  pooling->add_option("--input", pool.input, "hexCSV image")->required();
  pooling->add_option("--output", pool.output, "hexCSV result")->required();

  DemoArgs demo;
  auto* demo_cmd = app.add_subcommand("demo-shapes", "Render six-fold symmetric shapes before and after debug:1");
  demo_cmd->add_option("--out", demo.out, "output directory")->required();
  demo_cmd->add_option("--seed", demo.seed, "seed for the random symmetric image");

  ExperimentArgs exp;
  auto* exp_cmd = app.add_subcommand("experiment", "Train the h-CNN and s-CNN models and summarise learning curves");
  exp_cmd->add_option("--iterations", exp.iterations, "independent restarts")->check(CLI::PositiveNumber);
  exp_cmd->add_option("--seed", exp.seed, "master seed");
  exp_cmd->add_option("--out", exp.out, "output directory")->required();
  exp_cmd->add_option("--epochs", exp.epochs, "epochs per run")->check(CLI::PositiveNumber);
  exp_cmd->add_option("--images-per-class", exp.images_per_class, "training images per class")->check(CLI::PositiveNumber);
  exp_cmd->add_option("--models", exp.models, "subset of models to train")
      ->check(CLI::IsMember({"h-CNN-small", "s-CNN-small", "s-CNN-large"}))
      ->delimiter(',');

  std::uint64_t grad_seed = 1;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every layer and both small models");
  grad_cmd->add_option("--seed", grad_seed, "seed");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time engine against oracle convolution; CSV to stdout or --output");
  bench_cmd->add_option("--sizes", bench.sizes, "square grid sides")->delimiter(',')->check(CLI::PositiveNumber);
  bench_cmd->add_option("--kernel-sizes", bench.kernel_sizes, "kernel sizes n")->delimiter(',')->check(CLI::Range(0, 8));
  bench_cmd->add_option("--strides", bench.strides, "strides")->delimiter(',')->check(CLI::PositiveNumber);
  bench_cmd->add_option("--batch", bench.batch)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--in-channels", bench.in_channels)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out-channels", bench.out_channels)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--repeats", bench.repeats, "timed repetitions; the best is reported")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed);
  bench_cmd->add_option("--output", bench.output, "CSV file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*convolve) return cmd_convolve(conv);
    if (*pooling) return cmd_pool(pool);
    if (*demo_cmd) return cmd_demo_shapes(demo);
    if (*exp_cmd) return cmd_experiment(exp);
    if (*grad_cmd) return cmd_gradcheck(grad_seed);
    if (*bench_cmd) return cmd_bench(bench);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}
