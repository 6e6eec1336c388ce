// Runs the hexgrid binary end to end. Expected values come from the library's
// oracle and lattice code, not from the engine path the CLI uses.

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include "hexgrid/hexio.hpp"
#include "hexgrid/lattice.hpp"
#include "hexgrid/oracle.hpp"

using namespace hexgrid;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() : dir(fs::temp_directory_path() / ("hexgrid_cli_" + std::to_string(std::random_device{}()))) {
    fs::create_directories(dir);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

// Exit status of `hexgrid <args>`; stdout and stderr go to `log`.
int run(const std::string& args, const std::string& log, const std::string& env = "") {
  const std::string cmd = env + " '" HEXGRID_CLI "' " + args + " >'" + log + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

HexTensor random_image(std::uint64_t seed, int channels, GridSpec g, double lo = -1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, 1.0);
  HexTensor x(1, channels, g);
  for (double& v : x.values()) v = dist(rng);
  return x;
}

double max_diff(const HexTensor& a, const HexTensor& b) {
  REQUIRE(a.same_shape(b));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

}  // namespace

TEST_CASE("convolve") {
  Scratch tmp;
  const std::string log = tmp / "log";

  SUBCASE("identity kernel reproduces the input") {
    const HexTensor x = random_image(1, 1, GridSpec(7, 8));
    io::save_hexcsv(tmp / "x.hexcsv", x);
    io::save_kernel(tmp / "id.kernel", HexKernel::from_weights(0, 1, 1, {1.0}));
    REQUIRE(run("convolve --input " + tmp / "x.hexcsv" + " --kernel " + tmp / "id.kernel" + " --stride 1 --output " +
                    tmp / "y.hexcsv",
                log) == 0);
    CHECK(io::load_hexcsv(tmp / "y.hexcsv").values() == x.values());
  }

  SUBCASE("debug:1 stamps an impulse onto its seven-cell neighbourhood") {
    for (OffsetCoord p : {OffsetCoord{4, 4}, OffsetCoord{4, 5}}) {
      HexTensor x(1, 1, GridSpec(9, 10));
      x(0, 0, p.row, p.col) = 1.0;
      io::save_hexcsv(tmp / "impulse.hexcsv", x);
      REQUIRE(run("convolve --input " + tmp / "impulse.hexcsv" + " --kernel debug:1 --output " + tmp / "y.hexcsv", log) ==
              0);
      const HexTensor y = io::load_hexcsv(tmp / "y.hexcsv");
      CHECK(max_diff(y, oracle::conv2d(x, HexKernel::debug(1), 1)) == 0.0);
      double total = 0.0;
      int lit = 0;
      for (double v : y.values()) total += v, lit += v != 0.0;
      CHECK(total == 7.0);
      CHECK(lit == 7);
      for (OffsetCoord q : neighborhood(p, 1, y.grid())) CHECK(y(0, 0, q.row, q.col) == 1.0);
    }
  }

  SUBCASE("strided output follows the stride lattice") {
    const HexTensor x = random_image(2, 2, GridSpec(6, 6));
    io::save_hexcsv(tmp / "x.hexcsv", x);
    std::mt19937_64 rng(3);
    HexKernel k(1, 2, 3);
    for (double& w : k.weights()) w = std::uniform_real_distribution<double>(-1, 1)(rng);
    io::save_kernel(tmp / "k.kernel", k);
    REQUIRE(run("convolve --input " + tmp / "x.hexcsv" + " --kernel " + tmp / "k.kernel" + " --stride 2 --output " +
                    tmp / "y.hexcsv",
                log) == 0);
    const HexTensor y = io::load_hexcsv(tmp / "y.hexcsv");
    const StrideLattice lat = strided_lattice(x.grid(), 2);
    CHECK(y.cols() == 3);
    CHECK(y.cols() == lat.out_cols);
    CHECK(y.rows() == lat.out_rows);
    CHECK(y.channels() == 3);
    CHECK(max_diff(y, oracle::conv2d(x, k, 2)) < 1e-12);
  }

  SUBCASE("data and usage errors") {
    io::save_hexcsv(tmp / "x.hexcsv", random_image(4, 2, GridSpec(3, 3)));
    io::save_kernel(tmp / "k1.kernel", HexKernel::debug(1));
    CHECK(run("convolve --input " + tmp / "x.hexcsv" + " --kernel " + tmp / "k1.kernel" + " --output " + tmp / "y", log) ==
          2);
    CHECK(slurp(log).find("input channels") != std::string::npos);
    CHECK(run("convolve --input " + tmp / "missing" + " --kernel debug:1 --output " + tmp / "y", log) == 2);
    CHECK(run("convolve --input " + tmp / "x.hexcsv" + " --kernel debug:z --output " + tmp / "y", log) == 2);
    {
      std::ofstream(tmp / "mirrored.hexcsv") << "hexcsv v1 rows=1 cols=1 channels=1 parity=odd-high\n#channel 0\n1\n";
    }
    CHECK(run("convolve --input " + tmp / "mirrored.hexcsv" + " --kernel debug:0 --output " + tmp / "y", log) == 2);
    CHECK(slurp(log).find("parity") != std::string::npos);
    CHECK(run("convolve --input " + tmp / "x.hexcsv" + " --kernel debug:1", log) == 1);
    CHECK(run("convolve --input " + tmp / "x.hexcsv" + " --kernel debug:1 --stride 0 --output " + tmp / "y", log) == 1);
    CHECK(run("", log) == 1);
    CHECK(run("frobnicate", log) == 1);
    CHECK(run("--help", log) == 0);
    CHECK(!fs::exists(tmp / "y"));
  }
}

TEST_CASE("pool") {
  Scratch tmp;
  const std::string log = tmp / "log";

  SUBCASE("average of a constant image is the constant") {
    io::save_hexcsv(tmp / "c.hexcsv", HexTensor(1, 2, GridSpec(8, 9), 0.375));
    REQUIRE(run("pool --mode avg --size 2 --stride 1 --input " + tmp / "c.hexcsv" + " --output " + tmp / "p.hexcsv",
                log) == 0);
    for (double v : io::load_hexcsv(tmp / "p.hexcsv").values()) CHECK(v == doctest::Approx(0.375).epsilon(1e-15));
  }

  SUBCASE("matches the oracle and max dominates avg on non-negative input") {
    const HexTensor x = random_image(5, 2, GridSpec(9, 11), 0.0);
    io::save_hexcsv(tmp / "x.hexcsv", x);
    for (int s : {1, 2, 3}) {
      CAPTURE(s);
      const std::string common = " --size 1 --stride " + std::to_string(s) + " --input " + tmp / "x.hexcsv";
      REQUIRE(run("pool --mode max" + common + " --output " + tmp / "max.hexcsv", log) == 0);
      REQUIRE(run("pool --mode avg" + common + " --output " + tmp / "avg.hexcsv", log) == 0);
      const HexTensor mx = io::load_hexcsv(tmp / "max.hexcsv");
      const HexTensor av = io::load_hexcsv(tmp / "avg.hexcsv");
      CHECK(max_diff(mx, oracle::pool2d(x, 1, s, PoolMode::max)) == 0.0);
      CHECK(max_diff(av, oracle::pool2d(x, 1, s, PoolMode::avg)) < 1e-12);
      for (std::size_t i = 0; i < mx.size(); ++i) CHECK(mx.values()[i] >= av.values()[i]);
    }
  }

  SUBCASE("bad mode is a usage error") {
    io::save_hexcsv(tmp / "x.hexcsv", random_image(6, 1, GridSpec(3, 3)));
    CHECK(run("pool --mode median --input " + tmp / "x.hexcsv" + " --output " + tmp / "p", log) == 1);
  }
}

TEST_CASE("demo-shapes") {
  Scratch tmp;
  const std::string log = tmp / "log";
  REQUIRE(run("demo-shapes --out " + tmp / "demo", log) == 0);
  const auto report = nlohmann::json::parse(slurp(tmp / "demo/symmetry.json"));
  CHECK(report["passed"].get<bool>());
  CHECK(report["max_asymmetry"].get<double>() <= 1e-12);
  CHECK(report["shapes"].size() >= 4);
  for (const auto& shape : report["shapes"]) {
    const std::string name = shape["name"].get<std::string>();
    CAPTURE(name);
    CHECK(shape["output_max_asymmetry"].get<double>() <= 1e-12);
    // The rendered SVG has one hexagon per cell.
    const HexTensor in = io::load_hexcsv(tmp / ("demo/" + name + ".hexcsv"));
    const std::string svg = slurp(tmp / ("demo/" + name + ".svg"));
    std::size_t polygons = 0;
    for (auto at = svg.find("<polygon"); at != std::string::npos; at = svg.find("<polygon", at + 1)) ++polygons;
    CHECK(polygons == in.plane_size());
    // Same result as the convolve subcommand on the same data.
    REQUIRE(run("convolve --input " + tmp / ("demo/" + name + ".hexcsv") + " --kernel debug:1 --output " +
                    tmp / "again.hexcsv",
                log) == 0);
    CHECK(slurp(tmp / "again.hexcsv") == slurp(tmp / ("demo/" + name + "_debug1.hexcsv")));
  }
  REQUIRE(run("demo-shapes --out " + tmp / "demo2", log) == 0);
  CHECK(slurp(tmp / "demo/symmetry.json") == slurp(tmp / "demo2/symmetry.json"));
}

TEST_CASE("experiment") {
  Scratch tmp;
  const std::string log = tmp / "log";
  // One image per class keeps this fast while exercising the full 100 epochs.
  REQUIRE(run("experiment --iterations 1 --seed 5 --images-per-class 1 --out " + tmp / "a", log) == 0);
  const auto curves = lines(slurp(tmp / "a/curves.csv"));
  REQUIRE(!curves.empty());
  CHECK(curves.front() == "model,iteration,epoch,accuracy,loss,lr");
  CHECK(curves.size() == 1 + 3 * 100);

  const auto summary = lines(slurp(tmp / "a/summary.csv"));
  REQUIRE(summary.size() == 4);
  CHECK(summary[0] == "model,iterations,reached_100_fraction,above_chance_fraction,mean_final_accuracy,diverged,parameters");
  const std::pair<const char*, double> bands[] = {{"h-CNN-small", 13e3}, {"s-CNN-small", 13e3}, {"s-CNN-large", 1.2e6}};
  for (std::size_t i = 0; i < 3; ++i) {
    CAPTURE(summary[i + 1]);
    CHECK(summary[i + 1].rfind(std::string(bands[i].first) + ",", 0) == 0);
    const double params = std::stod(summary[i + 1].substr(summary[i + 1].rfind(',') + 1));
    CHECK(std::abs(params / bands[i].second - 1.0) <= 0.2);
  }
  const std::string plot = slurp(tmp / "a/learning_curves.svg");
  CHECK(plot.find("<polyline") != std::string::npos);

  REQUIRE(run("experiment --iterations 1 --seed 5 --images-per-class 1 --out " + tmp / "b", log, "HEXGRID_THREADS=3") == 0);
  CHECK(slurp(tmp / "a/curves.csv") == slurp(tmp / "b/curves.csv"));
  CHECK(slurp(tmp / "a/summary.csv") == slurp(tmp / "b/summary.csv"));

  REQUIRE(run("experiment --iterations 1 --seed 6 --epochs 3 --images-per-class 1 --models h-CNN-small --out " +
                  tmp / "c",
              log) == 0);
  CHECK(lines(slurp(tmp / "c/curves.csv")).size() == 1 + 3);
  CHECK(slurp(tmp / "c/curves.csv") != slurp(tmp / "a/curves.csv"));

  CHECK(run("experiment --iterations 0 --out " + tmp / "d", log) == 1);
}

TEST_CASE("gradcheck and bench") {
  Scratch tmp;
  const std::string log = tmp / "log";
  CHECK(run("gradcheck --seed 1", log) == 0);
  CHECK(slurp(log).find("max relative error") != std::string::npos);

  REQUIRE(run("bench --sizes 8,64 --kernel-sizes 0,2 --strides 1,2,3 --repeats 3 --output " + tmp / "b.csv", log) == 0);
  const auto rows = lines(slurp(tmp / "b.csv"));
  REQUIRE(rows.size() == 1 + 2 * 2 * 3);
  CHECK(rows[0] == "rows,cols,n,stride,batch,in_channels,out_channels,threads,oracle_ms,engine_ms,speedup,max_abs_diff");
  bool found = false;
  for (const std::string& row : rows)
    if (row.rfind("64,64,2,1,", 0) == 0) {
      found = true;
      std::vector<std::string> cells;
      std::istringstream in(row);
      for (std::string c; std::getline(in, c, ',');) cells.push_back(c);
      CHECK(std::stod(cells[10]) > 1.0);  // engine strictly faster than oracle
      CHECK(std::stod(cells[11]) < 1e-10);
    }
  CHECK(found);
}
