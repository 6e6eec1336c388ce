#pragma once

// Text formats for hex tensors and kernels.
//
//   hexcsv v1 rows=R cols=C channels=K parity=odd-low
//   #channel 0
//   R lines of C comma-separated values
//   #channel 1
//   ...
//
//   hexkernel v1 size=n in=ci out=co
//   #out 0
//   ci lines of 3n^2+3n+1 values in KernelLayout order
//   ...
//   bias=b0,...          (optional)
//
// Values are written with 17 significant digits so reading them back is
// exact.

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

#include "hexgrid/kernel.hpp"
#include "hexgrid/tensor.hpp"

namespace hexgrid::io {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& detail, const std::string& source = "")
      : std::runtime_error((source.empty() ? "line " : source + ":") + std::to_string(line) + ": " + detail),
        line_(line),
        detail_(detail) {}
  int line() const { return line_; }
  const std::string& detail() const { return detail_; }

 private:
  int line_;
  std::string detail_;
};

std::string format_double(double v);
/// Whole-token parse; throws std::invalid_argument.
double parse_double(std::string_view token);

/// Writes the single image of `x` (batch must be 1).
void write_hexcsv(std::ostream& out, const HexTensor& x);
HexTensor read_hexcsv(std::istream& in);

void write_kernel(std::ostream& out, const HexKernel& k);
HexKernel read_kernel(std::istream& in);

/// File variants. Writes go to a temporary file in the target directory that
/// is renamed over the destination, so readers never see partial output.
void save_hexcsv(const std::filesystem::path& path, const HexTensor& x);
HexTensor load_hexcsv(const std::filesystem::path& path);
void save_kernel(const std::filesystem::path& path, const HexKernel& k);
HexKernel load_kernel(const std::filesystem::path& path);

void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace hexgrid::io
