#include "hexgrid/hexio.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <system_error>
#include <vector>

namespace hexgrid::io {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Line reader that skips blank lines and remembers where it is.
class Lines {
 public:
  explicit Lines(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    while (std::getline(in_, buffer_)) {
      ++number_;
      const std::string_view t = trim(buffer_);
      if (t.empty()) continue;
      line.assign(t);
      return true;
    }
    return false;
  }

  std::string expect(const char* what) {
    std::string line;
    if (!next(line)) throw ParseError(number_ + 1, std::string("unexpected end of input, expected ") + what);
    return line;
  }

  int number() const { return number_; }

 private:
  std::istream& in_;
  std::string buffer_;
  int number_ = 0;
};

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t at = s.find(sep, start);
    out.push_back(trim(s.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start)));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

// "magic version key=value ..." with every key in `keys` present exactly once.
std::map<std::string, std::string> parse_header(const std::string& line, int number, std::string_view magic,
                                                std::initializer_list<std::string_view> keys) {
  std::istringstream words(line);
  std::string word;
  if (!(words >> word) || word != magic) throw ParseError(number, "expected '" + std::string(magic) + "' header");
  if (!(words >> word) || word != "v1") throw ParseError(number, "unsupported version '" + word + "'");
  std::map<std::string, std::string> fields;
  while (words >> word) {
    const auto eq = word.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError(number, "malformed header field '" + word + "'");
    if (!fields.emplace(word.substr(0, eq), word.substr(eq + 1)).second) {
      throw ParseError(number, "duplicate header field '" + word.substr(0, eq) + "'");
    }
  }
  for (std::string_view key : keys)
    if (!fields.count(std::string(key))) throw ParseError(number, "missing header field '" + std::string(key) + "'");
  if (fields.size() != keys.size()) throw ParseError(number, "unknown header field");
  return fields;
}

int header_int(const std::map<std::string, std::string>& fields, const std::string& key, int number, int min) {
  const std::string& text = fields.at(key);
  int v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || v < min) {
    throw ParseError(number, "bad value for " + key + ": '" + text + "'");
  }
  return v;
}

void read_values(std::string_view line, int number, std::size_t expected, double* out) {
  const std::vector<std::string_view> tokens = split(line, ',');
  if (tokens.size() != expected) {
    throw ParseError(number, "expected " + std::to_string(expected) + " values, found " + std::to_string(tokens.size()));
  }
  for (std::size_t i = 0; i < expected; ++i) {
    try {
      out[i] = parse_double(tokens[i]);
    } catch (const std::invalid_argument&) {
      throw ParseError(number, "not a number: '" + std::string(tokens[i]) + "'");
    }
  }
}

void write_row(std::ostream& out, const double* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out << ',';
    out << format_double(v[i]);
  }
  out << '\n';
}

template <class F>
auto with_input(const std::filesystem::path& path, F&& parse) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return parse(in);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.detail(), path.string());
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) throw std::runtime_error("cannot format value");
  return std::string(buf, end);
}

double parse_double(std::string_view token) {
  // from_chars rejects a leading '+', which other writers may emit.
  if (token.size() > 1 && token.front() == '+' && token[1] != '-') token.remove_prefix(1);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || ec != std::errc() || end != token.data() + token.size()) {
    throw std::invalid_argument("not a number: '" + std::string(token) + "'");
  }
  return v;
}

void write_hexcsv(std::ostream& out, const HexTensor& x) {
  if (x.batch() != 1) throw std::invalid_argument("hexcsv holds a single image; batch is " + std::to_string(x.batch()));
  out << "hexcsv v1 rows=" << x.rows() << " cols=" << x.cols() << " channels=" << x.channels()
      << " parity=" << kParityToken << '\n';
  for (int c = 0; c < x.channels(); ++c) {
    out << "#channel " << c << '\n';
    const auto plane = x.plane(0, c);
    for (int r = 0; r < x.rows(); ++r)
      write_row(out, plane.data() + static_cast<std::size_t>(r) * x.cols(), static_cast<std::size_t>(x.cols()));
  }
}

HexTensor read_hexcsv(std::istream& in) {
  Lines lines(in);
  const std::string header = lines.expect("header");
  const auto fields = parse_header(header, lines.number(), "hexcsv", {"rows", "cols", "channels", "parity"});
  const int number = lines.number();
  if (fields.at("parity") != kParityToken) {
    throw ParseError(number, "parity '" + fields.at("parity") + "' does not match this library's '" +
                                 std::string(kParityToken) + "' convention");
  }
  const int rows = header_int(fields, "rows", number, 1);
  const int cols = header_int(fields, "cols", number, 1);
  const int channels = header_int(fields, "channels", number, 1);

  HexTensor x(1, channels, GridSpec(rows, cols));
  for (int c = 0; c < channels; ++c) {
    const std::string marker = lines.expect("channel marker");
    if (marker != "#channel " + std::to_string(c)) {
      throw ParseError(lines.number(), "expected '#channel " + std::to_string(c) + "', found '" + marker + "'");
    }
    auto plane = x.plane(0, c);
    for (int r = 0; r < rows; ++r) {
      const std::string row = lines.expect("data row");
      read_values(row, lines.number(), static_cast<std::size_t>(cols),
                  plane.data() + static_cast<std::size_t>(r) * cols);
    }
  }
  std::string extra;
  if (lines.next(extra)) throw ParseError(lines.number(), "trailing content after the last channel");
  return x;
}

void write_kernel(std::ostream& out, const HexKernel& k) {
  out << "hexkernel v1 size=" << k.size() << " in=" << k.in_channels() << " out=" << k.out_channels() << '\n';
  for (int co = 0; co < k.out_channels(); ++co) {
    out << "#out " << co << '\n';
    for (int ci = 0; ci < k.in_channels(); ++ci) {
      const auto w = k.weights(co, ci);
      write_row(out, w.data(), w.size());
    }
  }
  out << "bias=";
  write_row(out, k.bias().data(), k.bias().size());
}

HexKernel read_kernel(std::istream& in) {
  Lines lines(in);
  const std::string header = lines.expect("header");
  const auto fields = parse_header(header, lines.number(), "hexkernel", {"size", "in", "out"});
  const int number = lines.number();
  const int size = header_int(fields, "size", number, 0);
  const int in_ch = header_int(fields, "in", number, 1);
  const int out_ch = header_int(fields, "out", number, 1);
  if (size > 64) throw ParseError(number, "kernel size " + std::to_string(size) + " is unreasonably large");

  const std::size_t elements = static_cast<std::size_t>(hex_element_count(size));
  std::vector<double> weights(static_cast<std::size_t>(in_ch) * out_ch * elements);
  for (int co = 0; co < out_ch; ++co) {
    const std::string marker = lines.expect("'#out' marker");
    if (marker != "#out " + std::to_string(co)) {
      throw ParseError(lines.number(), "expected '#out " + std::to_string(co) + "', found '" + marker + "'");
    }
    for (int ci = 0; ci < in_ch; ++ci) {
      const std::string row = lines.expect("weight row");
      read_values(row, lines.number(), elements,
                  weights.data() + (static_cast<std::size_t>(co) * in_ch + ci) * elements);
    }
  }
  std::vector<double> bias;
  std::string line;
  if (lines.next(line)) {
    if (line.rfind("bias=", 0) != 0) throw ParseError(lines.number(), "expected 'bias=' line or end of input");
    bias.resize(static_cast<std::size_t>(out_ch));
    read_values(std::string_view(line).substr(5), lines.number(), bias.size(), bias.data());
    if (lines.next(line)) throw ParseError(lines.number(), "trailing content after the bias line");
  }
  return HexKernel::from_weights(size, in_ch, out_ch, std::move(weights), std::move(bias));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  namespace fs = std::filesystem;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::random_device entropy;
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(entropy()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw std::runtime_error("cannot move output into place at " + path.string() + ": " + ec.message());
  }
}

void save_hexcsv(const std::filesystem::path& path, const HexTensor& x) {
  std::ostringstream out;
  write_hexcsv(out, x);
  write_file_atomic(path, out.str());
}

HexTensor load_hexcsv(const std::filesystem::path& path) {
  return with_input(path, [](std::istream& in) { return read_hexcsv(in); });
}

void save_kernel(const std::filesystem::path& path, const HexKernel& k) {
  std::ostringstream out;
  write_kernel(out, k);
  write_file_atomic(path, out.str());
}

HexKernel load_kernel(const std::filesystem::path& path) {
  return with_input(path, [](std::istream& in) { return read_kernel(in); });
}

}  // namespace hexgrid::io
