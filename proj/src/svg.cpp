#include "hexgrid/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hexgrid/hexio.hpp"

namespace hexgrid::svg {
namespace {

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

std::string escape(const std::string& text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

// Dark blue through white to dark red; t in [0, 1].
std::string diverging(double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto lerp = [](double a, double b, double u) { return static_cast<int>(std::lround(a + (b - a) * u)); };
  int r, g, b;
  if (t < 0.5) {
    const double u = t / 0.5;
    r = lerp(33, 247, u), g = lerp(102, 247, u), b = lerp(172, 247, u);
  } else {
    const double u = (t - 0.5) / 0.5;
    r = lerp(247, 178, u), g = lerp(247, 24, u), b = lerp(247, 43, u);
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string render_hex_image(const HexTensor& x, int b, int c, const HexImageStyle& style) {
  if (b < 0 || b >= x.batch() || c < 0 || c >= x.channels()) throw std::out_of_range("plane index out of range");
  const auto plane = x.plane(b, c);
  double lo = style.lo, hi = style.hi;
  if (!(hi > lo)) {
    lo = *std::min_element(plane.begin(), plane.end());
    hi = *std::max_element(plane.begin(), plane.end());
  }
  const double span = hi > lo ? hi - lo : 1.0;

  // Flat-topped hexagons: column pitch 1.5 R, row pitch sqrt(3) R, odd
  // columns half a row lower.
  const double R = style.cell;
  const double h = std::sqrt(3.0) * R;
  const double margin = R;
  const double top = style.title.empty() ? margin : margin + 18.0;
  const double width = 2 * margin + 1.5 * R * (x.cols() - 1) + 2 * R;
  const double height = top + margin + h * x.rows() + (x.cols() > 1 ? h / 2 : 0.0);

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!style.title.empty())
    out << "<text x=\"" << num(margin) << "\" y=\"16\" font-family=\"sans-serif\" font-size=\"13\">"
        << escape(style.title) << "</text>\n";
  out << "<g stroke=\"#555\" stroke-width=\"0.5\">\n";
  for (int r = 0; r < x.rows(); ++r)
    for (int col = 0; col < x.cols(); ++col) {
      const double v = plane[static_cast<std::size_t>(r) * x.cols() + col];
      const double cx = margin + R + 1.5 * R * col;
      const double cy = top + h / 2 + h * (r + 0.5 * column_parity(col));
      out << "<polygon data-row=\"" << r << "\" data-col=\"" << col << "\" data-value=\"" << io::format_double(v)
          << "\" fill=\"" << diverging((v - lo) / span) << "\" points=\"";
      for (int k = 0; k < 6; ++k) {
        const double a = M_PI / 3.0 * k;
        out << (k ? " " : "") << num(cx + R * std::cos(a)) << ',' << num(cy + R * std::sin(a));
      }
      out << "\"/>\n";
    }
  out << "</g>\n</svg>\n";
  return out.str();
}

std::string render_learning_curves(const std::vector<CurveSet>& sets, const std::string& title) {
  std::size_t epochs = 0;
  for (const CurveSet& s : sets)
    for (const auto& curve : s.curves) epochs = std::max(epochs, curve.size());
  const double W = 720, H = 420, left = 60, right = 170, top = 40, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double epoch) { return left + (epochs > 1 ? (epoch - 1) / static_cast<double>(epochs - 1) : 0.0) * pw; };
  auto py = [&](double acc) { return top + (1.0 - std::clamp(acc, 0.0, 1.0)) * ph; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << escape(title) << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double acc = 0.25 * i;
    out << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << num(py(acc)) << "\" y2=\"" << num(py(acc))
        << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << left - 8 << "\" y=\"" << num(py(acc) + 4) << "\" text-anchor=\"end\">" << acc << "</text>\n";
  }
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#333\"/>\n";
  if (epochs > 0) {
    out << "<text x=\"" << left << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">1</text>\n";
    out << "<text x=\"" << left + pw << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << epochs
        << "</text>\n";
  }
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">epoch</text>\n";
  out << "<text transform=\"translate(16 " << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">train accuracy</text>\n";

  auto polyline = [&](const std::vector<double>& ys, const std::string& colour, double width, double opacity) {
    out << "<polyline fill=\"none\" stroke=\"" << escape(colour) << "\" stroke-width=\"" << width
        << "\" stroke-opacity=\"" << opacity << "\" points=\"";
    for (std::size_t e = 0; e < ys.size(); ++e) out << (e ? " " : "") << num(px(e + 1.0)) << ',' << num(py(ys[e]));
    out << "\"/>\n";
  };
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const CurveSet& s = sets[i];
    std::vector<double> mean(epochs, 0.0);
    std::vector<int> n(epochs, 0);
    for (const auto& curve : s.curves) {
      polyline(curve, s.colour, 1.0, 0.35);
      for (std::size_t e = 0; e < curve.size(); ++e) mean[e] += curve[e], ++n[e];
    }
    std::size_t used = 0;
    while (used < epochs && n[used] > 0) mean[used] /= n[used], ++used;
    mean.resize(used);
    polyline(mean, s.colour, 2.5, 1.0);
    const double ly = top + 16 + 20.0 * static_cast<double>(i);
    out << "<line x1=\"" << left + pw + 14 << "\" x2=\"" << left + pw + 34 << "\" y1=\"" << ly - 4 << "\" y2=\"" << ly - 4
        << "\" stroke=\"" << escape(s.colour) << "\" stroke-width=\"2.5\"/>\n";
    out << "<text x=\"" << left + pw + 40 << "\" y=\"" << ly << "\">" << escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace hexgrid::svg
