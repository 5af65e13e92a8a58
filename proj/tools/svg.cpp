#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace a2p::svg {

namespace {

constexpr double W = 640, H = 420, L = 70, R = 150, T = 40, B = 55;
const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

}  // namespace

std::string line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                      const std::vector<Series>& series) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      x0 = std::min(x0, x), x1 = std::max(x1, x);
      y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad, y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream o;
  o.precision(6);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << esc(title) << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double y = y0 + (y1 - y0) * i / 5, x = x0 + (x1 - x0) * i / 5;
    o << "<text x=\"" << L - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << std::round(y * 1000) / 1000
      << "</text>\n";
    o << "<text x=\"" << px(x) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << std::round(x * 100) / 100
      << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << esc(xlabel) << "</text>\n";
  o << "<text transform=\"translate(18," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << esc(ylabel)
    << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* c = kPalette[i % std::size(kPalette)];
    o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
    for (auto [x, y] : series[i].points) o << px(x) << "," << py(y) << " ";
    o << "\"/>\n";
    for (auto [x, y] : series[i].points) o << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"" << c << "\"/>\n";
    const double ly = T + 18.0 * double(i);
    o << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 32 << "\" y2=\"" << ly << "\" stroke=\""
      << c << "\" stroke-width=\"2\"/><text x=\"" << W - R + 38 << "\" y=\"" << ly + 4 << "\">" << esc(series[i].name)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string floor_plan(const std::string& title, const std::vector<Layer>& layers) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& l : layers)
    for (const auto& w : l.walls) {
      x0 = std::min({x0, w.x0, w.x1}), x1 = std::max({x1, w.x0, w.x1});
      y0 = std::min({y0, w.y0, w.y1}), y1 = std::max({y1, w.y0, w.y1});
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  const double size = 600, margin = 30;
  const double s = (size - 2 * margin) / std::max({x1 - x0, y1 - y0, 1.0});
  auto px = [&](double x) { return margin + (x - x0) * s; };
  auto py = [&](double y) { return margin + 10 + (y - y0) * s; };

  std::ostringstream o;
  o.precision(6);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size + 10
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << size / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << esc(title) << "</text>\n";
  for (const auto& l : layers) {
    for (std::size_t i = 0; i < l.walls.size(); ++i) {
      const auto& w = l.walls[i];
      const double sw = std::max(1.0, w.thickness.value_or(2) * s);
      o << "<line x1=\"" << px(w.x0) << "\" y1=\"" << py(w.y0) << "\" x2=\"" << px(w.x1) << "\" y2=\"" << py(w.y1)
        << "\" stroke=\"" << l.color << "\" stroke-width=\"" << sw << "\" stroke-linecap=\"round\""
        << (l.dashed ? " stroke-dasharray=\"6,4\"" : "") << " opacity=\"0.8\"/>\n";
      if (l.numbered) {
        const double cx = px((w.x0 + w.x1) / 2), cy = py((w.y0 + w.y1) / 2);
        o << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"8\" fill=\"white\" stroke=\"" << l.color
          << "\"/><text x=\"" << cx << "\" y=\"" << cy + 4 << "\" text-anchor=\"middle\">" << i + 1 << "</text>\n";
      }
    }
  }
  o << "</svg>\n";
  return o.str();
}

void write(const std::filesystem::path& path, const std::string& svg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << svg;
}

}  // namespace a2p::svg
