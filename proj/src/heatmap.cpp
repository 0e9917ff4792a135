#include <algorithm>
#include <cmath>
#include <sstream>

#include "polaudit/errors.hpp"
#include "polaudit/report.hpp"

namespace polaudit {

namespace {

constexpr int kCell = 64;
constexpr int kLabelWidth = 140;
constexpr int kHeaderHeight = 70;
constexpr int kLegendHeight = 56;
constexpr int kSwatch = 20;

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

std::size_t palette_step(double v, double lo, double hi) {
  if (!(hi > lo)) return 8;
  const double t = (v - lo) / (hi - lo);
  return static_cast<std::size_t>(std::clamp(std::lround(t * 8.0), 0L, 8L));
}

}  // namespace

const std::array<std::string_view, 9>& palette_colors(Palette) {
  // ColorBrewer RdBu, red (low) to blue (high).
  static constexpr std::array<std::string_view, 9> kRdBu = {
      "#b2182b", "#d6604d", "#f4a582", "#fddbc7", "#f7f7f7",
      "#d1e5f0", "#92c5de", "#4393c3", "#2166ac"};
  return kRdBu;
}

std::string render_heatmap(const SquareMatrix& matrix, Palette palette, std::string_view title) {
  const auto n = matrix.size();
  if (n == 0) throw ValidationError("heatmap needs a non-empty matrix");
  if (matrix.cells.size() != n) throw ValidationError("heatmap labels do not match matrix rows");
  for (const auto& row : matrix.cells) {
    if (row.size() != n) throw ValidationError("heatmap matrix is not square");
  }

  double lo = matrix.cells[0][0];
  double hi = lo;
  for (const auto& row : matrix.cells) {
    for (double v : row) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const auto& colors = palette_colors(palette);
  const int side = static_cast<int>(n) * kCell;
  const int width = kLabelWidth + std::max(side, 9 * kSwatch + 160) + 10;
  const int height = kHeaderHeight + side + kLegendHeight;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  if (!title.empty()) {
    svg << "<title>" << xml_escape(title) << "</title>\n";
    svg << "<text x=\"" << kLabelWidth << "\" y=\"18\" font-family=\"sans-serif\" "
        << "font-size=\"14\" font-weight=\"bold\">" << xml_escape(title) << "</text>\n";
  }
  for (std::size_t j = 0; j < n; ++j) {
    const int x = kLabelWidth + static_cast<int>(j) * kCell + kCell / 2;
    svg << "<text class=\"col-label\" x=\"" << x << "\" y=\"" << kHeaderHeight - 8
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
        << xml_escape(matrix.labels[j]) << "</text>\n";
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int y = kHeaderHeight + static_cast<int>(i) * kCell;
    svg << "<text class=\"row-label\" x=\"" << kLabelWidth - 6 << "\" y=\"" << y + kCell / 2 + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
        << xml_escape(matrix.labels[i]) << "</text>\n";
    for (std::size_t j = 0; j < n; ++j) {
      const double v = matrix.cells[i][j];
      const auto step = palette_step(v, lo, hi);
      const int x = kLabelWidth + static_cast<int>(j) * kCell;
      svg << "<rect class=\"cell\" data-row=\"" << i << "\" data-col=\"" << j << "\" x=\"" << x
          << "\" y=\"" << y << "\" width=\"" << kCell << "\" height=\"" << kCell << "\" fill=\""
          << colors[step] << "\" stroke=\"#ffffff\"/>\n";
      const bool dark = step <= 1 || step >= 7;
      svg << "<text class=\"value\" x=\"" << x + kCell / 2 << "\" y=\"" << y + kCell / 2 + 4
          << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" fill=\""
          << (dark ? "#ffffff" : "#000000") << "\">" << format_fixed2(v) << "</text>\n";
    }
  }
  const int ly = kHeaderHeight + side + 16;
  svg << "<text class=\"legend-min\" x=\"" << kLabelWidth << "\" y=\"" << ly + 14
      << "\" font-family=\"sans-serif\" font-size=\"11\">min " << format_fixed2(lo)
      << "</text>\n";
  for (std::size_t s = 0; s < colors.size(); ++s) {
    svg << "<rect class=\"legend\" x=\"" << kLabelWidth + 60 + static_cast<int>(s) * kSwatch
        << "\" y=\"" << ly << "\" width=\"" << kSwatch << "\" height=\"" << kSwatch
        << "\" fill=\"" << colors[s] << "\"/>\n";
  }
  svg << "<text class=\"legend-max\" x=\"" << kLabelWidth + 66 + 9 * kSwatch << "\" y=\""
      << ly + 14 << "\" font-family=\"sans-serif\" font-size=\"11\">max " << format_fixed2(hi)
      << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace polaudit
