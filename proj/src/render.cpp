#include "fgprop/render.hpp"

#include "fgprop/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace fgprop {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// Diverging blue-white-red colour for t in [-1, 1].
std::string diverging(double t) {
  t = std::clamp(t, -1.0, 1.0);
  int r = 255, g = 255, b = 255;
  if (t > 0) {
    g = b = static_cast<int>(std::lround(255 * (1 - t)));
  } else {
    r = g = static_cast<int>(std::lround(255 * (1 + t)));
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

EllipseGeometry ellipse_geometry(const Gaussian& g, double k) {
  if (g.dim() != 2) throw ShapeError("ellipse rendering needs a 2-D Gaussian");
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(g.cov());
  // Eigenvalues ascend: column 1 is the major axis.
  const Vector major = eig.eigenvectors().col(1);
  double angle = std::atan2(major[1], major[0]) * 180.0 / std::numbers::pi;
  if (angle <= -90.0) angle += 180.0;
  if (angle > 90.0) angle -= 180.0;
  return {g.mean()[0], g.mean()[1], k * std::sqrt(std::max(0.0, eig.eigenvalues()[1])),
          k * std::sqrt(std::max(0.0, eig.eigenvalues()[0])), angle};
}

std::string covariance_heatmaps_svg(const std::vector<NamedMatrix>& panels) {
  if (panels.empty()) throw ConfigError("no covariance panels to render");
  double scale = 0.0;
  for (const auto& [name, m] : panels) scale = std::max(scale, m.cwiseAbs().maxCoeff());
  if (scale == 0.0) scale = 1.0;

  const double panel = 200.0, gap = 30.0, top = 30.0;
  const double width = panels.size() * (panel + gap) + gap;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(panel + top + 40)
      << "\">\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& [name, m] = panels[p];
    const double x0 = gap + p * (panel + gap);
    const double cell = panel / static_cast<double>(std::max<Eigen::Index>(1, m.rows()));
    svg << "<text x=\"" << num(x0) << "\" y=\"20\" font-size=\"14\">" << escape(name) << "</text>\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        svg << "<rect x=\"" << num(x0 + c * cell) << "\" y=\"" << num(top + r * cell) << "\" width=\"" << num(cell)
            << "\" height=\"" << num(cell) << "\" fill=\"" << diverging(m(r, c) / scale) << "\"/>\n";
      }
    }
  }
  svg << "<text x=\"" << num(gap) << "\" y=\"" << num(panel + top + 25) << "\" font-size=\"12\">shared scale: +-"
      << scale << "</text>\n</svg>\n";
  return svg.str();
}

std::string ellipse_plot_svg(const std::vector<Vector>& samples, const std::vector<NamedGaussian>& estimates) {
  for (const auto& s : samples) {
    if (s.size() != 2) throw ShapeError("ellipse plot samples must be 2-D");
  }
  std::vector<std::pair<std::string, std::array<EllipseGeometry, 2>>> shapes;
  for (const auto& [name, g] : estimates) shapes.push_back({name, {ellipse_geometry(g, 1.0), ellipse_geometry(g, 2.0)}});

  // Data bounds over samples and 2-sigma ellipse extents.
  double lo_x = INFINITY, hi_x = -INFINITY, lo_y = INFINITY, hi_y = -INFINITY;
  auto grow = [&](double x, double y, double r) {
    lo_x = std::min(lo_x, x - r);
    hi_x = std::max(hi_x, x + r);
    lo_y = std::min(lo_y, y - r);
    hi_y = std::max(hi_y, y + r);
  };
  for (const auto& s : samples) grow(s[0], s[1], 0.0);
  for (const auto& [name, e] : shapes) grow(e[1].centre_x, e[1].centre_y, e[1].semi_major);
  if (!std::isfinite(lo_x)) lo_x = lo_y = -1.0, hi_x = hi_y = 1.0;

  const double size = 400.0, margin = 20.0;
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-12});
  const double scale = size / span;  // identical for both axes
  auto sx = [&](double x) { return margin + (x - lo_x) * scale; };
  auto sy = [&](double y) { return margin + size - (y - lo_y) * scale; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(size + 2 * margin + 120) << "\" height=\""
      << num(size + 2 * margin) << "\" data-scale-x=\"" << num(scale) << "\" data-scale-y=\"" << num(scale)
      << "\">\n";
  for (const auto& s : samples) {
    svg << "<circle cx=\"" << num(sx(s[0])) << "\" cy=\"" << num(sy(s[1])) << "\" r=\"1.2\" fill=\"#999999\"/>\n";
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& [name, e] = shapes[i];
    const char* colour = kPalette[i % std::size(kPalette)];
    for (const auto& g : e) {
      const double cx = sx(g.centre_x), cy = sy(g.centre_y);
      // SVG's y axis points down, so rotation is mirrored.
      svg << "<ellipse class=\"" << escape(name) << "\" cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" rx=\""
          << num(g.semi_major * scale) << "\" ry=\"" << num(g.semi_minor * scale) << "\" transform=\"rotate("
          << num(-g.angle_deg) << " " << num(cx) << " " << num(cy) << ")\" fill=\"none\" stroke=\"" << colour
          << "\"/>\n";
    }
    svg << "<text x=\"" << num(size + 2 * margin) << "\" y=\"" << num(margin + 16 * (i + 1)) << "\" fill=\""
        << colour << "\" font-size=\"12\">" << escape(name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string report_svg(const ExperimentReport& report) {
  double top = 0.0;
  for (const auto& s : report.settings) {
    for (const auto& m : s.methods) top = std::max(top, m.median_w2);
  }
  if (top == 0.0) top = 1.0;
  const double bar = 18.0, group_gap = 30.0, height = 240.0, base = 260.0;
  const double group = bar * report.methods.size() + group_gap;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(group * report.settings.size() + 160)
      << "\" height=\"" << num(base + 40) << "\">\n";
  for (std::size_t s = 0; s < report.settings.size(); ++s) {
    const double x0 = 20.0 + s * group;
    for (std::size_t k = 0; k < report.settings[s].methods.size(); ++k) {
      const double h = height * report.settings[s].methods[k].median_w2 / top;
      svg << "<rect x=\"" << num(x0 + k * bar) << "\" y=\"" << num(base - h) << "\" width=\"" << num(bar - 2)
          << "\" height=\"" << num(h) << "\" fill=\"" << kPalette[k % std::size(kPalette)] << "\"/>\n";
    }
    svg << "<text x=\"" << num(x0) << "\" y=\"" << num(base + 18) << "\" font-size=\"11\">"
        << escape(report.settings[s].label) << "</text>\n";
  }
  for (std::size_t k = 0; k < report.methods.size(); ++k) {
    svg << "<text x=\"" << num(group * report.settings.size() + 40) << "\" y=\"" << num(20 + 16 * k) << "\" fill=\""
        << kPalette[k % std::size(kPalette)] << "\" font-size=\"12\">" << method_name(report.methods[k])
        << " (median W2)</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string ablation_svg(const std::vector<AblationPoint>& points) {
  if (points.empty()) throw ConfigError("no ablation points to render");
  double top_w2 = 0.0, top_ms = 0.0;
  for (const auto& p : points) {
    top_w2 = std::max(top_w2, p.mean_w2);
    top_ms = std::max(top_ms, p.wall_ms);
  }
  if (top_w2 == 0.0) top_w2 = 1.0;
  if (top_ms == 0.0) top_ms = 1.0;
  const double w = 400.0, h = 240.0, m = 40.0;
  const double dx = points.size() > 1 ? w / (points.size() - 1) : 0.0;
  std::string w2_path, ms_path;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const char* op = i == 0 ? "M" : "L";
    w2_path += std::string(op) + num(m + i * dx) + " " + num(m + h - h * points[i].mean_w2 / top_w2) + " ";
    ms_path += std::string(op) + num(m + i * dx) + " " + num(m + h - h * points[i].wall_ms / top_ms) + " ";
  }
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w + 2 * m) << "\" height=\"" << num(h + 2 * m)
      << "\">\n<path d=\"" << w2_path << "\" fill=\"none\" stroke=\"" << kPalette[0] << "\"/>\n<path d=\"" << ms_path
      << "\" fill=\"none\" stroke=\"" << kPalette[1] << "\" stroke-dasharray=\"4 3\"/>\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    svg << "<text x=\"" << num(m + i * dx - 4) << "\" y=\"" << num(h + m + 18) << "\" font-size=\"11\">"
        << points[i].input_nodes << "</text>\n";
  }
  svg << "<text x=\"" << num(m) << "\" y=\"20\" font-size=\"12\">mean W2 (solid, max " << num(top_w2)
      << "), wall ms (dashed, max " << num(top_ms) << ")</text>\n</svg>\n";
  return svg.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace fgprop
