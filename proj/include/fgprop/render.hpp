#pragma once

#include "fgprop/experiment.hpp"
#include "fgprop/gaussian.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace fgprop {

/// Axes of the k-standard-deviation contour of a 2-D Gaussian.
struct EllipseGeometry {
  double centre_x = 0.0;
  double centre_y = 0.0;
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double angle_deg = 0.0;  // major axis, counter-clockwise from +x, in (-90, 90]
};

/// Throws ShapeError for anything but a 2-D Gaussian.
EllipseGeometry ellipse_geometry(const Gaussian& g, double k);

using NamedMatrix = std::pair<std::string, Matrix>;
using NamedGaussian = std::pair<std::string, Gaussian>;

/// One heatmap panel per covariance, all on a shared symmetric colour scale.
std::string covariance_heatmaps_svg(const std::vector<NamedMatrix>& panels);

/// Scatter of samples plus 1- and 2-sigma ellipses per estimate, drawn with
/// equal x and y scale.
std::string ellipse_plot_svg(const std::vector<Vector>& samples, const std::vector<NamedGaussian>& estimates);

/// Median W2 per method, grouped by setting.
std::string report_svg(const ExperimentReport& report);

/// Mean W2 and wall time against the number of input nodes.
std::string ablation_svg(const std::vector<AblationPoint>& points);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fgprop
