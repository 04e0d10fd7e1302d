#include "fgprop/dataset.hpp"

#include "binary_io.hpp"
#include "fgprop/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

namespace fgprop {

namespace {

using nlohmann::json;

struct Point {
  double x, y;
};
using Polyline = std::vector<Point>;
using Glyph = std::vector<Polyline>;

Polyline ellipse(double cx, double cy, double rx, double ry, int segments = 16) {
  Polyline out;
  for (int i = 0; i <= segments; ++i) {
    const double t = 2.0 * std::numbers::pi * i / segments;
    out.push_back({cx + rx * std::cos(t), cy + ry * std::sin(t)});
  }
  return out;
}

// Stroke skeletons in the unit square, y pointing down.
const std::array<Glyph, 10>& glyphs() {
  static const std::array<Glyph, 10> table = {
      Glyph{ellipse(0.5, 0.5, 0.28, 0.4)},
      Glyph{{{0.35, 0.25}, {0.55, 0.1}, {0.55, 0.9}}},
      Glyph{{{0.2, 0.25}, {0.35, 0.1}, {0.65, 0.1}, {0.8, 0.3}, {0.2, 0.9}, {0.8, 0.9}}},
      Glyph{{{0.2, 0.1}, {0.8, 0.1}, {0.45, 0.45}, {0.75, 0.6}, {0.7, 0.85}, {0.5, 0.92}, {0.2, 0.85}}},
      Glyph{{{0.65, 0.9}, {0.65, 0.1}, {0.15, 0.65}, {0.85, 0.65}}},
      Glyph{{{0.8, 0.1}, {0.25, 0.1}, {0.22, 0.45}, {0.6, 0.42}, {0.8, 0.62}, {0.7, 0.88}, {0.2, 0.9}}},
      Glyph{{{0.7, 0.1}, {0.3, 0.45}, {0.22, 0.7}, {0.4, 0.9}, {0.7, 0.85}, {0.75, 0.62}, {0.5, 0.5}, {0.25, 0.62}}},
      Glyph{{{0.2, 0.1}, {0.8, 0.1}, {0.4, 0.9}}},
      Glyph{ellipse(0.5, 0.28, 0.18, 0.18), ellipse(0.5, 0.7, 0.22, 0.2)},
      Glyph{ellipse(0.5, 0.32, 0.2, 0.2), {{0.7, 0.32}, {0.6, 0.9}}},
  };
  return table;
}

double segment_distance(Point p, Point a, Point b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

Vector render_glyph(const Glyph& glyph, int side, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double scale = 0.8 + 0.15 * unit(rng);
  const double angle = (unit(rng) - 0.5) * 0.35;
  const double shift_x = (unit(rng) - 0.5) * 0.16, shift_y = (unit(rng) - 0.5) * 0.16;
  const double width = 0.07 + 0.05 * unit(rng);
  const double ink = 0.8 + 0.2 * unit(rng);
  const double c = std::cos(angle), s = std::sin(angle);

  auto place = [&](Point p) {
    const double x = (p.x - 0.5) * scale, y = (p.y - 0.5) * scale;
    return Point{0.5 + c * x - s * y + shift_x, 0.5 + s * x + c * y + shift_y};
  };

  std::vector<std::pair<Point, Point>> segments;
  for (const auto& line : glyph) {
    for (std::size_t i = 0; i + 1 < line.size(); ++i) segments.emplace_back(place(line[i]), place(line[i + 1]));
  }

  const double pixel = 1.0 / side;
  Vector image(side * side);
  for (int row = 0; row < side; ++row) {
    for (int col = 0; col < side; ++col) {
      const Point centre{(col + 0.5) * pixel, (row + 0.5) * pixel};
      double d = std::numeric_limits<double>::infinity();
      for (const auto& [a, b] : segments) d = std::min(d, segment_distance(centre, a, b));
      // Anti-aliased stroke edge one pixel wide.
      image[row * side + col] = ink * std::clamp((width - d) / pixel + 0.5, 0.0, 1.0);
    }
  }
  return image;
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& data) {
  const json header = {{"format", "fgprop-dataset"},
                       {"version", 1},
                       {"count", data.samples.size()},
                       {"input_dim", data.input_dim},
                       {"target_dim", data.target_dim}};
  out << header.dump() << '\n';
  for (const auto& s : data.samples) {
    if (s.input.size() != data.input_dim || s.target.size() != data.target_dim) {
      throw ShapeError("sample dimensions disagree with the dataset manifest");
    }
    for (Eigen::Index i = 0; i < s.input.size(); ++i) detail::write_f32(out, s.input[i]);
    for (Eigen::Index i = 0; i < s.target.size(); ++i) detail::write_f32(out, s.target[i]);
  }
}

Dataset read_dataset(std::istream& in) {
  Dataset data;
  std::size_t count = 0;
  try {
    const json header = json::parse(detail::read_header_line(in));
    if (header.at("format").get<std::string>() != "fgprop-dataset") throw FormatError("not a dataset file");
    if (header.at("version").get<int>() != 1) throw FormatError("unsupported dataset version");
    count = header.at("count").get<std::size_t>();
    data.input_dim = header.at("input_dim").get<int>();
    data.target_dim = header.at("target_dim").get<int>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed dataset manifest: ") + e.what());
  }
  if (data.input_dim < 1 || data.target_dim < 0) throw FormatError("dataset dimensions must be positive");
  data.samples.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    RegressionSample s{Vector(data.input_dim), Vector(data.target_dim)};
    for (Eigen::Index i = 0; i < s.input.size(); ++i) s.input[i] = detail::read_f32(in);
    for (Eigen::Index i = 0; i < s.target.size(); ++i) s.target[i] = detail::read_f32(in);
    data.samples.push_back(std::move(s));
  }
  detail::expect_end(in, "dataset");
  return data;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_dataset(out, data);
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset '" + path.string() + "'");
  return read_dataset(in);
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double fraction, std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0) throw ConfigError("split fraction must lie in [0, 1]");
  std::vector<std::size_t> order(data.samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto cut = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(order.size())));

  Dataset first{data.input_dim, data.target_dim, {}}, second{data.input_dim, data.target_dim, {}};
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < cut ? first : second).samples.push_back(data.samples[order[i]]);
  }
  return {std::move(first), std::move(second)};
}

Dataset make_digit_dataset(int count, int side, std::uint64_t seed) {
  if (count < 1 || side < 4) throw ConfigError("digit dataset needs count >= 1 and side >= 4");
  std::mt19937_64 rng(seed);
  Dataset data{side * side, 10, {}};
  data.samples.reserve(count);
  for (int n = 0; n < count; ++n) {
    const int label = n % 10;
    Vector target = Vector::Zero(10);
    target[label] = 1.0;
    data.samples.push_back({render_glyph(glyphs()[label], side, rng), std::move(target)});
  }
  return data;
}

OdometryDataset make_odometry_dataset(int count, int window, std::uint64_t seed) {
  if (count < 1 || window < 1) throw ConfigError("odometry dataset needs count >= 1 and window >= 1");
  constexpr double kDt = 0.05;
  constexpr double kGravity = 9.81;
  constexpr int kSubsteps = 20;

  // Sensor noise: correlated accelerometer axes, independent gyro axes.
  Matrix noise_cov = Matrix::Zero(6, 6);
  noise_cov.topLeftCorner(3, 3) << 0.04, 0.012, 0.0, 0.012, 0.04, 0.0, 0.0, 0.0, 0.06;
  noise_cov.bottomRightCorner(3, 3) = 0.0004 * Matrix::Identity(3, 3);
  const Matrix noise_factor = noise_cov.llt().matrixL();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  OdometryDataset out;
  out.data = Dataset{6 * window, 2, {}};
  out.data.samples.reserve(count);
  for (int n = 0; n < count; ++n) {
    const double v0 = 0.3 + 1.7 * unit(rng);
    const double accel = (unit(rng) - 0.5) * 1.0;
    const double yaw_rate = (unit(rng) - 0.5) * 2.0;

    Vector input(6 * window);
    for (int k = 0; k < window; ++k) {
      const double t = k * kDt;
      const double speed = v0 + accel * t;
      Vector truth(6);
      truth << accel, speed * yaw_rate, kGravity, 0.0, 0.0, yaw_rate;
      Vector z(6);
      for (int i = 0; i < 6; ++i) z[i] = normal(rng);
      const Vector noise = noise_factor * z;
      out.sensor_residuals.push_back(noise);
      input.segment(6 * k, 6) = truth + noise;
    }
    // Remove gravity so every channel is roughly zero-centred.
    for (int k = 0; k < window; ++k) input[6 * k + 2] -= kGravity;

    double x = 0.0, y = 0.0;
    const double h = kDt / kSubsteps;
    for (int step = 0; step < window * kSubsteps; ++step) {
      const double t = (step + 0.5) * h;
      const double speed = v0 + accel * t;
      const double heading = yaw_rate * t;
      x += speed * std::cos(heading) * h;
      y += speed * std::sin(heading) * h;
    }
    Vector target(2);
    target << x, y;
    out.data.samples.push_back({std::move(input), std::move(target)});
  }
  return out;
}

int argmax(const Vector& v) {
  Eigen::Index best = 0;
  v.maxCoeff(&best);
  return static_cast<int>(best);
}

}  // namespace fgprop
