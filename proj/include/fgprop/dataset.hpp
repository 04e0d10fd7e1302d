#pragma once

#include "fgprop/network.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace fgprop {

struct RegressionSample {
  Vector input;
  Vector target;  // regression target, or a one-hot class label
};

struct Dataset {
  int input_dim = 0;
  int target_dim = 0;
  std::vector<RegressionSample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// Dataset file: one line of JSON {"format","version","count","input_dim",
// "target_dim"}, a newline, then `count` rows of (input, target) as
// little-endian float32.
void write_dataset(std::ostream& out, const Dataset& data);
Dataset read_dataset(std::istream& in);
void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

/// Deterministic split into (first, second) with `fraction` of samples in first.
std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double fraction, std::uint64_t seed);

/// Procedurally rendered digit-like glyphs: `side` x `side` grayscale images in
/// [0, 1] with random stroke jitter, and one-hot targets over 10 classes.
Dataset make_digit_dataset(int count, int side, std::uint64_t seed);

/// Planar inertial-odometry-style regression set: each input is a window of
/// `window` six-axis IMU readings (ax, ay, az, gx, gy, gz) flattened row-major,
/// the target is the (dx, dy) displacement over the window in metres.
struct OdometryDataset {
  Dataset data;
  /// IMU reading minus the true kinematic signal, one row per reading, for
  /// estimating the sensor covariance.
  std::vector<Vector> sensor_residuals;
};
OdometryDataset make_odometry_dataset(int count, int window, std::uint64_t seed);

/// Index of the largest entry, used as the class prediction of a logit vector.
int argmax(const Vector& v);

}  // namespace fgprop
