#pragma once

#include "fgprop/corruption.hpp"
#include "fgprop/dataset.hpp"
#include "fgprop/propagation.hpp"
#include "fgprop/stats.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fgprop {

struct ExperimentConfig {
  std::filesystem::path model_path;
  std::filesystem::path data_path;
  std::optional<int> target_layer;  // default: network output
  std::vector<NoiseSetting> settings = standard_noise_settings();
  /// When set, every trial uses this input covariance around the clean input
  /// (measured sensor noise) instead of the corruption settings.
  std::optional<Matrix> sensor_covariance;
  int trials = 500;
  std::vector<Method> methods = {Method::kFg, Method::kEkf, Method::kUt};
  int mc_reference = 3000;
  FgConfig fg;
  UtParams ut;
  std::uint64_t seed = 0;
  double alpha = 0.001;  // Nemenyi significance level
  std::filesystem::path output_dir;
  int threads = 0;  // 0: hardware concurrency

  void validate() const;
};

struct ScoreRecord {
  int setting = 0;
  int trial = 0;
  Method method = Method::kFg;
  double w2 = 0.0;
  double wall_ms = 0.0;
};

struct MethodSummary {
  Method method = Method::kFg;
  double mean_w2 = 0.0;
  double median_w2 = 0.0;
  double mean_wall_ms = 0.0;
};

struct SettingSummary {
  std::string label;
  NoiseSetting setting;
  int trials_scored = 0;
  int failures = 0;
  std::vector<MethodSummary> methods;
  std::optional<FriedmanResult> friedman;
  std::optional<NemenyiResult> nemenyi;
};

struct ExperimentReport {
  std::vector<Method> methods;
  std::vector<SettingSummary> settings;
  std::vector<ScoreRecord> scores;  // canonical order: setting, trial, method
  std::string config_hash;
  std::uint64_t seed = 0;

  ScoreTable table(int setting) const;
};

/// Seed for (base, trial, stream); trial seeds are base + trial index mixed
/// with a stream id so each use gets an independent generator.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial, std::uint64_t stream);

/// Per-trial input Gaussian: corruption of the clean input, or the sensor
/// covariance around it.
Gaussian trial_input(const ExperimentConfig& config, const NoiseSetting& setting, const Vector& clean);

ExperimentReport run_experiment(const ExperimentConfig& config, const Network& net, const Dataset& data);
/// Loads model and dataset from the config paths and writes reports if
/// output_dir is set.
ExperimentReport run_experiment(const ExperimentConfig& config);

struct AblationPoint {
  int input_nodes = 0;
  double mean_w2 = 0.0;
  double median_w2 = 0.0;
  double wall_ms = 0.0;  // total FG time over all trials
};

/// FG propagation for m in [m_min, m_max] over the trial set, restricted to
/// settings without blur (all settings if none are blur-free).
std::vector<AblationPoint> run_ablation(const ExperimentConfig& config, const Network& net, const Dataset& data,
                                        int m_min = 1, int m_max = 9);

// Report files. scores.csv is byte-stable for a fixed config and seed;
// timings.csv holds wall-clock measurements and is not.
std::string scores_csv(const ExperimentReport& report);
std::string timings_csv(const ExperimentReport& report);
std::string summary_json(const ExperimentReport& report);
std::string ablation_csv(const std::vector<AblationPoint>& points);
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace fgprop
