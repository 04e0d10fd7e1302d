#include "fgprop/experiment.hpp"

#include "fgprop/error.hpp"
#include "fgprop/metrics.hpp"
#include "fgprop/model_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

namespace fgprop {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kStreamFg = 1;
constexpr std::uint64_t kStreamReference = 2;
constexpr std::uint64_t kStreamMc = 3;

ImageShape shape_for(int input_dim) {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(input_dim))));
  if (side * side == input_dim) return {side, side};
  return {1, input_dim};
}

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Runs fn(trial) for trials [0, count) on `threads` workers. Exceptions are
// the callee's responsibility.
template <typename Fn>
void for_each_trial(int count, int threads, Fn&& fn) {
  const int workers = std::max(1, std::min(count, threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency())));
  if (workers == 1) {
    for (int t = 0; t < count; ++t) fn(t);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int t = next++; t < count; t = next++) fn(t);
    });
  }
}

std::vector<NoiseSetting> effective_settings(const ExperimentConfig& config) {
  if (config.sensor_covariance) return {NoiseSetting{0.0, 1}};
  return config.settings;
}

std::string setting_label(const ExperimentConfig& config, const NoiseSetting& s) {
  return config.sensor_covariance ? std::string("sensor") : s.label();
}

nlohmann::json config_json(const ExperimentConfig& config) {
  nlohmann::json settings = nlohmann::json::array();
  for (const auto& s : config.settings) settings.push_back({s.sigma, s.kernel});
  std::vector<std::string> methods;
  for (auto m : config.methods) methods.push_back(method_name(m));
  return {{"target_layer", config.target_layer ? *config.target_layer : -2},
          {"settings", settings},
          {"sensor_covariance", config.sensor_covariance.has_value()},
          {"trials", config.trials},
          {"methods", methods},
          {"mc_reference", config.mc_reference},
          {"fg_input_nodes", config.fg.input_nodes},
          {"fg_factor_noise", config.fg.factor_noise},
          {"seed", config.seed},
          {"alpha", config.alpha}};
}

}  // namespace

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("trial count must be at least 1");
  if (!sensor_covariance && settings.empty()) throw ConfigError("at least one noise setting is required");
  for (const auto& s : settings) s.validate();
  if (methods.empty()) throw ConfigError("at least one method is required");
  if (mc_reference < 2) throw ConfigError("Monte Carlo reference needs at least two samples");
  if (fg.input_nodes < 1) throw ConfigError("factor graph needs at least one input node");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial, std::uint64_t stream) {
  // splitmix64 finalizer over (base + trial) and the stream id.
  std::uint64_t z = (base + trial) ^ (stream * 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Gaussian trial_input(const ExperimentConfig& config, const NoiseSetting& setting, const Vector& clean) {
  if (config.sensor_covariance) return Gaussian(clean, *config.sensor_covariance);
  return corrupted_input(clean, setting, shape_for(static_cast<int>(clean.size())));
}

ScoreTable ExperimentReport::table(int setting) const {
  ScoreTable t;
  for (auto m : methods) t.methods.push_back(method_name(m));
  std::vector<int> trials;
  for (const auto& r : scores) {
    if (r.setting == setting && (trials.empty() || trials.back() != r.trial)) trials.push_back(r.trial);
  }
  t.scores = Matrix::Zero(static_cast<Eigen::Index>(trials.size()), static_cast<Eigen::Index>(methods.size()));
  Eigen::Index row = -1;
  int last_trial = -1;
  for (const auto& r : scores) {
    if (r.setting != setting) continue;
    if (r.trial != last_trial) {
      ++row;
      last_trial = r.trial;
    }
    const auto col = std::find(methods.begin(), methods.end(), r.method) - methods.begin();
    t.scores(row, col) = r.w2;
  }
  return t;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const Network& net, const Dataset& data) {
  config.validate();
  if (data.empty()) throw ConfigError("dataset is empty");
  if (data.input_dim != net.input_dim()) throw ShapeError("dataset input dimension does not match the model");

  const auto settings = effective_settings(config);
  const int n_methods = static_cast<int>(config.methods.size());

  ExperimentReport report;
  report.methods = config.methods;
  report.seed = config.seed;
  report.config_hash = [&] {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config_json(config).dump())));
    return std::string(buf);
  }();

  for (int s = 0; s < static_cast<int>(settings.size()); ++s) {
    const NoiseSetting& setting = settings[s];
    struct TrialResult {
      bool ok = false;
      std::vector<double> w2, ms;
    };
    std::vector<TrialResult> results(config.trials);

    for_each_trial(config.trials, config.threads, [&](int trial) {
      TrialResult& out = results[trial];
      try {
        const Vector& clean = data.samples[static_cast<std::size_t>(trial) % data.size()].input;
        const Gaussian input = trial_input(config, setting, clean);
        const Gaussian reference = propagate_mc(net, input, config.mc_reference,
                                                derive_seed(config.seed, trial, kStreamReference),
                                                config.target_layer);
        MethodOptions options{config.fg, config.ut, config.mc_reference, derive_seed(config.seed, trial, kStreamMc)};
        options.fg.seed = derive_seed(config.seed, trial, kStreamFg);
        for (Method method : config.methods) {
          const auto start = Clock::now();
          const Gaussian estimate = propagate(method, net, input, options, config.target_layer);
          out.ms.push_back(elapsed_ms(start));
          const double w2 = wasserstein2(estimate, reference);
          if (!std::isfinite(w2)) throw NumericError("non-finite W2 score");
          out.w2.push_back(w2);
        }
        out.ok = true;
      } catch (const Error&) {
        out.ok = false;
      }
    });

    SettingSummary summary;
    summary.label = setting_label(config, setting);
    summary.setting = setting;
    for (int trial = 0; trial < config.trials; ++trial) {
      const auto& r = results[trial];
      if (!r.ok) {
        ++summary.failures;
        continue;
      }
      ++summary.trials_scored;
      for (int k = 0; k < n_methods; ++k) report.scores.push_back({s, trial, config.methods[k], r.w2[k], r.ms[k]});
    }
    if (summary.failures * 100 > config.trials) {
      throw Error("setting " + summary.label + ": " + std::to_string(summary.failures) + " of " +
                  std::to_string(config.trials) + " trials failed");
    }

    for (int k = 0; k < n_methods; ++k) {
      std::vector<double> w2s;
      double ms = 0.0;
      for (const auto& r : report.scores) {
        if (r.setting == s && r.method == config.methods[k]) {
          w2s.push_back(r.w2);
          ms += r.wall_ms;
        }
      }
      MethodSummary m{config.methods[k], 0.0, median(w2s), 0.0};
      double sum = 0.0;
      for (double w : w2s) sum += w;
      if (!w2s.empty()) {
        m.mean_w2 = sum / static_cast<double>(w2s.size());
        m.mean_wall_ms = ms / static_cast<double>(w2s.size());
      }
      summary.methods.push_back(m);
    }
    report.settings.push_back(std::move(summary));
    if (n_methods >= 2 && report.settings.back().trials_scored >= 2) {
      const ScoreTable table = report.table(s);
      report.settings.back().friedman = friedman_test(table);
      if (n_methods <= 10) report.settings.back().nemenyi = nemenyi_test(table, config.alpha);
    }
  }
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  const Network net = load_model(config.model_path);
  const Dataset data = load_dataset(config.data_path);
  ExperimentReport report = run_experiment(config, net, data);
  if (!config.output_dir.empty()) write_report(report, config.output_dir);
  return report;
}

std::vector<AblationPoint> run_ablation(const ExperimentConfig& config, const Network& net, const Dataset& data,
                                        int m_min, int m_max) {
  config.validate();
  if (m_min < 1 || m_max < m_min) throw ConfigError("ablation range must satisfy 1 <= m_min <= m_max");
  if (data.empty()) throw ConfigError("dataset is empty");
  if (data.input_dim != net.input_dim()) throw ShapeError("dataset input dimension does not match the model");

  std::vector<NoiseSetting> settings;
  for (const auto& s : effective_settings(config)) {
    if (s.kernel == 1) settings.push_back(s);
  }
  if (settings.empty()) settings = effective_settings(config);

  const int span = m_max - m_min + 1;
  const int cases = static_cast<int>(settings.size()) * config.trials;
  // scores[case][m - m_min], times likewise.
  std::vector<std::vector<double>> scores(cases, std::vector<double>(span, 0.0));
  std::vector<std::vector<double>> times(cases, std::vector<double>(span, 0.0));
  std::vector<char> ok(cases, 0);

  for_each_trial(cases, config.threads, [&](int c) {
    const int s = c / config.trials;
    const int trial = c % config.trials;
    try {
      const Vector& clean = data.samples[static_cast<std::size_t>(trial) % data.size()].input;
      const Gaussian input = trial_input(config, settings[s], clean);
      const Gaussian reference = propagate_mc(net, input, config.mc_reference,
                                              derive_seed(config.seed, trial, kStreamReference), config.target_layer);
      FgConfig fg = config.fg;
      fg.seed = derive_seed(config.seed, trial, kStreamFg);
      for (int m = m_min; m <= m_max; ++m) {
        fg.input_nodes = m;
        const auto start = Clock::now();
        const Gaussian estimate = propagate_fg(net, input, fg, config.target_layer);
        times[c][m - m_min] = elapsed_ms(start);
        scores[c][m - m_min] = wasserstein2(estimate, reference);
      }
      ok[c] = 1;
    } catch (const Error&) {
      ok[c] = 0;
    }
  });

  const auto failures = std::count(ok.begin(), ok.end(), 0);
  if (failures * 100 > cases) throw Error("ablation: " + std::to_string(failures) + " trials failed");

  std::vector<AblationPoint> points;
  for (int k = 0; k < span; ++k) {
    std::vector<double> w2s;
    double total_ms = 0.0;
    for (int c = 0; c < cases; ++c) {
      if (!ok[c]) continue;
      w2s.push_back(scores[c][k]);
      total_ms += times[c][k];
    }
    double sum = 0.0;
    for (double w : w2s) sum += w;
    points.push_back({m_min + k, w2s.empty() ? 0.0 : sum / static_cast<double>(w2s.size()), median(w2s), total_ms});
  }
  return points;
}

std::string scores_csv(const ExperimentReport& report) {
  std::string out = "setting,trial,method,w2\n";
  for (const auto& r : report.scores) {
    out += report.settings[r.setting].label + "," + std::to_string(r.trial) + "," + method_name(r.method) + "," +
           format_double(r.w2) + "\n";
  }
  return out;
}

std::string timings_csv(const ExperimentReport& report) {
  std::string out = "setting,trial,method,wall_ms\n";
  for (const auto& r : report.scores) {
    out += report.settings[r.setting].label + "," + std::to_string(r.trial) + "," + method_name(r.method) + "," +
           format_double(r.wall_ms) + "\n";
  }
  return out;
}

std::string summary_json(const ExperimentReport& report) {
  using nlohmann::json;
  json settings = json::array();
  for (const auto& s : report.settings) {
    json methods = json::array();
    for (const auto& m : s.methods) {
      methods.push_back({{"method", method_name(m.method)}, {"mean_w2", m.mean_w2}, {"median_w2", m.median_w2}});
    }
    json entry = {{"label", s.label},
                  {"sigma", s.setting.sigma},
                  {"kernel", s.setting.kernel},
                  {"trials_scored", s.trials_scored},
                  {"failures", s.failures},
                  {"methods", methods}};
    if (s.friedman) {
      entry["friedman"] = {{"statistic", s.friedman->statistic},
                           {"p_value", s.friedman->p_value},
                           {"mean_ranks", s.friedman->mean_ranks},
                           {"degenerate", s.friedman->degenerate}};
    }
    if (s.nemenyi) {
      json pairs = json::array();
      for (std::size_t i = 0; i < s.methods.size(); ++i) {
        for (std::size_t j = i + 1; j < s.methods.size(); ++j) {
          pairs.push_back({{"a", method_name(s.methods[i].method)},
                           {"b", method_name(s.methods[j].method)},
                           {"significant", static_cast<bool>(s.nemenyi->significant[i][j])}});
        }
      }
      entry["nemenyi"] = {{"q", s.nemenyi->q}, {"critical_difference", s.nemenyi->critical_difference}, {"pairs", pairs}};
    }
    settings.push_back(entry);
  }
  std::vector<std::string> methods;
  for (auto m : report.methods) methods.push_back(method_name(m));
  const json out = {{"config_hash", report.config_hash},
                    {"seed", report.seed},
                    {"methods", methods},
                    {"score_count", report.scores.size()},
                    {"settings", settings}};
  return out.dump(2) + "\n";
}

std::string ablation_csv(const std::vector<AblationPoint>& points) {
  std::string out = "m,mean_w2,median_w2,wall_ms\n";
  for (const auto& p : points) {
    out += std::to_string(p.input_nodes) + "," + format_double(p.mean_w2) + "," + format_double(p.median_w2) + "," +
           format_double(p.wall_ms) + "\n";
  }
  return out;
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / name).string());
    out << text;
  };
  write("scores.csv", scores_csv(report));
  write("timings.csv", timings_csv(report));
  write("summary.json", summary_json(report));
}

}  // namespace fgprop
