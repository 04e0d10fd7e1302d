// Acceptance suite. Prints one PASS/FAIL line per criterion; with a
// criterion number as argument only that one runs. Exit status is non-zero
// if any criterion that ran failed.

#include "fgprop/corruption.hpp"
#include "fgprop/dataset.hpp"
#include "fgprop/desk.hpp"
#include "fgprop/experiment.hpp"
#include "fgprop/metrics.hpp"
#include "fgprop/model_io.hpp"
#include "fgprop/propagation.hpp"
#include "fgprop/stats.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace fgprop;
using namespace fgprop::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

Outcome affine_exactness() {
  const auto start = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    const int in = 2 + static_cast<int>(seed * 31 % 31);
    const int out = 1 + static_cast<int>(rng() % 32);
    const Matrix w = random_matrix(out, in, rng);
    const Network net = affine_net(w, random_vector(out, rng));
    const Gaussian input(random_vector(in, rng), random_spd(in, rng));
    const Matrix expected = w * input.cov() * w.transpose();
    FgConfig one, four;
    one.input_nodes = 1;
    four.input_nodes = 4;
    one.seed = four.seed = seed;
    for (const Gaussian& g : {propagate_fg(net, input, one), propagate_fg(net, input, four),
                              propagate_ekf(net, input), propagate_ut(net, input)}) {
      worst = std::max(worst, relative_frobenius(g.cov(), expected));
    }
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-5 && elapsed < 30.0, fmt("worst relative Frobenius %.3g, %.1f s", worst, elapsed)};
}

Outcome graph_oracles() {
  double worst_mean = 0.0, worst_cov = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    LinearCase c = linear_case(seed);
    optimize(c.graph);
    worst_mean = std::max(worst_mean, max_abs(c.graph.variable(c.output).value - c.mean));
    worst_cov = std::max(worst_cov, relative_frobenius(marginal_covariance(c.graph, c.output), c.cov));
  }
  const auto cubic = cubic_map_vs_grid();
  const double cubic_err = std::abs(cubic.map - cubic.grid);
  return {worst_mean < 1e-6 && worst_cov < 1e-6 && cubic_err < 1e-3,
          fmt("linear mean %.3g, cov %.3g; cubic MAP %.5f vs grid %.5f", worst_mean, worst_cov, cubic.map,
              cubic.grid)};
}

double min_abs_preactivation(const Network& net, const Vector& x) {
  const auto acts = forward(net, x);
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& layer : net.layers()) {
    if (layer.kind != LayerKind::kRelu) continue;
    const int src = layer.inputs[0];
    lo = std::min(lo, (src == kNetworkInput ? x : acts[src]).cwiseAbs().minCoeff());
  }
  return lo;
}

Outcome jacobian_correctness() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const int in = 2 + static_cast<int>(rng() % 10);
    const Network net =
        make_residual_mlp(in, 4 + static_cast<int>(rng() % 12), 1 + static_cast<int>(rng() % 3), 2, seed);
    Vector x = random_vector(in, rng);
    while (min_abs_preactivation(net, x) < 1e-3) x = random_vector(in, rng);
    worst = std::max(worst, relative_max_norm(jacobian(net, x), finite_diff_jacobian(net, x, net.output_id(), 1e-6)));
  }
  return {worst < 1e-4, fmt("worst relative max-norm %.3g over 100 networks", worst)};
}

// Shared by the ordering criteria: a trained desk classifier and a
// high-noise, blurred sweep over its test images.
const DeskSetup& desk() {
  static const DeskSetup setup = make_desk_digit_setup(7);
  return setup;
}

Outcome ordering(std::optional<int> layer, const char* name) {
  const auto start = Clock::now();
  const DeskSetup& d = desk();
  ExperimentConfig cfg;
  cfg.settings = {{0.2, 5}};
  cfg.trials = static_cast<int>(std::min<std::size_t>(500, d.test.size()));
  cfg.target_layer = layer;
  cfg.mc_reference = 3000;
  cfg.alpha = 0.001;
  const auto report = run_experiment(cfg, d.net, d.test);
  const double elapsed = seconds_since(start);

  const auto& s = report.settings.front();
  std::map<Method, double> median;
  for (const auto& m : s.methods) median[m.method] = m.median_w2;
  const double fg = median[Method::kFg], ekf = median[Method::kEkf], ut = median[Method::kUt];
  const double p = s.friedman->p_value;
  // Columns follow cfg.methods: fg, ekf, ut.
  const bool sep_ekf = s.nemenyi->significant[0][1], sep_ut = s.nemenyi->significant[0][2];
  const auto& ranks = s.friedman->mean_ranks;
  const bool pass = fg < ekf && ekf < ut && p <= 0.001 && sep_ekf && sep_ut && elapsed < 300.0;
  return {pass, fmt("%s, %d trials: median W2 fg %.4f ekf %.4f ut %.4f; Friedman p %.2g; mean ranks %.3f/%.3f/%.3f, "
                    "CD %.3f; Nemenyi fg-ekf %s, fg-ut %s; %.0f s",
                    name, s.trials_scored, fg, ekf, ut, p, ranks[0], ranks[1], ranks[2],
                    s.nemenyi->critical_difference, sep_ekf ? "separated" : "not separated",
                    sep_ut ? "separated" : "not separated", elapsed)};
}

Outcome ablation_shape() {
  const DeskSetup& d = desk();
  ExperimentConfig cfg;
  cfg.trials = 100;
  cfg.mc_reference = 3000;
  cfg.threads = 1;
  const auto points = run_ablation(cfg, d.net, d.test, 1, 9);
  bool non_increasing = true, time_increasing = true;
  for (int i = 1; i < 4; ++i) non_increasing = non_increasing && points[i].mean_w2 <= points[i - 1].mean_w2;
  for (std::size_t i = 1; i < points.size(); ++i) time_increasing = time_increasing && points[i].wall_ms > points[i - 1].wall_ms;
  const double early = points[0].mean_w2 - points[3].mean_w2;
  const double late = points[3].mean_w2 - points[8].mean_w2;
  std::string curve;
  for (const auto& p : points) curve += fmt(" %d:%.4f/%.0fms", p.input_nodes, p.mean_w2, p.wall_ms);
  return {non_increasing && late < early && time_increasing,
          fmt("1->4 gain %.4f, 4->9 gain %.4f;", early, late) + curve};
}

Outcome wasserstein_suite() {
  std::mt19937_64 rng(70);
  double zero = 0.0, diag_err = 0.0, asym = 0.0, triangle = -std::numeric_limits<double>::infinity();
  std::uniform_real_distribution<double> uni(0.01, 4.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int dim = 1 + trial % 8;
    auto gaussian = [&] { return Gaussian(random_vector(dim, rng), random_spd(dim, rng, 0.01)); };
    const Gaussian a = gaussian(), b = gaussian(), c = gaussian();
    zero = std::max(zero, wasserstein2(a, a));
    asym = std::max(asym, std::abs(wasserstein2(a, b) - wasserstein2(b, a)));
    triangle = std::max(triangle, wasserstein2(a, c) - wasserstein2(a, b) - wasserstein2(b, c));

    Vector da(dim), db(dim);
    for (int i = 0; i < dim; ++i) da[i] = uni(rng), db[i] = uni(rng);
    const double closed = (da.cwiseSqrt() - db.cwiseSqrt()).norm();
    const double w2 = wasserstein2(Gaussian(Vector::Zero(dim), Matrix(da.asDiagonal())),
                                   Gaussian(Vector::Zero(dim), Matrix(db.asDiagonal())));
    diag_err = std::max(diag_err, std::abs(w2 - closed));
  }
  return {zero == 0.0 && diag_err < 1e-10 && asym < 1e-10 && triangle < 1e-8,
          fmt("identical %.2g, diagonal %.2g, asymmetry %.2g, worst triangle slack %.2g", zero, diag_err, asym,
              triangle)};
}

Outcome noise_consistency() {
  const ImageShape shape{8, 8};
  const Vector image = desk().test.samples.front().input;
  const int draws = 1'000'000;
  double worst = 0.0;
  std::string per;
  for (const auto& setting : standard_noise_settings()) {
    const Gaussian analytic = corrupted_input(image, setting, shape);
    Matrix acc = Matrix::Zero(64, 64);
    const int batch = 4096;
    Matrix block(64, batch);
    int filled = 0;
    for (int i = 0; i < draws; ++i) {
      block.col(filled++) = corrupt(image, setting, shape, 7'000'000 + i) - analytic.mean();
      if (filled == batch || i + 1 == draws) {
        acc.noalias() += block.leftCols(filled) * block.leftCols(filled).transpose();
        filled = 0;
      }
    }
    const double err = relative_frobenius(acc / draws, analytic.cov());
    worst = std::max(worst, err);
    per += fmt(" %s:%.4f", setting.label().c_str(), err);
  }
  return {worst < 0.02, "relative Frobenius" + per};
}

Outcome statistics() {
  ScoreTable hand{{"a", "b", "c"}, Matrix{{0.1, 0.2, 0.3}, {1.0, 5.0, 9.0}, {0.0, 0.5, 0.6}, {2.0, 3.0, 4.0}}};
  const double stat = friedman_test(hand).statistic;
  std::mt19937_64 rng(90);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  int invariant = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int rows = 5 + trial % 20, cols = 2 + trial % 5;
    ScoreTable t{std::vector<std::string>(cols, "m"), Matrix(rows, cols)};
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) t.scores(r, c) = uni(rng);
    }
    ScoreTable u = t;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) u.scores(r, c) = std::pow(t.scores(r, c), 3.0) * (1 + r) + r;
    }
    invariant += friedman_test(t).statistic == friedman_test(u).statistic;
  }
  return {stat == 8.0 && invariant == 100, fmt("hand table statistic %.12g; rank invariance %d/100", stat, invariant)};
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "fgprop_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  save_model(desk().net, dir / "model.bin");
  save_dataset(desk().test, dir / "data.bin");
  const std::string base = std::string(FGPROP_CLI) + " evaluate --model " + (dir / "model.bin").string() + " --data " +
                           (dir / "data.bin").string() + " --trials 20 --mc-samples 1000 --seed 11 --out ";
  for (const char* run : {"a", "b"}) {
    const int status = std::system((base + (dir / run).string() + " > /dev/null").c_str());
    if (status != 0) return {false, fmt("evaluate exited with status %d", status)};
  }
  bool same = true;
  std::string detail;
  for (const char* name : {"scores.csv", "summary.json"}) {
    const std::string a = read_file(dir / "a" / name), b = read_file(dir / "b" / name);
    same = same && !a.empty() && a == b;
    detail += fmt("%s %zu bytes %s; ", name, a.size(), a == b ? "identical" : "DIFFER");
  }
  return {same, detail};
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "affine exactness", affine_exactness},
      {2, "factor-graph oracle equivalence", graph_oracles},
      {3, "Jacobian correctness", jacobian_correctness},
      {4, "method ordering at the network output", [] { return ordering(std::nullopt, "output layer"); }},
      {5, "method ordering at the penultimate layer", [] { return ordering(desk().net.output_id() - 1, "penultimate layer"); }},
      {6, "input-node ablation shape", ablation_shape},
      {7, "W2 metric suite", wasserstein_suite},
      {8, "noise-model consistency", noise_consistency},
      {9, "Friedman statistics", statistics},
      {10, "report determinism", determinism},
  };
  std::optional<int> only;
  if (argc > 1) only = std::atoi(argv[1]);

  int failed = 0;
  for (const auto& c : criteria) {
    if (only && *only != c.id) continue;
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failed += !outcome.pass;
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.title << "): "
              << outcome.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
