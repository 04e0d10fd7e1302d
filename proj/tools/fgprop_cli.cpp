// Command-line front end: dataset generation, training, corruption,
// single-input propagation, experiments, ablation and figures.

#include "fgprop/corruption.hpp"
#include "fgprop/dataset.hpp"
#include "fgprop/error.hpp"
#include "fgprop/experiment.hpp"
#include "fgprop/model_io.hpp"
#include "fgprop/propagation.hpp"
#include "fgprop/render.hpp"
#include "fgprop/train.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>
#include <sstream>

namespace {

using namespace fgprop;
using nlohmann::json;

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_std(m.row(r).transpose()));
  return rows;
}

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_method(item));
  }
  if (out.empty()) throw ConfigError("--methods is empty");
  return out;
}

bool looks_one_hot(const Dataset& data) {
  for (const auto& s : data.samples) {
    if (s.target.size() < 2 || s.target.sum() != 1.0 || s.target.maxCoeff() != 1.0) return false;
  }
  return !data.empty();
}

// Options shared by every subcommand that builds an input Gaussian.
struct InputOptions {
  std::string model, data, residuals;
  std::vector<double> sigmas;
  std::vector<int> kernels;
  int layer = -2;
  int m = 4;
  double factor_noise = 1e-6;
  std::uint64_t seed = 0;
  int mc_samples = 3000;
  std::string methods = "fg,ekf,ut";

  void add_to(CLI::App* app, bool settings_are_lists) {
    app->add_option("--model", model, "Model file")->required();
    app->add_option("--data", data, "Dataset file")->required();
    if (settings_are_lists) {
      app->add_option("--sigma", sigmas, "Noise sigma values (comma separated)")->delimiter(',');
      app->add_option("--kernel", kernels, "Blur kernel sizes (comma separated)")->delimiter(',');
    } else {
      app->add_option("--sigma", sigmas, "Noise sigma")->expected(1);
      app->add_option("--kernel", kernels, "Blur kernel size")->expected(1);
    }
    app->add_option("--residuals", residuals, "Sensor residual dataset; use its covariance as input noise");
    app->add_option("--layer", layer, "Target layer id (default: network output)");
    app->add_option("--m", m, "Factor-graph input nodes");
    app->add_option("--factor-noise", factor_noise, "Between-factor noise scale");
    app->add_option("--seed", seed, "Random seed");
    app->add_option("--mc-samples", mc_samples, "Monte Carlo reference size");
    app->add_option("--methods", methods, "Methods: fg,ekf,ut,mc");
  }

  std::vector<NoiseSetting> settings() const {
    if (sigmas.empty() && kernels.empty()) return standard_noise_settings();
    const auto s = sigmas.empty() ? std::vector<double>{0.0} : sigmas;
    const auto k = kernels.empty() ? std::vector<int>{1} : kernels;
    std::vector<NoiseSetting> out;
    for (double sigma : s) {
      for (int kernel : k) out.push_back({sigma, kernel});
    }
    return out;
  }

  ExperimentConfig config() const {
    ExperimentConfig cfg;
    cfg.model_path = model;
    cfg.data_path = data;
    if (layer != -2) cfg.target_layer = layer;
    cfg.settings = settings();
    if (!residuals.empty()) {
      const Dataset res = load_dataset(residuals);
      std::vector<Vector> rows;
      for (const auto& s : res.samples) rows.push_back(s.input);
      const Matrix reading_cov = empirical_covariance(rows);
      // Readings are i.i.d., so a window of them has a block-diagonal covariance.
      const Dataset header = load_dataset(data);
      if (header.input_dim % reading_cov.rows() != 0) throw ShapeError("residual dim does not divide input dim");
      const auto blocks = header.input_dim / reading_cov.rows();
      Matrix full = Matrix::Zero(header.input_dim, header.input_dim);
      for (Eigen::Index b = 0; b < blocks; ++b) {
        full.block(b * reading_cov.rows(), b * reading_cov.rows(), reading_cov.rows(), reading_cov.rows()) = reading_cov;
      }
      cfg.sensor_covariance = full;
    }
    cfg.methods = parse_methods(methods);
    cfg.mc_reference = mc_samples;
    cfg.fg.input_nodes = m;
    cfg.fg.factor_noise = factor_noise;
    cfg.seed = seed;
    return cfg;
  }
};

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
  } else {
    write_text(path, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uncertainty propagation through trained networks with factor graphs"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset");
  std::string gen_kind = "digits", gen_out, gen_residuals;
  int gen_count = 2000, gen_side = 8, gen_window = 10;
  std::uint64_t gen_seed = 0;
  generate->add_option("--kind", gen_kind, "digits or odometry")->check(CLI::IsMember({"digits", "odometry"}));
  generate->add_option("--count", gen_count, "Number of samples");
  generate->add_option("--side", gen_side, "Image side length (digits)");
  generate->add_option("--window", gen_window, "IMU readings per sample (odometry)");
  generate->add_option("--seed", gen_seed, "Random seed");
  generate->add_option("--out", gen_out, "Dataset file")->required();
  generate->add_option("--residuals", gen_residuals, "Sensor residual file (odometry)");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a network on a dataset");
  std::string train_data, train_out, train_arch = "residual", train_loss = "auto";
  int train_hidden = 32, train_blocks = 1, train_epochs = 40, train_batch = 32;
  double train_lr = 0.1;
  std::uint64_t train_seed = 0;
  train_cmd->add_option("--data", train_data, "Training dataset")->required();
  train_cmd->add_option("--out", train_out, "Output model file")->required();
  train_cmd->add_option("--arch", train_arch, "residual or mlp")->check(CLI::IsMember({"residual", "mlp"}));
  train_cmd->add_option("--hidden", train_hidden, "Hidden width");
  train_cmd->add_option("--blocks", train_blocks, "Residual blocks (or hidden layers for mlp)");
  train_cmd->add_option("--epochs", train_epochs, "Epochs");
  train_cmd->add_option("--lr", train_lr, "Learning rate");
  train_cmd->add_option("--batch", train_batch, "Batch size");
  train_cmd->add_option("--loss", train_loss, "mse, ce or auto")->check(CLI::IsMember({"mse", "ce", "auto"}));
  train_cmd->add_option("--seed", train_seed, "Random seed");

  // corrupt
  auto* corrupt_cmd = app.add_subcommand("corrupt", "Corrupt one dataset image with noise and blur");
  std::string corrupt_data, corrupt_out;
  int corrupt_index = 0, corrupt_kernel = 1;
  double corrupt_sigma = 0.0;
  std::uint64_t corrupt_seed = 0;
  corrupt_cmd->add_option("--data", corrupt_data, "Dataset file")->required();
  corrupt_cmd->add_option("--index", corrupt_index, "Sample index");
  corrupt_cmd->add_option("--sigma", corrupt_sigma, "Noise sigma");
  corrupt_cmd->add_option("--kernel", corrupt_kernel, "Blur kernel size");
  corrupt_cmd->add_option("--seed", corrupt_seed, "Random seed");
  corrupt_cmd->add_option("--out", corrupt_out, "Output JSON (stdout if omitted)");

  // propagate
  auto* propagate_cmd = app.add_subcommand("propagate", "Propagate one input's uncertainty and print JSON");
  InputOptions prop;
  int prop_index = 0;
  prop.add_to(propagate_cmd, false);
  propagate_cmd->add_option("--index", prop_index, "Sample index");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score methods against the Monte Carlo reference");
  InputOptions eval;
  int eval_trials = 500, eval_threads = 0;
  double eval_alpha = 0.001;
  std::string eval_out = "report";
  eval.add_to(evaluate, true);
  evaluate->add_option("--trials", eval_trials, "Trials per setting");
  evaluate->add_option("--threads", eval_threads, "Worker threads (0: all cores)");
  evaluate->add_option("--alpha", eval_alpha, "Nemenyi significance level");
  evaluate->add_option("--out", eval_out, "Report directory");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Factor-graph accuracy and time against input-node count");
  InputOptions abl;
  int abl_trials = 500, abl_threads = 0;
  std::string abl_out = "ablation";
  abl.m = 9;
  abl.add_to(ablate, true);
  ablate->add_option("--trials", abl_trials, "Trials per setting");
  ablate->add_option("--threads", abl_threads, "Worker threads (0: all cores)");
  ablate->add_option("--out", abl_out, "Output directory");

  // render
  auto* render = app.add_subcommand("render", "Covariance heatmaps and uncertainty ellipses for one input");
  InputOptions rend;
  int rend_index = 0;
  std::string rend_out = "figures";
  rend.methods = "fg,ekf,ut";
  rend.add_to(render, false);
  render->add_option("--index", rend_index, "Sample index");
  render->add_option("--out", rend_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "\n" << app.help();
    return 1;
  }

  try {
    if (*generate) {
      if (gen_kind == "digits") {
        save_dataset(make_digit_dataset(gen_count, gen_side, gen_seed), gen_out);
      } else {
        auto odo = make_odometry_dataset(gen_count, gen_window, gen_seed);
        save_dataset(odo.data, gen_out);
        if (!gen_residuals.empty()) {
          Dataset res{6, 0, {}};
          for (auto& r : odo.sensor_residuals) res.samples.push_back({r, Vector()});
          save_dataset(res, gen_residuals);
        }
      }
      return 0;
    }

    if (*train_cmd) {
      const Dataset data = load_dataset(train_data);
      const Loss loss = train_loss == "mse"  ? Loss::kMse
                        : train_loss == "ce" ? Loss::kCrossEntropy
                        : looks_one_hot(data) ? Loss::kCrossEntropy
                                              : Loss::kMse;
      Network net = train_arch == "residual"
                        ? make_residual_mlp(data.input_dim, train_hidden, train_blocks, data.target_dim, train_seed)
                        : make_mlp(data.input_dim, std::vector<int>(train_blocks, train_hidden), data.target_dim,
                                   train_seed);
      const double before = dataset_loss(net, data.samples, loss);
      net = train(std::move(net), data.samples, {train_epochs, train_lr, train_batch, train_seed, loss});
      save_model(net, train_out);
      json out = {{"loss_before", before}, {"loss_after", dataset_loss(net, data.samples, loss)},
                  {"layers", net.size()}, {"parameters", net.parameter_count()}};
      if (loss == Loss::kCrossEntropy) out["train_accuracy"] = classification_accuracy(net, data.samples);
      std::cout << out.dump(2) << "\n";
      return 0;
    }

    if (*corrupt_cmd) {
      const Dataset data = load_dataset(corrupt_data);
      if (corrupt_index < 0 || corrupt_index >= static_cast<int>(data.size())) throw LookupError("--index out of range");
      const Vector& image = data.samples[corrupt_index].input;
      const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(image.size()))));
      const ImageShape shape = side * side == image.size() ? ImageShape{side, side} : ImageShape{1, int(image.size())};
      const NoiseSetting setting{corrupt_sigma, corrupt_kernel};
      const json out = {{"height", shape.height},
                        {"width", shape.width},
                        {"sigma", corrupt_sigma},
                        {"kernel", corrupt_kernel},
                        {"clean", to_std(image)},
                        {"corrupted", to_std(corrupt(image, setting, shape, corrupt_seed))}};
      write_or_print(corrupt_out, out.dump(2) + "\n");
      return 0;
    }

    auto single_input = [](const InputOptions& opts, int index, const ExperimentConfig& cfg, const Dataset& data) {
      if (index < 0 || index >= static_cast<int>(data.size())) throw LookupError("--index out of range");
      const NoiseSetting setting = cfg.settings.empty() ? NoiseSetting{} : cfg.settings.front();
      (void)opts;
      return trial_input(cfg, setting, data.samples[index].input);
    };

    if (*propagate_cmd) {
      const ExperimentConfig cfg = prop.config();
      const Network net = load_model(cfg.model_path);
      const Dataset data = load_dataset(cfg.data_path);
      const Gaussian input = single_input(prop, prop_index, cfg, data);
      MethodOptions options{cfg.fg, cfg.ut, cfg.mc_reference, derive_seed(cfg.seed, 0, 3)};
      options.fg.seed = derive_seed(cfg.seed, 0, 1);
      json results = json::object();
      for (Method method : cfg.methods) {
        const Gaussian g = propagate(method, net, input, options, cfg.target_layer);
        results[method_name(method)] = {{"mean", to_std(g.mean())}, {"cov", matrix_json(g.cov())}};
      }
      const int out_dim = cfg.target_layer ? net.dim_of(*cfg.target_layer) : net.output_dim();
      std::cout << json{{"input_dim", net.input_dim()}, {"output_dim", out_dim}, {"results", results}}.dump(2) << "\n";
      return 0;
    }

    if (*evaluate) {
      ExperimentConfig cfg = eval.config();
      cfg.trials = eval_trials;
      cfg.threads = eval_threads;
      cfg.alpha = eval_alpha;
      cfg.output_dir = eval_out;
      const ExperimentReport report = run_experiment(cfg);
      write_text(cfg.output_dir / "report.svg", report_svg(report));
      for (const auto& s : report.settings) {
        std::cout << s.label;
        for (const auto& m : s.methods) std::cout << "  " << method_name(m.method) << " median=" << m.median_w2;
        if (s.friedman) std::cout << "  friedman_p=" << s.friedman->p_value;
        std::cout << "\n";
      }
      return 0;
    }

    if (*ablate) {
      ExperimentConfig cfg = abl.config();
      cfg.trials = abl_trials;
      cfg.threads = abl_threads;
      cfg.fg.input_nodes = 1;
      const auto points = run_ablation(cfg, load_model(cfg.model_path), load_dataset(cfg.data_path), 1, abl.m);
      const std::filesystem::path dir = abl_out;
      write_text(dir / "ablation.csv", ablation_csv(points));
      write_text(dir / "ablation.svg", ablation_svg(points));
      std::cout << ablation_csv(points);
      return 0;
    }

    if (*render) {
      const ExperimentConfig cfg = rend.config();
      const Network net = load_model(cfg.model_path);
      const Dataset data = load_dataset(cfg.data_path);
      const Gaussian input = single_input(rend, rend_index, cfg, data);
      MethodOptions options{cfg.fg, cfg.ut, cfg.mc_reference, derive_seed(cfg.seed, 0, 3)};
      options.fg.seed = derive_seed(cfg.seed, 0, 1);
      const int target = cfg.target_layer.value_or(net.output_id());

      std::vector<NamedMatrix> panels;
      std::vector<NamedGaussian> estimates;
      const Gaussian reference = propagate_mc(net, input, cfg.mc_reference, derive_seed(cfg.seed, 0, 2), target);
      panels.push_back({"MC reference", reference.cov()});
      for (Method method : cfg.methods) {
        if (method == Method::kMc) continue;
        Gaussian g = propagate(method, net, input, options, target);
        panels.push_back({method_name(method), g.cov()});
        estimates.push_back({method_name(method), std::move(g)});
      }
      const std::filesystem::path dir = rend_out;
      write_text(dir / "covariances.svg", covariance_heatmaps_svg(panels));
      if (net.dim_of(target) == 2) {
        std::mt19937_64 rng(derive_seed(cfg.seed, 0, 2));
        std::vector<Vector> outputs;
        for (const auto& x : sample_gaussian(input, cfg.mc_reference, rng)) outputs.push_back(forward_to(net, x, target));
        write_text(dir / "ellipses.svg", ellipse_plot_svg(outputs, estimates));
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
