#include "fgprop/propagation.hpp"

#include "fgprop/error.hpp"
#include "fgprop/metrics.hpp"

#include <memory>

namespace fgprop {

namespace {

constexpr double kMinPriorEigenvalue = 1e-12;

int resolve_target(const Network& net, std::optional<int> target) {
  const int id = target.value_or(net.output_id());
  if (id != kNetworkInput && (id < 0 || id >= net.size())) throw LookupError("unknown target layer");
  return id;
}

void check_input(const Network& net, const Gaussian& input) {
  if (input.dim() != net.input_dim()) throw ShapeError("input Gaussian dimension does not match the network");
}

// Sample covariance about the first sample, which keeps identical samples at
// exactly zero covariance.
Gaussian sample_moments(const std::vector<Vector>& ys) {
  const auto n = static_cast<double>(ys.size());
  const Vector& origin = ys.front();
  const auto d = origin.size();
  Vector shift_sum = Vector::Zero(d);
  Matrix scatter = Matrix::Zero(d, d);
  for (const auto& y : ys) {
    const Vector dy = y - origin;
    shift_sum += dy;
    scatter.selfadjointView<Eigen::Lower>().rankUpdate(dy);
  }
  const Vector shift_mean = shift_sum / n;
  scatter.selfadjointView<Eigen::Lower>().rankUpdate(shift_mean, -n);
  Matrix cov = scatter.selfadjointView<Eigen::Lower>();
  return Gaussian::from_moments(origin + shift_mean, cov / (n - 1.0));
}

}  // namespace

std::vector<Vector> sample_gaussian(const Gaussian& g, int count, std::mt19937_64& rng) {
  const Matrix root = psd_sqrt(g.cov());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> out;
  out.reserve(count);
  Vector z(g.dim());
  for (int i = 0; i < count; ++i) {
    for (int k = 0; k < g.dim(); ++k) z[k] = normal(rng);
    out.push_back(g.mean() + root * z);
  }
  return out;
}

FgOutcome propagate_fg_detailed(const Network& net, const Gaussian& input, const FgConfig& config,
                                std::optional<int> target) {
  check_input(net, input);
  if (config.input_nodes < 1) throw ConfigError("factor graph propagation needs at least one input node");
  if (!(config.factor_noise > 0.0)) throw ConfigError("between-factor noise must be positive");
  const int target_id = resolve_target(net, target);
  const int m = config.input_nodes;

  auto function = std::make_shared<const Network>(target_id == net.output_id() ? net : truncate(net, target_id));

  // Input nodes live in the original coordinates when the covariance is
  // positive definite, otherwise in the eigen square root's coordinates
  // x = mean + root z with a standard normal prior on z.
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(input.cov());
  Vector prior_mean = input.mean();
  Matrix prior_cov = input.cov();
  if (eig.eigenvalues().minCoeff() <= kMinPriorEigenvalue) {
    const double floor = kMinPriorEigenvalue * std::max(1.0, eig.eigenvalues().maxCoeff());
    std::vector<Eigen::Index> kept;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
      if (eig.eigenvalues()[i] > floor) kept.push_back(i);
    }
    const auto rank = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(kept.size()));
    Matrix root = Matrix::Zero(input.dim(), rank);
    for (std::size_t c = 0; c < kept.size(); ++c) {
      root.col(c) = eig.eigenvectors().col(kept[c]) * std::sqrt(eig.eigenvalues()[kept[c]]);
    }
    function = std::make_shared<const Network>(prepend_affine(*function, root, input.mean()));
    prior_mean = Vector::Zero(rank);
    prior_cov = Matrix::Identity(rank, rank);
  }

  std::mt19937_64 rng(config.seed);
  const auto initial = sample_gaussian(Gaussian(prior_mean, prior_cov), m, rng);

  FactorGraph graph;
  std::vector<int> inputs;
  for (const auto& x0 : initial) {
    const int id = graph.add_variable(static_cast<int>(x0.size()), x0);
    graph.add_prior_factor(id, prior_mean, prior_cov);
    inputs.push_back(id);
  }
  const int out_dim = function->output_dim();
  const int output = graph.add_variable(out_dim, evaluate(*function, prior_mean));
  const Matrix noise = config.factor_noise * Matrix::Identity(out_dim, out_dim);
  graph.add_nary_between_factor(inputs, output, function, noise);

  const Matrix marginal = marginal_covariance(graph, output);
  auto result = optimize(graph, config.optimizer);

  Matrix cov = m * marginal - noise / m;
  return {Gaussian::from_moments(graph.variable(output).value, cov), std::move(result)};
}

Gaussian propagate_fg(const Network& net, const Gaussian& input, const FgConfig& config, std::optional<int> target) {
  return propagate_fg_detailed(net, input, config, target).output;
}

Gaussian propagate_ekf(const Network& net, const Gaussian& input, std::optional<int> target) {
  check_input(net, input);
  const int target_id = resolve_target(net, target);
  if (target_id == kNetworkInput) return input;

  const Matrix input_root = psd_sqrt(input.cov());
  std::vector<Vector> mean(target_id + 1);
  std::vector<Matrix> root(target_id + 1);
  auto mean_of = [&](int id) -> const Vector& { return id == kNetworkInput ? input.mean() : mean[id]; };
  auto root_of = [&](int id) -> const Matrix& { return id == kNetworkInput ? input_root : root[id]; };

  for (int id = 0; id <= target_id; ++id) {
    const Layer& layer = net.layers()[id];
    switch (layer.kind) {
      case LayerKind::kAffine:
        mean[id] = layer.weight * mean_of(layer.inputs[0]) + layer.bias;
        root[id] = layer.weight * root_of(layer.inputs[0]);
        break;
      case LayerKind::kRelu: {
        const Vector& in = mean_of(layer.inputs[0]);
        mean[id] = in.cwiseMax(0.0);
        root[id] = (in.array() > 0.0).cast<double>().matrix().asDiagonal() * root_of(layer.inputs[0]);
        break;
      }
      case LayerKind::kAdd:
        mean[id] = mean_of(layer.inputs[0]) + mean_of(layer.inputs[1]);
        root[id] = root_of(layer.inputs[0]) + root_of(layer.inputs[1]);
        break;
    }
  }
  return Gaussian::from_moments(mean[target_id], root[target_id] * root[target_id].transpose());
}

double UtParams::lambda_for(int n) const {
  if (lambda) return *lambda;
  const double k = kappa.value_or(3.0 - n);
  return alpha * alpha * (n + k) - n;
}

Gaussian unscented_transform(const VectorFunction& f, const Gaussian& input, const UtParams& params) {
  const int n = input.dim();
  const double lambda = params.lambda_for(n);
  const double spread = n + lambda;
  if (!(spread > 0.0)) throw ConfigError("unscented transform needs n + lambda > 0");

  const Matrix root = psd_sqrt(spread * input.cov());
  const double w0_mean = lambda / spread;
  const double w0_cov = w0_mean + (1.0 - params.alpha * params.alpha + params.beta);
  const double wi = 1.0 / (2.0 * spread);

  std::vector<Vector> ys;
  ys.reserve(2 * n + 1);
  ys.push_back(f(input.mean()));
  for (int i = 0; i < n; ++i) ys.push_back(f(input.mean() + root.col(i)));
  for (int i = 0; i < n; ++i) ys.push_back(f(input.mean() - root.col(i)));

  Vector mean = w0_mean * ys[0];
  for (int i = 1; i <= 2 * n; ++i) mean += wi * ys[i];

  const auto d = ys[0].size();
  Matrix cov = Matrix::Zero(d, d);
  for (int i = 0; i <= 2 * n; ++i) {
    const Vector dy = ys[i] - mean;
    cov.selfadjointView<Eigen::Lower>().rankUpdate(dy, i == 0 ? w0_cov : wi);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  return Gaussian::from_moments(std::move(mean), std::move(cov));
}

Gaussian propagate_ut(const Network& net, const Gaussian& input, const UtParams& params, std::optional<int> target) {
  check_input(net, input);
  const int target_id = resolve_target(net, target);
  return unscented_transform([&](const Vector& x) { return forward_to(net, x, target_id); }, input, params);
}

Gaussian monte_carlo(const VectorFunction& f, const Gaussian& input, int samples, std::uint64_t seed) {
  if (samples < 2) throw ConfigError("Monte Carlo propagation needs at least two samples");
  std::mt19937_64 rng(seed);
  const Matrix root = psd_sqrt(input.cov());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> ys;
  ys.reserve(samples);
  Vector z(input.dim());
  for (int s = 0; s < samples; ++s) {
    for (int k = 0; k < input.dim(); ++k) z[k] = normal(rng);
    ys.push_back(f(input.mean() + root * z));
  }
  return sample_moments(ys);
}

Gaussian propagate_mc(const Network& net, const Gaussian& input, int samples, std::uint64_t seed,
                      std::optional<int> target) {
  check_input(net, input);
  const int target_id = resolve_target(net, target);
  return monte_carlo([&](const Vector& x) { return forward_to(net, x, target_id); }, input, samples, seed);
}

std::string method_name(Method method) {
  switch (method) {
    case Method::kFg:
      return "fg";
    case Method::kEkf:
      return "ekf";
    case Method::kUt:
      return "ut";
    case Method::kMc:
      return "mc";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "fg") return Method::kFg;
  if (name == "ekf") return Method::kEkf;
  if (name == "ut") return Method::kUt;
  if (name == "mc") return Method::kMc;
  throw ConfigError("unknown propagation method '" + name + "'");
}

Gaussian propagate(Method method, const Network& net, const Gaussian& input, const MethodOptions& options,
                   std::optional<int> target) {
  switch (method) {
    case Method::kFg:
      return propagate_fg(net, input, options.fg, target);
    case Method::kEkf:
      return propagate_ekf(net, input, target);
    case Method::kUt:
      return propagate_ut(net, input, options.ut, target);
    case Method::kMc:
      return propagate_mc(net, input, options.mc_samples, options.mc_seed, target);
  }
  throw ConfigError("unknown propagation method");
}

}  // namespace fgprop
