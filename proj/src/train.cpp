#include "fgprop/train.hpp"

#include "fgprop/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace fgprop {

namespace {

Vector softmax(const Vector& logits) {
  const Vector shifted = (logits.array() - logits.maxCoeff()).exp().matrix();
  return shifted / shifted.sum();
}

double sample_loss(const Vector& output, const Vector& target, Loss loss) {
  if (loss == Loss::kMse) return (output - target).squaredNorm();
  const double max = output.maxCoeff();
  const double log_norm = max + std::log((output.array() - max).exp().sum());
  return -(target.array() * (output.array() - log_norm)).sum();
}

Vector loss_gradient(const Vector& output, const Vector& target, Loss loss) {
  if (loss == Loss::kMse) return 2.0 * (output - target);
  return softmax(output) * target.sum() - target;
}

struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;

  explicit Gradients(const Network& net) : weight(net.size()), bias(net.size()) {
    for (const auto& l : net.layers()) {
      if (l.kind != LayerKind::kAffine) continue;
      weight[l.id] = Matrix::Zero(l.weight.rows(), l.weight.cols());
      bias[l.id] = Vector::Zero(l.bias.size());
    }
  }
};

// Accumulates d(loss)/d(params) for one sample and returns its loss.
double backprop(const Network& net, const RegressionSample& sample, Loss loss, Gradients& grads) {
  const auto acts = forward(net, sample.input);
  auto value = [&](int id) -> const Vector& { return id == kNetworkInput ? sample.input : acts[id]; };

  std::vector<Vector> delta(net.size());
  for (const auto& l : net.layers()) delta[l.id] = Vector::Zero(l.out_dim);
  const int out = net.output_id();
  if (out == kNetworkInput) return sample_loss(sample.input, sample.target, loss);
  delta[out] = loss_gradient(acts[out], sample.target, loss);

  auto push = [&](int id, const Vector& g) {
    if (id != kNetworkInput) delta[id] += g;
  };
  for (int id = net.size() - 1; id >= 0; --id) {
    const Layer& l = net.layers()[id];
    const Vector& g = delta[id];
    switch (l.kind) {
      case LayerKind::kAffine:
        grads.weight[id].noalias() += g * value(l.inputs[0]).transpose();
        grads.bias[id] += g;
        push(l.inputs[0], l.weight.transpose() * g);
        break;
      case LayerKind::kRelu:
        push(l.inputs[0], (value(l.inputs[0]).array() > 0.0).select(g, 0.0));
        break;
      case LayerKind::kAdd:
        push(l.inputs[0], g);
        push(l.inputs[1], g);
        break;
    }
  }
  return sample_loss(acts[out], sample.target, loss);
}

void check_data(const Network& net, std::span<const RegressionSample> data) {
  if (data.empty()) throw ConfigError("training data is empty");
  for (const auto& s : data) {
    if (s.input.size() != net.input_dim() || s.target.size() != net.output_dim()) {
      throw ShapeError("training sample dimensions do not match the network");
    }
  }
}

}  // namespace

Network train(Network net, std::span<const RegressionSample> data, const TrainConfig& config) {
  check_data(net, data);
  if (config.epochs < 0 || config.batch_size < 1 || !(config.learning_rate > 0.0)) {
    throw ConfigError("training needs epochs >= 0, batch_size >= 1 and a positive learning rate");
  }

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      Gradients grads(net);
      for (std::size_t i = start; i < stop; ++i) epoch_loss += backprop(net, data[order[i]], config.loss, grads);

      const double step = config.learning_rate / static_cast<double>(stop - start);
      for (int id = 0; id < net.size(); ++id) {
        Layer& l = net.mutable_layer(id);
        if (l.kind != LayerKind::kAffine) continue;
        l.weight -= step * grads.weight[id];
        l.bias -= step * grads.bias[id];
      }
    }
    if (!std::isfinite(epoch_loss)) {
      throw DivergenceError("training loss diverged in epoch " + std::to_string(epoch), epoch);
    }
  }
  return net;
}

double dataset_loss(const Network& net, std::span<const RegressionSample> data, Loss loss) {
  check_data(net, data);
  double total = 0.0;
  for (const auto& s : data) total += sample_loss(evaluate(net, s.input), s.target, loss);
  return total / static_cast<double>(data.size());
}

double classification_accuracy(const Network& net, std::span<const RegressionSample> data) {
  check_data(net, data);
  std::size_t hits = 0;
  for (const auto& s : data) hits += argmax(evaluate(net, s.input)) == argmax(s.target) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace fgprop
