#include "fgprop/network.hpp"

#include "fgprop/error.hpp"

#include <cmath>
#include <random>
#include <string>

namespace fgprop {

namespace {

Vector activate(const Layer& layer, const std::vector<Vector>& acts, const Vector& x) {
  auto source = [&](int id) -> const Vector& { return id == kNetworkInput ? x : acts[id]; };
  switch (layer.kind) {
    case LayerKind::kAffine:
      return layer.weight * source(layer.inputs[0]) + layer.bias;
    case LayerKind::kRelu:
      return source(layer.inputs[0]).cwiseMax(0.0);
    case LayerKind::kAdd:
      return source(layer.inputs[0]) + source(layer.inputs[1]);
  }
  return {};
}

void check_input(const Network& net, const Vector& x) {
  if (x.size() != net.input_dim()) {
    throw ShapeError("input has length " + std::to_string(x.size()) + ", network expects " +
                     std::to_string(net.input_dim()));
  }
}

void check_target(const Network& net, int target) {
  if (target != kNetworkInput && (target < 0 || target >= net.size())) {
    throw LookupError("unknown layer id " + std::to_string(target));
  }
}

}  // namespace

Network::Network(int input_dim) : input_dim_(input_dim) {
  if (input_dim < 1) throw ShapeError("network input dimension must be positive");
}

void Network::check_source(int id) const {
  if (id != kNetworkInput && (id < 0 || id >= size())) {
    throw GraphError("layer source " + std::to_string(id) + " does not precede the new layer");
  }
}

int Network::add_affine(int source, Matrix weight, Vector bias) {
  check_source(source);
  const int in = dim_of(source);
  if (weight.cols() != in) {
    throw ShapeError("affine weight has " + std::to_string(weight.cols()) + " columns, source has dim " +
                     std::to_string(in));
  }
  if (weight.rows() < 1 || bias.size() != weight.rows()) {
    throw ShapeError("affine bias length must equal weight row count");
  }
  Layer layer;
  layer.kind = LayerKind::kAffine;
  layer.id = size();
  layer.inputs = {source};
  layer.in_dim = in;
  layer.out_dim = static_cast<int>(weight.rows());
  layer.weight = std::move(weight);
  layer.bias = std::move(bias);
  layers_.push_back(std::move(layer));
  return layers_.back().id;
}

int Network::add_relu(int source) {
  check_source(source);
  Layer layer;
  layer.kind = LayerKind::kRelu;
  layer.id = size();
  layer.inputs = {source};
  layer.in_dim = layer.out_dim = dim_of(source);
  layers_.push_back(std::move(layer));
  return layers_.back().id;
}

int Network::add_add(int lhs, int rhs) {
  check_source(lhs);
  check_source(rhs);
  if (dim_of(lhs) != dim_of(rhs)) throw ShapeError("add layer inputs differ in dimension");
  Layer layer;
  layer.kind = LayerKind::kAdd;
  layer.id = size();
  layer.inputs = {lhs, rhs};
  layer.in_dim = layer.out_dim = dim_of(lhs);
  layers_.push_back(std::move(layer));
  return layers_.back().id;
}

const Layer& Network::layer(int id) const {
  if (id < 0 || id >= size()) throw LookupError("unknown layer id " + std::to_string(id));
  return layers_[id];
}

Layer& Network::mutable_layer(int id) {
  if (id < 0 || id >= size()) throw LookupError("unknown layer id " + std::to_string(id));
  return layers_[id];
}

int Network::dim_of(int id) const { return id == kNetworkInput ? input_dim_ : layer(id).out_dim; }

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    if (l.kind == LayerKind::kAffine) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  }
  return n;
}

std::vector<Vector> forward(const Network& net, const Vector& x) {
  check_input(net, x);
  std::vector<Vector> acts;
  acts.reserve(net.layers().size());
  for (const auto& layer : net.layers()) acts.push_back(activate(layer, acts, x));
  return acts;
}

Vector forward_to(const Network& net, const Vector& x, int target) {
  check_input(net, x);
  check_target(net, target);
  if (target == kNetworkInput) return x;
  std::vector<Vector> acts;
  acts.reserve(target + 1);
  for (int id = 0; id <= target; ++id) acts.push_back(activate(net.layers()[id], acts, x));
  return acts.back();
}

Matrix jacobian(const Network& net, const Vector& x, int target) { return linearize(net, x, target).jacobian; }

NetworkLinearization linearize(const Network& net, const Vector& x, int target) {
  check_input(net, x);
  check_target(net, target);
  const int n = net.input_dim();
  if (target == kNetworkInput) return {x, Matrix::Identity(n, n)};

  // Only ancestors of the target contribute.
  std::vector<char> needed(target + 1, 0);
  needed[target] = 1;
  for (int id = target; id >= 0; --id) {
    if (!needed[id]) continue;
    for (int src : net.layers()[id].inputs) {
      if (src != kNetworkInput) needed[src] = 1;
    }
  }

  const Matrix identity = Matrix::Identity(n, n);
  std::vector<Vector> acts(target + 1);
  std::vector<Matrix> jac(target + 1);
  auto grad = [&](int id) -> const Matrix& { return id == kNetworkInput ? identity : jac[id]; };
  auto value = [&](int id) -> const Vector& { return id == kNetworkInput ? x : acts[id]; };

  for (int id = 0; id <= target; ++id) {
    if (!needed[id]) continue;
    const Layer& layer = net.layers()[id];
    switch (layer.kind) {
      case LayerKind::kAffine:
        acts[id] = layer.weight * value(layer.inputs[0]) + layer.bias;
        jac[id] = layer.weight * grad(layer.inputs[0]);
        break;
      case LayerKind::kRelu: {
        const Vector& in = value(layer.inputs[0]);
        acts[id] = in.cwiseMax(0.0);
        const Vector mask = (in.array() > 0.0).cast<double>().matrix();
        jac[id] = mask.asDiagonal() * grad(layer.inputs[0]);
        break;
      }
      case LayerKind::kAdd:
        acts[id] = value(layer.inputs[0]) + value(layer.inputs[1]);
        jac[id] = grad(layer.inputs[0]) + grad(layer.inputs[1]);
        break;
    }
  }
  return {std::move(acts[target]), std::move(jac[target])};
}

Matrix finite_diff_jacobian(const Network& net, const Vector& x, int target, double eps) {
  if (!(eps > 0.0)) throw ConfigError("finite difference step must be positive");
  const int n = net.input_dim();
  Matrix out(net.dim_of(target), n);
  Vector probe = x;
  for (int j = 0; j < n; ++j) {
    probe[j] = x[j] + eps;
    const Vector plus = forward_to(net, probe, target);
    probe[j] = x[j] - eps;
    const Vector minus = forward_to(net, probe, target);
    probe[j] = x[j];
    out.col(j) = (plus - minus) / (2.0 * eps);
  }
  return out;
}

Network truncate(const Network& net, int target) {
  if (target != kNetworkInput && (target < 0 || target >= net.size())) {
    throw GraphError("layer " + std::to_string(target) + " is not reachable from the network input");
  }
  Network out(net.input_dim());
  if (target == kNetworkInput) return out;

  std::vector<char> keep(target + 1, 0);
  keep[target] = 1;
  for (int id = target; id >= 0; --id) {
    if (!keep[id]) continue;
    for (int src : net.layers()[id].inputs) {
      if (src != kNetworkInput) keep[src] = 1;
    }
  }

  std::vector<int> remap(target + 1, kNetworkInput);
  auto mapped = [&](int id) { return id == kNetworkInput ? kNetworkInput : remap[id]; };
  for (int id = 0; id <= target; ++id) {
    if (!keep[id]) continue;
    const Layer& layer = net.layers()[id];
    switch (layer.kind) {
      case LayerKind::kAffine:
        remap[id] = out.add_affine(mapped(layer.inputs[0]), layer.weight, layer.bias);
        break;
      case LayerKind::kRelu:
        remap[id] = out.add_relu(mapped(layer.inputs[0]));
        break;
      case LayerKind::kAdd:
        remap[id] = out.add_add(mapped(layer.inputs[0]), mapped(layer.inputs[1]));
        break;
    }
  }
  return out;
}

Network prepend_affine(const Network& net, Matrix weight, Vector bias) {
  if (weight.rows() != net.input_dim()) throw ShapeError("prepended map must produce the network input dimension");
  Network out(static_cast<int>(weight.cols()));
  const int head = out.add_affine(kNetworkInput, std::move(weight), std::move(bias));
  auto mapped = [&](int id) { return id == kNetworkInput ? head : id + 1; };
  for (const auto& layer : net.layers()) {
    switch (layer.kind) {
      case LayerKind::kAffine:
        out.add_affine(mapped(layer.inputs[0]), layer.weight, layer.bias);
        break;
      case LayerKind::kRelu:
        out.add_relu(mapped(layer.inputs[0]));
        break;
      case LayerKind::kAdd:
        out.add_add(mapped(layer.inputs[0]), mapped(layer.inputs[1]));
        break;
    }
  }
  return out;
}

void initialize_weights(Network& net, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int id = 0; id < net.size(); ++id) {
    Layer& layer = net.mutable_layer(id);
    if (layer.kind != LayerKind::kAffine) continue;
    const double limit = std::sqrt(6.0 / (layer.in_dim + layer.out_dim));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
      layer.weight.data()[i] = static_cast<double>(static_cast<float>(dist(rng)));
    }
    layer.bias.setZero();
  }
}

Network make_residual_mlp(int input_dim, int hidden_dim, int blocks, int output_dim, std::uint64_t seed) {
  Network net(input_dim);
  auto affine = [&](int src, int out) {
    return net.add_affine(src, Matrix::Zero(out, net.dim_of(src)), Vector::Zero(out));
  };
  int h = net.add_relu(affine(kNetworkInput, hidden_dim));
  for (int b = 0; b < blocks; ++b) {
    const int inner = net.add_relu(affine(h, hidden_dim));
    const int branch = affine(inner, hidden_dim);
    h = net.add_relu(net.add_add(branch, h));
  }
  affine(h, output_dim);
  initialize_weights(net, seed);
  return net;
}

Network make_mlp(int input_dim, const std::vector<int>& hidden, int output_dim, std::uint64_t seed) {
  Network net(input_dim);
  int h = kNetworkInput;
  for (int width : hidden) {
    h = net.add_affine(h, Matrix::Zero(width, net.dim_of(h)), Vector::Zero(width));
    h = net.add_relu(h);
  }
  net.add_affine(h, Matrix::Zero(output_dim, net.dim_of(h)), Vector::Zero(output_dim));
  initialize_weights(net, seed);
  return net;
}

}  // namespace fgprop
