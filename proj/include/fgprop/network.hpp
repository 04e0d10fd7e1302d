#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace fgprop {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class LayerKind { kAffine, kRelu, kAdd };

/// Id used in Layer::inputs to refer to the network input.
inline constexpr int kNetworkInput = -1;

struct Layer {
  LayerKind kind = LayerKind::kAffine;
  int id = 0;
  std::vector<int> inputs;
  int in_dim = 0;
  int out_dim = 0;
  // Populated for kAffine only. weight is out_dim x in_dim.
  Matrix weight;
  Vector bias;
};

/// A DAG of affine, ReLU and add layers. Layers are stored in topological
/// order: a layer may only consume the network input or layers added before
/// it. The output is the most recently added layer.
class Network {
 public:
  explicit Network(int input_dim);

  int add_affine(int source, Matrix weight, Vector bias);
  int add_relu(int source);
  int add_add(int lhs, int rhs);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return dim_of(output_id()); }
  /// kNetworkInput for a network with no layers.
  int output_id() const { return layers_.empty() ? kNetworkInput : layers_.back().id; }
  int size() const { return static_cast<int>(layers_.size()); }

  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& layer(int id) const;
  Layer& mutable_layer(int id);

  /// Output dimension of a layer, or the input dimension for kNetworkInput.
  int dim_of(int id) const;

  /// Number of scalar parameters across all affine layers.
  std::size_t parameter_count() const;

 private:
  void check_source(int id) const;

  int input_dim_;
  std::vector<Layer> layers_;
};

/// Activations of every layer, indexed by layer id.
std::vector<Vector> forward(const Network& net, const Vector& x);

/// Activation of a single layer (default: the output layer).
Vector forward_to(const Network& net, const Vector& x, int target);
inline Vector evaluate(const Network& net, const Vector& x) { return forward_to(net, x, net.output_id()); }

/// Exact Jacobian of layer `target` with respect to the network input.
/// ReLU uses the indicator x > 0, so the derivative at exactly zero is 0.
Matrix jacobian(const Network& net, const Vector& x, int target);
inline Matrix jacobian(const Network& net, const Vector& x) { return jacobian(net, x, net.output_id()); }

struct NetworkLinearization {
  Vector value;
  Matrix jacobian;
};

/// Activation of `target` and its Jacobian in a single pass.
NetworkLinearization linearize(const Network& net, const Vector& x, int target);

/// Central-difference Jacobian, column j = (f(x + eps e_j) - f(x - eps e_j)) / (2 eps).
Matrix finite_diff_jacobian(const Network& net, const Vector& x, int target, double eps);

/// The sub-network ending at `target`; layers not feeding it are dropped and
/// ids are renumbered densely in the original order.
Network truncate(const Network& net, int target);

/// Network computing net(weight * z + bias) for an input z of dimension weight.cols().
Network prepend_affine(const Network& net, Matrix weight, Vector bias);

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases. Values
/// are rounded to float so a model file round-trips them exactly.
void initialize_weights(Network& net, std::uint64_t seed);

/// input -> Affine -> ReLU -> [Affine -> ReLU -> Affine -> Add(skip) -> ReLU] x blocks -> Affine.
Network make_residual_mlp(int input_dim, int hidden_dim, int blocks, int output_dim, std::uint64_t seed);

/// Plain MLP: Affine/ReLU pairs for every hidden width, then a final Affine.
Network make_mlp(int input_dim, const std::vector<int>& hidden, int output_dim, std::uint64_t seed);

}  // namespace fgprop
