#pragma once

#include "fgprop/network.hpp"

#include <nlohmann/json_fwd.hpp>

#include <memory>
#include <variant>
#include <vector>

namespace fgprop {

struct VariableNode {
  int id = 0;
  int dim = 0;
  Vector value;
};

/// Unary Gaussian factor; residual x_target - mean, whitened by cov^{-1/2}.
struct PriorFactor {
  int target = 0;
  Vector mean;
  Matrix cov;
  Matrix sqrt_information;  // L^{-1} with cov = L L^T
};

/// Residual sum_j (f(x_j) - x_out), whitened by noise^{-1/2}. With a single
/// input this is the ordinary binary between factor f(x_in) - x_out.
struct NAryBetweenFactor {
  std::vector<int> inputs;
  int output = 0;
  std::shared_ptr<const Network> network;
  Matrix noise;
  Matrix sqrt_information;
};

using Factor = std::variant<PriorFactor, NAryBetweenFactor>;

class FactorGraph {
 public:
  /// Returns the new variable's id; ids are dense and start at 0.
  int add_variable(int dim, Vector initial);

  /// Throws CovarianceError unless cov is symmetric within 1e-10 and its
  /// smallest eigenvalue exceeds 1e-12 after symmetrization.
  void add_prior_factor(int target, Vector mean, const Matrix& cov);

  void add_nary_between_factor(std::vector<int> inputs, int output, std::shared_ptr<const Network> network,
                               const Matrix& noise);

  const VariableNode& variable(int id) const;
  void set_value(int id, Vector value);

  const std::vector<VariableNode>& variables() const { return variables_; }
  const std::vector<Factor>& factors() const { return factors_; }
  int total_dim() const;

 private:
  std::vector<VariableNode> variables_;
  std::vector<Factor> factors_;
};

struct OptimizerConfig {
  int max_iters = 100;
  double abs_tol = 1e-9;   // stop when the NLL decrease falls below this
  double rel_tol = 1e-8;   // stop when ||step|| / ||x|| falls below this
  double damping_init = 1e-4;
};

struct OptimizeResult {
  bool converged = false;
  int iterations = 0;  // accepted steps
  double final_nll = 0.0;
  std::vector<double> nll_trace;  // NLL at start and after every accepted step
};

/// Whitened residual of one factor and its Jacobian blocks, one per variable
/// the factor touches (in `variables` order).
struct LinearizedFactor {
  Vector residual;
  std::vector<int> variables;
  std::vector<Matrix> blocks;
};

/// Linearizes factor `index` at the graph's current values.
LinearizedFactor linearize_factor(const FactorGraph& graph, std::size_t index);

/// Sum over factors of 0.5 * ||whitened residual||^2 (normalizers omitted).
double negative_log_likelihood(const FactorGraph& graph);

/// Levenberg-Marquardt damped Gauss-Newton on the stacked whitened residuals.
/// Every factor is relinearized at the current estimate each iteration.
/// Damping is multiplied by 10 on a rejected step and divided by 3 on an
/// accepted one; if the damped normal equations are still singular at 1e8 a
/// SingularityError is thrown.
OptimizeResult optimize(FactorGraph& graph, const OptimizerConfig& config = {});

/// Block of the inverse Gauss-Newton information matrix J^T J for one
/// variable, linearized at the graph's current values.
Matrix marginal_covariance(const FactorGraph& graph, int variable_id);

/// Debug dump of variables, factors and (optionally) the optimizer trace.
nlohmann::json graph_to_json(const FactorGraph& graph, const OptimizeResult* result = nullptr);

}  // namespace fgprop
