#include "fgprop/factor_graph.hpp"

#include "fgprop/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace fgprop {

namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kMinEigenvalue = 1e-12;
constexpr double kMaxDamping = 1e8;

// Validates an SPD covariance and returns L^{-1} where cov = L L^T.
Matrix whitening_for(const Matrix& cov, int dim, const char* what) {
  if (cov.rows() != dim || cov.cols() != dim) {
    throw ShapeError(std::string(what) + " covariance must be " + std::to_string(dim) + "x" + std::to_string(dim));
  }
  if (!cov.allFinite()) throw CovarianceError(std::string(what) + " covariance has non-finite entries");
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    throw CovarianceError(std::string(what) + " covariance is not symmetric");
  }
  const Matrix sym = 0.5 * (cov + cov.transpose());
  const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  if (!(min_eig > kMinEigenvalue)) {
    throw CovarianceError(std::string(what) + " covariance is not positive definite (min eigenvalue " +
                          std::to_string(min_eig) + ")");
  }
  const Eigen::LLT<Matrix> llt(sym);
  return llt.matrixL().solve(Matrix::Identity(dim, dim));
}

using FactorLinearization = LinearizedFactor;

FactorLinearization linearize_factor(const FactorGraph& graph, const PriorFactor& f, bool with_jacobian) {
  FactorLinearization out;
  out.residual = f.sqrt_information * (graph.variable(f.target).value - f.mean);
  if (with_jacobian) {
    out.variables = {f.target};
    out.blocks = {f.sqrt_information};
  }
  return out;
}

FactorLinearization linearize_factor(const FactorGraph& graph, const NAryBetweenFactor& f, bool with_jacobian) {
  FactorLinearization out;
  const Vector& x_out = graph.variable(f.output).value;
  Vector raw = -static_cast<double>(f.inputs.size()) * x_out;
  for (int id : f.inputs) {
    const Vector& x = graph.variable(id).value;
    if (with_jacobian) {
      auto lin = linearize(*f.network, x, f.network->output_id());
      raw += lin.value;
      out.variables.push_back(id);
      out.blocks.push_back(f.sqrt_information * lin.jacobian);
    } else {
      raw += evaluate(*f.network, x);
    }
  }
  out.residual = f.sqrt_information * raw;
  if (with_jacobian) {
    out.variables.push_back(f.output);
    out.blocks.push_back(-static_cast<double>(f.inputs.size()) * f.sqrt_information);
  }
  return out;
}

FactorLinearization linearize_any(const FactorGraph& graph, const Factor& factor, bool with_jacobian) {
  return std::visit([&](const auto& f) { return linearize_factor(graph, f, with_jacobian); }, factor);
}

std::vector<int> offsets_of(const FactorGraph& graph) {
  std::vector<int> offsets;
  int offset = 0;
  for (const auto& v : graph.variables()) {
    offsets.push_back(offset);
    offset += v.dim;
  }
  return offsets;
}

// Gauss-Newton information matrix J^T J and gradient J^T r over all factors.
struct NormalEquations {
  Matrix information;
  Vector gradient;
};

NormalEquations build_normal_equations(const FactorGraph& graph, const std::vector<int>& offsets) {
  const int n = graph.total_dim();
  NormalEquations eq{Matrix::Zero(n, n), Vector::Zero(n)};
  for (const auto& factor : graph.factors()) {
    const auto lin = linearize_any(graph, factor, true);
    if (!lin.residual.allFinite()) throw NumericError("factor residual is not finite");
    for (std::size_t a = 0; a < lin.variables.size(); ++a) {
      const int ia = offsets[lin.variables[a]];
      const auto& ja = lin.blocks[a];
      eq.gradient.segment(ia, ja.cols()) += ja.transpose() * lin.residual;
      for (std::size_t b = a; b < lin.variables.size(); ++b) {
        const int ib = offsets[lin.variables[b]];
        const auto& jb = lin.blocks[b];
        const Matrix block = ja.transpose() * jb;
        eq.information.block(ia, ib, ja.cols(), jb.cols()) += block;
        if (a != b) {
          eq.information.block(ib, ia, jb.cols(), ja.cols()) += block.transpose();
        }
      }
    }
  }
  return eq;
}

Vector stacked_values(const FactorGraph& graph) {
  Vector x(graph.total_dim());
  int offset = 0;
  for (const auto& v : graph.variables()) {
    x.segment(offset, v.dim) = v.value;
    offset += v.dim;
  }
  return x;
}

void assign_values(FactorGraph& graph, const Vector& x) {
  int offset = 0;
  for (const auto& v : graph.variables()) {
    graph.set_value(v.id, x.segment(offset, v.dim));
    offset += v.dim;
  }
}

}  // namespace

int FactorGraph::add_variable(int dim, Vector initial) {
  if (dim < 1) throw ShapeError("variable dimension must be at least 1");
  if (initial.size() != dim) throw ShapeError("initial value length does not match variable dimension");
  const int id = static_cast<int>(variables_.size());
  variables_.push_back({id, dim, std::move(initial)});
  return id;
}

void FactorGraph::add_prior_factor(int target, Vector mean, const Matrix& cov) {
  const int dim = variable(target).dim;
  if (mean.size() != dim) throw ShapeError("prior mean length does not match its variable");
  PriorFactor f;
  f.target = target;
  f.sqrt_information = whitening_for(cov, dim, "prior");
  f.mean = std::move(mean);
  f.cov = 0.5 * (cov + cov.transpose());
  factors_.emplace_back(std::move(f));
}

void FactorGraph::add_nary_between_factor(std::vector<int> inputs, int output, std::shared_ptr<const Network> network,
                                          const Matrix& noise) {
  if (inputs.empty()) throw ShapeError("between factor needs at least one input variable");
  if (!network) throw ConfigError("between factor needs a network");
  for (int id : inputs) {
    if (variable(id).dim != network->input_dim()) throw ShapeError("between factor input dim differs from network");
  }
  const int out_dim = variable(output).dim;
  if (out_dim != network->output_dim()) throw ShapeError("between factor output dim differs from network");
  NAryBetweenFactor f;
  f.sqrt_information = whitening_for(noise, out_dim, "between factor");
  f.inputs = std::move(inputs);
  f.output = output;
  f.network = std::move(network);
  f.noise = 0.5 * (noise + noise.transpose());
  factors_.emplace_back(std::move(f));
}

const VariableNode& FactorGraph::variable(int id) const {
  if (id < 0 || id >= static_cast<int>(variables_.size())) {
    throw LookupError("unknown variable id " + std::to_string(id));
  }
  return variables_[id];
}

void FactorGraph::set_value(int id, Vector value) {
  if (value.size() != variable(id).dim) throw ShapeError("value length does not match variable dimension");
  variables_[id].value = std::move(value);
}

int FactorGraph::total_dim() const {
  int n = 0;
  for (const auto& v : variables_) n += v.dim;
  return n;
}

LinearizedFactor linearize_factor(const FactorGraph& graph, std::size_t index) {
  if (index >= graph.factors().size()) throw LookupError("unknown factor index " + std::to_string(index));
  return linearize_any(graph, graph.factors()[index], true);
}

double negative_log_likelihood(const FactorGraph& graph) {
  double total = 0.0;
  for (const auto& factor : graph.factors()) total += 0.5 * linearize_any(graph, factor, false).residual.squaredNorm();
  return total;
}

OptimizeResult optimize(FactorGraph& graph, const OptimizerConfig& config) {
  if (config.max_iters < 0 || config.abs_tol < 0.0 || config.rel_tol < 0.0 || config.damping_init < 0.0) {
    throw ConfigError("optimizer tolerances, damping and iteration limit must be non-negative");
  }
  OptimizeResult result;
  const auto offsets = offsets_of(graph);
  double nll = negative_log_likelihood(graph);
  if (!std::isfinite(nll)) throw NumericError("initial negative log likelihood is not finite");
  result.nll_trace.push_back(nll);

  double damping = config.damping_init;
  for (int outer = 0; outer < config.max_iters && !result.converged; ++outer) {
    const auto eq = build_normal_equations(graph, offsets);
    const Vector x = stacked_values(graph);

    bool accepted = false;
    while (!accepted) {
      Matrix damped = eq.information;
      damped.diagonal().array() += damping;
      const Eigen::LLT<Matrix> llt(damped);
      Vector step;
      if (llt.info() == Eigen::Success) step = llt.solve(-eq.gradient);
      if (llt.info() != Eigen::Success || !step.allFinite()) {
        damping = damping > 0.0 ? damping * 10.0 : config.damping_init > 0.0 ? config.damping_init : 1e-4;
        if (damping > kMaxDamping) throw SingularityError("normal equations singular after damping escalation");
        continue;
      }

      if (step.norm() <= config.rel_tol * (x.norm() + config.rel_tol)) {
        result.converged = true;
        break;
      }

      assign_values(graph, x + step);
      const double candidate = negative_log_likelihood(graph);
      if (std::isfinite(candidate) && candidate <= nll) {
        accepted = true;
        ++result.iterations;
        const double decrease = nll - candidate;
        nll = candidate;
        result.nll_trace.push_back(nll);
        damping /= 3.0;
        if (decrease < config.abs_tol) result.converged = true;
      } else {
        assign_values(graph, x);
        damping = damping > 0.0 ? damping * 10.0 : 1e-4;
        if (damping > kMaxDamping) {
          // No damped step lowers the NLL: the estimate is a local minimum to
          // working precision.
          result.converged = true;
          break;
        }
      }
    }
  }
  result.final_nll = nll;
  return result;
}

Matrix marginal_covariance(const FactorGraph& graph, int variable_id) {
  const auto& target = graph.variable(variable_id);
  const auto offsets = offsets_of(graph);
  const auto eq = build_normal_equations(graph, offsets);
  const Eigen::LLT<Matrix> llt(eq.information);
  if (llt.info() != Eigen::Success) {
    throw SingularityError("information matrix is singular; variable " + std::to_string(variable_id) +
                           " is not identifiable");
  }
  const int n = graph.total_dim();
  Matrix selector = Matrix::Zero(n, target.dim);
  selector.block(offsets[variable_id], 0, target.dim, target.dim).setIdentity();
  const Matrix columns = llt.solve(selector);
  const Matrix block = columns.block(offsets[variable_id], 0, target.dim, target.dim);
  if (!block.allFinite()) throw SingularityError("marginal covariance is not finite");
  return 0.5 * (block + block.transpose());
}

nlohmann::json graph_to_json(const FactorGraph& graph, const OptimizeResult* result) {
  using nlohmann::json;
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json vars = json::array();
  for (const auto& v : graph.variables()) vars.push_back({{"id", v.id}, {"dim", v.dim}, {"value", vec(v.value)}});
  json factors = json::array();
  for (const auto& factor : graph.factors()) {
    std::visit(
        [&](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, PriorFactor>) {
            factors.push_back({{"type", "prior"}, {"target", f.target}, {"mean", vec(f.mean)}});
          } else {
            factors.push_back({{"type", "nary_between"},
                               {"inputs", f.inputs},
                               {"output", f.output},
                               {"network_layers", f.network->size()}});
          }
        },
        factor);
  }
  json out = {{"variables", vars}, {"factors", factors}, {"nll", negative_log_likelihood(graph)}};
  if (result) {
    out["optimizer"] = {{"converged", result->converged},
                        {"iterations", result->iterations},
                        {"final_nll", result->final_nll},
                        {"nll_trace", result->nll_trace}};
  }
  return out;
}

}  // namespace fgprop
