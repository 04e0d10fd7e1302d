#include "fgprop/stats.hpp"

#include "fgprop/error.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace fgprop {

namespace {

void validate(const ScoreTable& table) {
  if (table.trials() < 2 || table.method_count() < 2) {
    throw ConfigError("score table needs at least 2 trials and 2 methods");
  }
  if (!table.methods.empty() && static_cast<int>(table.methods.size()) != table.method_count()) {
    throw ShapeError("score table method names do not match its columns");
  }
  if (!table.scores.allFinite()) throw ConfigError("score table contains non-finite entries");
}

std::vector<double> mean_ranks(const ScoreTable& table) {
  std::vector<double> sums(table.method_count(), 0.0);
  for (int r = 0; r < table.trials(); ++r) {
    const auto ranks = rank_row(table.scores.row(r).transpose());
    for (int c = 0; c < table.method_count(); ++c) sums[c] += ranks[c];
  }
  for (double& s : sums) s /= table.trials();
  return sums;
}

// Studentized range quantiles at infinite degrees of freedom divided by
// sqrt(2), for 2..10 groups.
constexpr std::array<double, 9> kQ05 = {1.959964, 2.343701, 2.569032, 2.727774, 2.849705,
                                        2.948320, 3.030878, 3.101730, 3.163684};
constexpr std::array<double, 9> kQ01 = {2.575829, 2.913494, 3.113250, 3.254686, 3.363740,
                                        3.452213, 3.526471, 3.590339, 3.646292};
constexpr std::array<double, 9> kQ001 = {3.290527, 3.580402, 3.753891, 3.877599, 3.973468,
                                         4.051548, 4.117291, 4.173985, 4.223766};

}  // namespace

std::vector<double> rank_row(const Vector& row) {
  const auto n = static_cast<std::size_t>(row.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && row[order[j + 1]] == row[order[i]]) ++j;
    const double average = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = average;
    i = j + 1;
  }
  return ranks;
}

FriedmanResult friedman_test(const ScoreTable& table) {
  validate(table);
  const double n = table.trials();
  const double c = table.method_count();
  FriedmanResult out;
  out.mean_ranks = mean_ranks(table);

  bool all_constant = true;
  for (int r = 0; r < table.trials() && all_constant; ++r) {
    all_constant = table.scores.row(r).maxCoeff() == table.scores.row(r).minCoeff();
  }
  if (all_constant) {
    out.degenerate = true;
    return out;
  }

  double spread = 0.0;
  for (double rank : out.mean_ranks) spread += (rank - 0.5 * (c + 1.0)) * (rank - 0.5 * (c + 1.0));
  out.statistic = 12.0 * n / (c * (c + 1.0)) * spread;
  // Upper tail of chi-square with c-1 dof: Q((c-1)/2, x/2).
  out.p_value = out.statistic > 0.0 ? boost::math::gamma_q(0.5 * (c - 1.0), 0.5 * out.statistic) : 1.0;
  return out;
}

double nemenyi_q(int methods, double alpha) {
  if (methods < 2 || methods > 10) throw LookupError("Nemenyi table covers 2..10 methods");
  const auto idx = static_cast<std::size_t>(methods - 2);
  if (std::abs(alpha - 0.05) < 1e-12) return kQ05[idx];
  if (std::abs(alpha - 0.01) < 1e-12) return kQ01[idx];
  if (std::abs(alpha - 0.001) < 1e-12) return kQ001[idx];
  throw LookupError("Nemenyi table covers alpha in {0.05, 0.01, 0.001}");
}

NemenyiResult nemenyi_test(const ScoreTable& table, double alpha) {
  validate(table);
  const int c = table.method_count();
  NemenyiResult out;
  out.q = nemenyi_q(c, alpha);
  out.critical_difference = out.q * std::sqrt(c * (c + 1.0) / (6.0 * table.trials()));
  out.mean_ranks = mean_ranks(table);
  out.significant.assign(c, std::vector<bool>(c, false));
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < c; ++j) {
      if (i != j) out.significant[i][j] = std::abs(out.mean_ranks[i] - out.mean_ranks[j]) >= out.critical_difference;
    }
  }
  return out;
}

}  // namespace fgprop
