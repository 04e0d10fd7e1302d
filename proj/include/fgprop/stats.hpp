#pragma once

#include "fgprop/network.hpp"

#include <string>
#include <vector>

namespace fgprop {

/// Rows are trials (blocks), columns are methods. Lower scores are better.
struct ScoreTable {
  std::vector<std::string> methods;
  Matrix scores;

  int trials() const { return static_cast<int>(scores.rows()); }
  int method_count() const { return static_cast<int>(scores.cols()); }
};

struct FriedmanResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::vector<double> mean_ranks;
  bool degenerate = false;  // every row constant; statistic forced to 0
};

struct NemenyiResult {
  double q = 0.0;
  double critical_difference = 0.0;
  std::vector<double> mean_ranks;
  std::vector<std::vector<bool>> significant;  // symmetric, false on the diagonal
};

/// Ascending within-row ranks starting at 1; ties receive their average rank.
std::vector<double> rank_row(const Vector& row);

/// Friedman chi-square statistic 12n/(c(c+1)) sum_j (R_j - (c+1)/2)^2 with an
/// upper-tail chi-square p-value on c-1 degrees of freedom.
FriedmanResult friedman_test(const ScoreTable& table);

/// Critical value q_{alpha,c} (studentized range at infinite df over sqrt 2)
/// for c in 2..10 and alpha in {0.05, 0.01, 0.001}; LookupError otherwise.
double nemenyi_q(int methods, double alpha);

/// Pairs whose mean ranks differ by at least q sqrt(c(c+1)/(6n)).
NemenyiResult nemenyi_test(const ScoreTable& table, double alpha);

}  // namespace fgprop
