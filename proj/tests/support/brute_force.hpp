#pragma once

#include <limits>
#include <vector>

#include <Eigen/Core>

namespace typar::testing {

// Exhaustive maximum over all single-root dependency trees on n tokens.
// Returns the best heads (first found on ties, in lexicographic enumeration).
inline std::vector<int> brute_force_best_tree(const Eigen::MatrixXd& scores, double* best_score = nullptr) {
  const int n = static_cast<int>(scores.rows()) - 1;
  std::vector<int> heads(n, 0), best;
  double best_total = -std::numeric_limits<double>::infinity();
  while (true) {
    int roots = 0;
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      if (heads[i] == i + 1) ok = false;
      roots += heads[i] == 0;
    }
    if (ok && roots == 1) {
      for (int i = 1; i <= n && ok; ++i) {
        int cur = i, steps = 0;
        while (cur != 0 && steps <= n) {
          cur = heads[cur - 1];
          ++steps;
        }
        ok = cur == 0;
      }
      if (ok) {
        double total = 0;
        for (int i = 0; i < n; ++i) total += scores(heads[i], i + 1);
        if (best.empty() || total > best_total) {
          best_total = total;
          best = heads;
        }
      }
    }
    int k = 0;
    while (k < n && ++heads[k] > n) heads[k++] = 0;
    if (k == n) break;
  }
  if (best_score) *best_score = best_total;
  return best;
}

}  // namespace typar::testing
