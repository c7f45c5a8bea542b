#pragma once

#include <vector>

#include <Eigen/Core>

namespace typar {

// Maximum spanning arborescence rooted at node 0 by Chu-Liu/Edmonds.
// scores(h, d) scores the arc h -> d; -inf marks a forbidden arc.
// Returns the parent of every node, with parent[0] == -1.
std::vector<int> chu_liu_edmonds(const Eigen::MatrixXd& scores);

// Best tree with exactly one dependent of the root. Returns heads[i] for
// token i+1. Ties go to the lowest root candidate.
std::vector<int> decode_mst(const Eigen::MatrixXd& scores);

// Sum of scores(heads[i], i+1).
double tree_score(const Eigen::MatrixXd& scores, const std::vector<int>& heads);

}  // namespace typar
