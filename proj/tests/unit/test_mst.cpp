#include <doctest.h>

#include <limits>
#include <random>

#include "brute_force.hpp"
#include "typar/biaffine.hpp"
#include "typar/conllu.hpp"
#include "typar/mst.hpp"

using namespace typar;

namespace {

Eigen::MatrixXd random_scores(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> dist(0, 3);
  Matrix<double> raw(n + 1, n + 1);
  for (Eigen::Index i = 0; i < raw.size(); ++i) raw.data()[i] = dist(rng);
  return arc_score_matrix(raw);
}

}  // namespace

TEST_CASE("trivial sizes") {
  CHECK(decode_mst(Eigen::MatrixXd::Zero(1, 1)).empty());
  Matrix<double> raw = Matrix<double>::Zero(2, 2);
  CHECK(decode_mst(arc_score_matrix(raw)) == std::vector<int>{0});
}

TEST_CASE("greedy cycle is resolved to the exhaustive optimum") {
  Matrix<double> raw = Matrix<double>::Zero(4, 4);
  // raw(h, d)
  raw(0, 1) = 1;  raw(2, 1) = 10; raw(3, 1) = 0;
  raw(0, 2) = 2;  raw(1, 2) = 10; raw(3, 2) = 0;
  raw(0, 3) = 5;  raw(1, 3) = 1;  raw(2, 3) = 0;
  auto s = arc_score_matrix(raw);
  // greedy per-dependent argmax: 1 <- 2, 2 <- 1 forms a cycle
  std::vector<int> greedy;
  for (int d = 1; d <= 3; ++d) {
    int best = 0;
    for (int h = 1; h <= 3; ++h)
      if (s(h, d) > s(best, d)) best = h;
    greedy.push_back(best);
  }
  CHECK(greedy == std::vector<int>{2, 1, 0});
  CHECK_FALSE(validate_heads(greedy).ok());

  double oracle_score = 0;
  auto oracle = testing::brute_force_best_tree(s, &oracle_score);
  auto heads = decode_mst(s);
  CHECK(heads != greedy);
  CHECK(heads == oracle);
  CHECK(tree_score(s, heads) == oracle_score);
  CHECK(validate_heads(heads).ok());
}

TEST_CASE("decode_mst equals brute force on random matrices") {
  std::mt19937_64 rng(99);
  for (int n = 2; n <= 5; ++n) {
    int mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
      auto s = random_scores(rng, n);
      double best = 0;
      auto oracle = testing::brute_force_best_tree(s, &best);
      auto heads = decode_mst(s);
      REQUIRE(validate_heads(heads).ok());
      if (heads != oracle || std::abs(tree_score(s, heads) - best) > 1e-9) ++mismatches;
    }
    INFO("n=" << n);
    CHECK(mismatches == 0);
  }
}

TEST_CASE("adding a constant to every legal arc leaves the tree unchanged") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 6;
    auto s = random_scores(rng, n);
    Eigen::MatrixXd shifted = s.array() + 7.5;  // -inf stays -inf
    auto a = decode_mst(s);
    auto b = decode_mst(shifted);
    CHECK(a == b);
    CHECK(std::abs(tree_score(shifted, b) - tree_score(s, a) - n * 7.5) < 1e-9);
  }
}

TEST_CASE("decoded trees are valid for longer sentences") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    auto s = random_scores(rng, 10 + trial);
    CHECK(validate_heads(decode_mst(s)).ok());
  }
}
