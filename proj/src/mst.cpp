#include "typar/mst.hpp"

#include <limits>

#include "typar/error.hpp"

namespace typar {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Returns the nodes of one cycle in the parent graph, or empty.
std::vector<int> find_cycle(const std::vector<int>& parent) {
  const int n = static_cast<int>(parent.size());
  std::vector<int> color(n, 0);  // 0 new, 1 on stack, 2 done
  color[0] = 2;
  for (int start = 1; start < n; ++start) {
    if (color[start]) continue;
    std::vector<int> path;
    int v = start;
    while (color[v] == 0) {
      color[v] = 1;
      path.push_back(v);
      v = parent[v];
    }
    if (color[v] == 1) {
      std::vector<int> cycle{v};
      for (int u = parent[v]; u != v; u = parent[u]) cycle.push_back(u);
      return cycle;
    }
    for (int p : path) color[p] = 2;
  }
  return {};
}

}  // namespace

std::vector<int> chu_liu_edmonds(const Eigen::MatrixXd& w) {
  const int n = static_cast<int>(w.rows());
  std::vector<int> parent(n, -1);
  for (int v = 1; v < n; ++v) {
    int best = -1;
    for (int u = 0; u < n; ++u) {
      if (u == v || w(u, v) == kNegInf) continue;
      if (best < 0 || w(u, v) > w(best, v)) best = u;
    }
    if (best < 0) throw InvariantError("chu_liu_edmonds: node " + std::to_string(v) + " has no admissible head");
    parent[v] = best;
  }
  auto cycle = find_cycle(parent);
  if (cycle.empty()) return parent;

  std::vector<char> in_cycle(n, 0);
  for (int v : cycle) in_cycle[v] = 1;
  std::vector<int> to_new(n, -1), to_old;
  for (int v = 0; v < n; ++v)
    if (!in_cycle[v]) {
      to_new[v] = static_cast<int>(to_old.size());
      to_old.push_back(v);
    }
  const int c = static_cast<int>(to_old.size());
  const int m = c + 1;

  Eigen::MatrixXd sub = Eigen::MatrixXd::Constant(m, m, kNegInf);
  std::vector<int> enter(n, -1);  // for u outside: cycle node the best arc u -> C lands on
  std::vector<int> leave(n, -1);  // for x outside: cycle node the best arc C -> x starts from
  for (int u = 0; u < n; ++u) {
    if (in_cycle[u]) continue;
    for (int x = 0; x < n; ++x)
      if (!in_cycle[x]) sub(to_new[u], to_new[x]) = w(u, x);
    double best = kNegInf;
    for (int v : cycle) {
      if (w(u, v) == kNegInf) continue;
      double s = w(u, v) - w(parent[v], v);
      if (enter[u] < 0 || s > best || (s == best && v < enter[u])) {
        best = s;
        enter[u] = v;
      }
    }
    sub(to_new[u], c) = best;
  }
  for (int x = 1; x < n; ++x) {
    if (in_cycle[x]) continue;
    double best = kNegInf;
    for (int v : cycle) {
      if (w(v, x) == kNegInf) continue;
      if (leave[x] < 0 || w(v, x) > best || (w(v, x) == best && v < leave[x])) {
        best = w(v, x);
        leave[x] = v;
      }
    }
    sub(c, to_new[x]) = best;
  }

  auto sub_parent = chu_liu_edmonds(sub);
  std::vector<int> out = parent;
  for (int x = 1; x < n; ++x) {
    if (in_cycle[x]) continue;
    int p = sub_parent[to_new[x]];
    out[x] = p == c ? leave[x] : to_old[p];
  }
  const int u = to_old[sub_parent[c]];
  out[enter[u]] = u;
  return out;
}

double tree_score(const Eigen::MatrixXd& scores, const std::vector<int>& heads) {
  double total = 0;
  for (std::size_t i = 0; i < heads.size(); ++i) total += scores(heads[i], static_cast<Eigen::Index>(i + 1));
  return total;
}

std::vector<int> decode_mst(const Eigen::MatrixXd& scores) {
  const int n = static_cast<int>(scores.rows()) - 1;
  if (n <= 0) return {};
  if (scores.cols() != n + 1) throw InvariantError("decode_mst: score matrix must be square");

  auto strip = [](const std::vector<int>& parent) { return std::vector<int>(parent.begin() + 1, parent.end()); };
  auto free_tree = strip(chu_liu_edmonds(scores));
  int root_children = 0;
  for (int h : free_tree) root_children += h == 0;
  if (root_children == 1) return free_tree;

  std::vector<int> best;
  double best_score = kNegInf;
  for (int k = 1; k <= n; ++k) {
    if (scores(0, k) == kNegInf) continue;
    Eigen::MatrixXd forced = scores;
    for (int j = 1; j <= n; ++j)
      if (j != k) forced(0, j) = kNegInf;
    auto heads = strip(chu_liu_edmonds(forced));
    const double s = tree_score(scores, heads);
    if (best.empty() || s > best_score) {
      best = std::move(heads);
      best_score = s;
    }
  }
  if (best.empty()) throw InvariantError("decode_mst: no arc leaves the root");
  return best;
}

}  // namespace typar
