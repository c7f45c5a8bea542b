#include "typar/biaffine.hpp"

#include <cmath>
#include <limits>

#include "typar/ops.hpp"

namespace typar {

ParamLayout biaffine_layout(const BiaffineDims& dims) {
  const int d = dims.hidden, a = dims.arc, t = dims.tag, k = dims.labels;
  const double sd = 1.0 / std::sqrt(double(d));
  ParamLayout layout;
  layout.add("arc_head.w", d, a, Init::normal, sd);
  layout.add("arc_head.b", 1, a);
  layout.add("arc_tail.w", d, a, Init::normal, sd);
  layout.add("arc_tail.b", 1, a);
  layout.add("U_arc", a, a);
  layout.add("u_arc", a, 1);
  layout.add("label_head.w", d, t, Init::normal, sd);
  layout.add("label_head.b", 1, t);
  layout.add("label_tail.w", d, t, Init::normal, sd);
  layout.add("label_tail.b", 1, t);
  layout.add("U_rel", t, k * t);
  layout.add("W_rel", 2 * t, k);
  layout.add("b_rel", 1, k);
  return layout;
}

template <class S>
BiaffineVars<S> unflatten_biaffine(const Var<S>& flat, const BiaffineDims& dims) {
  auto v = biaffine_layout(dims).unflatten(flat);
  BiaffineVars<S> p;
  p.dims = dims;
  p.arc_head_w = v[0];
  p.arc_head_b = v[1];
  p.arc_tail_w = v[2];
  p.arc_tail_b = v[3];
  p.u_arc = v[4];
  p.u_arc_bias = v[5];
  p.label_head_w = v[6];
  p.label_head_b = v[7];
  p.label_tail_w = v[8];
  p.label_tail_b = v[9];
  p.u_rel = v[10];
  p.w_rel = v[11];
  p.b_rel = v[12];
  return p;
}

template <class S>
Var<S> project(const Var<S>& r, Projection which, const BiaffineVars<S>& p, double drop, Rng* rng) {
  const Var<S>* w = nullptr;
  const Var<S>* b = nullptr;
  switch (which) {
    case Projection::arc_head: w = &p.arc_head_w; b = &p.arc_head_b; break;
    case Projection::arc_tail: w = &p.arc_tail_w; b = &p.arc_tail_b; break;
    case Projection::label_head: w = &p.label_head_w; b = &p.label_head_b; break;
    case Projection::label_tail: w = &p.label_tail_w; b = &p.label_tail_b; break;
  }
  auto h = relu(add_row(matmul(r, *w), *b));
  if (rng && drop > 0) h = dropout(h, drop, *rng);
  return h;
}

template <class S>
Var<S> score_arcs(const Var<S>& h_head, const Var<S>& h_tail, const BiaffineVars<S>& p) {
  auto scores = matmul_nt(matmul(h_head, p.u_arc), h_tail);
  return add_col(scores, matmul(h_head, p.u_arc_bias));
}

template <class S>
ScoreMatrix arc_score_matrix(const Matrix<S>& raw) {
  ScoreMatrix s = raw.template cast<double>();
  const double ninf = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    s(i, i) = ninf;
    s(i, 0) = ninf;
  }
  return s;
}

template <class S>
Var<S> score_labels(const Var<S>& h_label_head, const Var<S>& h_label_tail, std::span<const int> heads,
                    const BiaffineVars<S>& p) {
  const int n = static_cast<int>(heads.size());
  if (h_label_head.rows() != n + 1 || h_label_tail.rows() != n + 1)
    throw InvariantError("score_labels: representation rows do not match " + std::to_string(n) + " heads");
  for (int h : heads)
    if (h < 0 || h > n) throw InvariantError("score_labels: head index " + std::to_string(h) + " out of range");
  auto hh = gather_rows(h_label_head, std::vector<int>(heads.begin(), heads.end()));
  auto ht = slice_rows(h_label_tail, 1, n);
  auto bilinear = block_row_dot(matmul(hh, p.u_rel), ht);
  std::vector<Var<S>> pair{hh, ht};
  auto linear = matmul(concat_cols<S>(pair), p.w_rel);
  return add_row(add(bilinear, linear), p.b_rel);
}

template <class S>
Var<S> parse_loss(const Var<S>& arc_scores, const Var<S>& label_scores, std::span<const int> heads,
                  std::span<const int> labels, double eps_arc, double eps_label) {
  const Eigen::Index n = static_cast<Eigen::Index>(heads.size());
  const Eigen::Index k = label_scores.cols();
  if (n == 0) throw InvariantError("parse_loss: empty sentence");
  if (arc_scores.rows() != n + 1 || arc_scores.cols() != n + 1 || label_scores.rows() != n ||
      static_cast<Eigen::Index>(labels.size()) != n)
    throw InvariantError("parse_loss: shape mismatch");

  // rows = dependents 1..n, columns = candidate heads 0..n
  auto logits = slice_rows(transpose(arc_scores), 1, n);
  Mask mask = Mask::Constant(n, n + 1, false);
  Matrix<S> head_target = Matrix<S>::Zero(n, n + 1);
  const S arc_uniform = S(eps_arc / double(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    mask(i, i + 1) = true;
    for (Eigen::Index j = 0; j <= n; ++j)
      if (j != i + 1) head_target(i, j) = arc_uniform;
    head_target(i, heads[i]) += S(1.0 - eps_arc);
  }
  Matrix<S> label_target = Matrix<S>::Constant(n, k, S(eps_label / double(k)));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= k) throw InvariantError("parse_loss: label id out of range");
    label_target(i, labels[i]) += S(1.0 - eps_label);
  }
  return add(softmax_cross_entropy(logits, head_target, &mask),
             softmax_cross_entropy(label_scores, label_target));
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& scores) {
  std::vector<int> out(scores.rows(), 0);
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    int best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c)
      if (scores(r, c) > scores(r, best)) best = static_cast<int>(c);
    out[r] = best;
  }
  return out;
}

#define TYPAR_INSTANTIATE_BIAFFINE(S)                                                                  \
  template BiaffineVars<S> unflatten_biaffine(const Var<S>&, const BiaffineDims&);                    \
  template Var<S> project(const Var<S>&, Projection, const BiaffineVars<S>&, double, Rng*);           \
  template Var<S> score_arcs(const Var<S>&, const Var<S>&, const BiaffineVars<S>&);                   \
  template ScoreMatrix arc_score_matrix(const Matrix<S>&);                                             \
  template Var<S> score_labels(const Var<S>&, const Var<S>&, std::span<const int>, const BiaffineVars<S>&); \
  template Var<S> parse_loss(const Var<S>&, const Var<S>&, std::span<const int>, std::span<const int>, \
                             double, double);

TYPAR_INSTANTIATE_BIAFFINE(float)
TYPAR_INSTANTIATE_BIAFFINE(double)

}  // namespace typar
