#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "typar/layout.hpp"
#include "typar/tape.hpp"

namespace typar {

struct BiaffineDims {
  int hidden = 128;  // encoder width
  int arc = 768;
  int tag = 256;
  int labels = 1;
};

// Flattening order: arc_head.{w,b}, arc_tail.{w,b}, U_arc (arc x arc),
// u_arc (arc x 1), label_head.{w,b}, label_tail.{w,b}, U_rel (tag x labels*tag,
// block y is the bilinear matrix of label y), W_rel (2*tag x labels), b_rel (1 x labels).
ParamLayout biaffine_layout(const BiaffineDims& dims);

template <class S>
struct BiaffineVars {
  BiaffineDims dims;
  Var<S> arc_head_w, arc_head_b, arc_tail_w, arc_tail_b;
  Var<S> u_arc, u_arc_bias;
  Var<S> label_head_w, label_head_b, label_tail_w, label_tail_b;
  Var<S> u_rel, w_rel, b_rel;
};

template <class S>
BiaffineVars<S> unflatten_biaffine(const Var<S>& flat, const BiaffineDims& dims);

enum class Projection { arc_head, arc_tail, label_head, label_tail };

// max(0, r W + b), followed by dropout with probability `dropout` when rng is given.
template <class S>
Var<S> project(const Var<S>& r, Projection which, const BiaffineVars<S>& p, double dropout = 0,
               Rng* rng = nullptr);

// Raw (n+1) x (n+1) arc scores, entry [j][i] scoring head j for dependent i:
//   h_head[j] U_arc h_tail[i]^T + h_head[j] u_arc
// No masking; see arc_score_matrix.
template <class S>
Var<S> score_arcs(const Var<S>& h_head, const Var<S>& h_tail, const BiaffineVars<S>& p);

// Arc scores in double with the diagonal and the root column set to -inf.
using ScoreMatrix = Eigen::MatrixXd;
template <class S>
ScoreMatrix arc_score_matrix(const Matrix<S>& raw);

// n x labels scores for token i (1-based) attached to heads[i-1].
template <class S>
Var<S> score_labels(const Var<S>& h_label_head, const Var<S>& h_label_tail, std::span<const int> heads,
                    const BiaffineVars<S>& p);

// Mean head cross-entropy plus mean label cross-entropy with label-smoothed
// targets (1 - eps) * onehot + eps * uniform. The head softmax for token i
// ranges over the n candidates j != i.
template <class S>
Var<S> parse_loss(const Var<S>& arc_scores, const Var<S>& label_scores, std::span<const int> heads,
                  std::span<const int> labels, double eps_arc, double eps_label);

// Row-wise argmax with lowest-index tie-breaking.
std::vector<int> argmax_rows(const Eigen::MatrixXd& scores);

}  // namespace typar
