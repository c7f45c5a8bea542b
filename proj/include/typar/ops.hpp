#pragma once

// Differentiable primitives over Var<S>, plus the plain-matrix forms of the
// nonlinearities. Every op checks shapes and records a backward rule.

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "typar/tape.hpp"

namespace typar {

namespace detail {

inline void require(bool ok, const char* op, const std::string& what) {
  if (!ok) throw InvariantError(std::string(op) + ": " + what);
}

template <class S>
std::string shape(const Matrix<S>& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

template <class S>
S std_normal_cdf(S x) {
  return S(0.5) * (S(1) + std::erf(x * S(std::numbers::sqrt2 / 2)));
}

template <class S>
S std_normal_pdf(S x) {
  return std::exp(S(-0.5) * x * x) * S(0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

}  // namespace detail

// x * Phi(x), with the exact erf-based normal CDF.
template <class S>
Matrix<S> gelu(const Matrix<S>& x) {
  return x.unaryExpr([](S v) { return v * detail::std_normal_cdf(v); });
}

// Row-wise softmax with max subtraction. Masked entries come out as exactly 0.
template <class S>
Matrix<S> softmax_rows(const Matrix<S>& x, const Mask* mask = nullptr) {
  if (mask) detail::require(mask->rows() == x.rows() && mask->cols() == x.cols(), "softmax_rows", "mask shape");
  Matrix<S> out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    S mx = -std::numeric_limits<S>::infinity();
    bool any = false;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (mask && (*mask)(r, c)) continue;
      any = true;
      mx = std::max(mx, x(r, c));
    }
    detail::require(any, "softmax_rows", "row " + std::to_string(r) + " is fully masked");
    S total = 0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      S e = (mask && (*mask)(r, c)) ? S(0) : std::exp(x(r, c) - mx);
      out(r, c) = e;
      total += e;
    }
    out.row(r) /= total;
  }
  return out;
}

template <class S>
Var<S> matmul(const Var<S>& a, const Var<S>& b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  detail::require(av.cols() == bv.rows(), "matmul", detail::shape(av) + " * " + detail::shape(bv));
  Matrix<S> out = av * bv;
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record("matmul", std::move(out), {a, b},
                          [ia, ib](Tape<S>& t, std::size_t, const Matrix<S>& g) {
                            if (t.requires_grad(ia)) t.grad_ref(ia).noalias() += g * t.value(ib).transpose();
                            if (t.requires_grad(ib)) t.grad_ref(ib).noalias() += t.value(ia).transpose() * g;
                          });
}

// a * b^T
template <class S>
Var<S> matmul_nt(const Var<S>& a, const Var<S>& b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  detail::require(av.cols() == bv.cols(), "matmul_nt", detail::shape(av) + " * T(" + detail::shape(bv) + ")");
  Matrix<S> out = av * bv.transpose();
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record("matmul_nt", std::move(out), {a, b},
                          [ia, ib](Tape<S>& t, std::size_t, const Matrix<S>& g) {
                            if (t.requires_grad(ia)) t.grad_ref(ia).noalias() += g * t.value(ib);
                            if (t.requires_grad(ib)) t.grad_ref(ib).noalias() += g.transpose() * t.value(ia);
                          });
}

template <class S>
Var<S> transpose(const Var<S>& a) {
  Matrix<S> out = a.value().transpose();
  const auto ia = a.id();
  return a.tape()->record("transpose", std::move(out), {a},
                          [ia](Tape<S>& t, std::size_t, const Matrix<S>& g) {
                            t.grad_ref(ia) += g.transpose();
                          });
}

template <class S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "add",
                  detail::shape(a.value()) + " + " + detail::shape(b.value()));
  Matrix<S> out = a.value() + b.value();
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record("add", std::move(out), {a, b},
                          [ia, ib](Tape<S>& t, std::size_t, const Matrix<S>& g) {
                            if (t.requires_grad(ia)) t.grad_ref(ia) += g;
                            if (t.requires_grad(ib)) t.grad_ref(ib) += g;
                          });
}

template <class S>
Var<S> sub(const Var<S>& a, const Var<S>& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "sub",
                  detail::shape(a.value()) + " - " + detail::shape(b.value()));
  Matrix<S> out = a.value() - b.value();
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record("sub", std::move(out), {a, b},
                          [ia, ib](Tape<S>& t, std::size_t, const Matrix<S>& g) {
                            if (t.requires_grad(ia)) t.grad_ref(ia) += g;
                            if (t.requires_grad(ib)) t.grad_ref(ib) -= g;
                          });
}

template <class S>
Var<S> operator+(const Var<S>& a, const Var<S>& b) { return add(a, b); }
template <class S>
Var<S> operator-(const Var<S>& a, const Var<S>& b) { return sub(a, b); }

template <class S>
Var<S> hadamard(const Var<S>& a, const Var<S>& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), "hadamard",
                  detail::shape(a.value()) + " .* " + detail::shape(b.value()));
  Matrix<S> out = a.value().cwiseProduct(b.value());
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record("hadamard", std::move(out), {a, b},
                          [ia, ib](Tape<S>& t, std::size_t, const Matrix<S>& g) {
                            if (t.requires_grad(ia)) t.grad_ref(ia) += g.cwiseProduct(t.value(ib));
                            if (t.requires_grad(ib)) t.grad_ref(ib) += g.cwiseProduct(t.value(ia));
                          });
}

template <class S>
Var<S> scale(const Var<S>& a, S s) {
  Matrix<S> out = a.value() * s;
  const auto ia = a.id();
  return a.tape()->record("scale", std::move(out), {a},
                          [ia, s](Tape<S>& t, std::size_t, const Matrix<S>& g) {
                            t.grad_ref(ia) += g * s;
                          });
}

template <class S>
Var<S> operator*(S s, const Var<S>& a) { return scale(a, s); }

// x + 1 * row, row is 1 x cols
template <class S>
Var<S> add_row(const Var<S>& x, const Var<S>& row) {
  detail::require(row.rows() == 1 && row.cols() == x.cols(), "add_row",
                  detail::shape(x.value()) + " + " + detail::shape(row.value()));
  Matrix<S> out = x.value().rowwise() + row.value().row(0);
  const auto ix = x.id(), ir = row.id();
  return x.tape()->record("add_row", std::move(out), {x, row},
                          [ix, ir](Tape<S>& t, std::size_t, const Matrix<S>& g) {
                            if (t.requires_grad(ix)) t.grad_ref(ix) += g;
                            if (t.requires_grad(ir)) t.grad_ref(ir) += g.colwise().sum();
                          });
}

// x + col * 1^T, col is rows x 1
template <class S>
Var<S> add_col(const Var<S>& x, const Var<S>& col) {
  detail::require(col.cols() == 1 && col.rows() == x.rows(), "add_col",
                  detail::shape(x.value()) + " + " + detail::shape(col.value()));
  Matrix<S> out = x.value().colwise() + col.value().col(0);
  const auto ix = x.id(), ic = col.id();
  return x.tape()->record("add_col", std::move(out), {x, col},
                          [ix, ic](Tape<S>& t, std::size_t, const Matrix<S>& g) {
                            if (t.requires_grad(ix)) t.grad_ref(ix) += g;
                            if (t.requires_grad(ic)) t.grad_ref(ic) += g.rowwise().sum();
                          });
}

template <class S>
Var<S> gelu(const Var<S>& x) {
  const auto ix = x.id();
  return x.tape()->record("gelu", gelu(x.value()), {x},
                          [ix](Tape<S>& t, std::size_t, const Matrix<S>& g) {
                            const auto& xv = t.value(ix);
                            Matrix<S> d = xv.unaryExpr([](S v) {
                              return detail::std_normal_cdf(v) + v * detail::std_normal_pdf(v);
                            });
                            t.grad_ref(ix) += g.cwiseProduct(d);
                          });
}

template <class S>
Var<S> relu(const Var<S>& x) {
  Matrix<S> out = x.value().cwiseMax(S(0));
  const auto ix = x.id();
  return x.tape()->record("relu", std::move(out), {x},
                          [ix](Tape<S>& t, std::size_t, const Matrix<S>& g) {
                            const auto& xv = t.value(ix);
                            t.grad_ref(ix) += (xv.array() > S(0)).select(g, S(0)).matrix();
                          });
}

template <class S>
Var<S> softmax_rows(const Var<S>& x, const Mask* mask = nullptr) {
  const auto ix = x.id();
  return x.tape()->record("softmax_rows", softmax_rows(x.value(), mask), {x},
                          [ix](Tape<S>& t, std::size_t self, const Matrix<S>& g) {
                            const auto& y = t.value(self);
                            Matrix<S> gy = g.cwiseProduct(y);
                            Eigen::Matrix<S, Eigen::Dynamic, 1> dot = gy.rowwise().sum();
                            t.grad_ref(ix) += gy - (y.array().colwise() * dot.array()).matrix();
                          });
}

template <class S>
Var<S> layer_norm_rows(const Var<S>& x, const Var<S>& gamma, const Var<S>& beta, S eps = S(1e-5)) {
  const auto& xv = x.value();
  const Eigen::Index c = xv.cols();
  detail::require(gamma.rows() == 1 && gamma.cols() == c && beta.rows() == 1 && beta.cols() == c,
                  "layer_norm_rows", "gain/bias shape");
  Matrix<S> xhat(xv.rows(), c);
  Eigen::Matrix<S, Eigen::Dynamic, 1> inv_std(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    S mean = xv.row(r).mean();
    auto centered = (xv.row(r).array() - mean).matrix();
    S var = centered.squaredNorm() / S(c);
    inv_std[r] = S(1) / std::sqrt(var + eps);
    xhat.row(r) = centered * inv_std[r];
  }
  Matrix<S> out = (xhat.array().rowwise() * gamma.value().row(0).array()).matrix();
  out.rowwise() += beta.value().row(0);
  const auto ix = x.id(), ig = gamma.id(), ib = beta.id();
  return x.tape()->record(
      "layer_norm_rows", std::move(out), {x, gamma, beta},
      [ix, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          Tape<S>& t, std::size_t, const Matrix<S>& g) {
        if (t.requires_grad(ig)) t.grad_ref(ig) += g.cwiseProduct(xhat).colwise().sum();
        if (t.requires_grad(ib)) t.grad_ref(ib) += g.colwise().sum();
        if (!t.requires_grad(ix)) return;
        const S c = S(xhat.cols());
        Matrix<S> dxhat = (g.array().rowwise() * t.value(ig).row(0).array()).matrix();
        auto& gx = t.grad_ref(ix);
        for (Eigen::Index r = 0; r < xhat.rows(); ++r) {
          S m1 = dxhat.row(r).sum() / c;
          S m2 = dxhat.row(r).dot(xhat.row(r)) / c;
          gx.row(r) += inv_std[r] * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2).matrix();
        }
      });
}

// Inverted dropout; identity when p == 0.
template <class S>
Var<S> dropout(const Var<S>& x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  detail::require(p < 1.0, "dropout", "probability must be < 1");
  std::bernoulli_distribution keep(1.0 - p);
  const S kept = S(1.0 / (1.0 - p));
  Matrix<S> m(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = keep(rng) ? kept : S(0);
  Matrix<S> out = x.value().cwiseProduct(m);
  const auto ix = x.id();
  return x.tape()->record("dropout", std::move(out), {x},
                          [ix, m = std::move(m)](Tape<S>& t, std::size_t, const Matrix<S>& g) {
                            t.grad_ref(ix) += g.cwiseProduct(m);
                          });
}

template <class S>
Var<S> gather_rows(const Var<S>& table, std::vector<int> rows) {
  const auto& tv = table.value();
  Matrix<S> out(static_cast<Eigen::Index>(rows.size()), tv.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    detail::require(rows[r] >= 0 && rows[r] < tv.rows(), "gather_rows",
                    "row " + std::to_string(rows[r]) + " out of range");
    out.row(static_cast<Eigen::Index>(r)) = tv.row(rows[r]);
  }
  const auto it = table.id();
  return table.tape()->record("gather_rows", std::move(out), {table},
                              [it, rows = std::move(rows)](Tape<S>& t, std::size_t, const Matrix<S>& g) {
                                auto& gt = t.grad_ref(it);
                                for (std::size_t r = 0; r < rows.size(); ++r)
                                  gt.row(rows[r]) += g.row(static_cast<Eigen::Index>(r));
                              });
}

// rows x cols block of the row-major storage of `flat`, starting at `offset`.
template <class S>
Var<S> view(const Var<S>& flat, Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) {
  const auto& fv = flat.value();
  detail::require(offset >= 0 && offset + rows * cols <= fv.size(), "view",
                  "range [" + std::to_string(offset) + ", " + std::to_string(offset + rows * cols) +
                      ") exceeds " + std::to_string(fv.size()));
  using Map = Eigen::Map<const Matrix<S>>;
  Matrix<S> out = Map(fv.data() + offset, rows, cols);
  const auto ifl = flat.id();
  return flat.tape()->record("view", std::move(out), {flat},
                             [ifl, offset, rows, cols](Tape<S>& t, std::size_t, const Matrix<S>& g) {
                               auto& gf = t.grad_ref(ifl);
                               Eigen::Map<Matrix<S>>(gf.data() + offset, rows, cols) += g;
                             });
}

template <class S>
Var<S> slice_rows(const Var<S>& x, Eigen::Index start, Eigen::Index count) {
  detail::require(start >= 0 && start + count <= x.rows(), "slice_rows", "range");
  Matrix<S> out = x.value().middleRows(start, count);
  const auto ix = x.id();
  return x.tape()->record("slice_rows", std::move(out), {x},
                          [ix, start, count](Tape<S>& t, std::size_t, const Matrix<S>& g) {
                            t.grad_ref(ix).middleRows(start, count) += g;
                          });
}

template <class S>
Var<S> slice_cols(const Var<S>& x, Eigen::Index start, Eigen::Index count) {
  detail::require(start >= 0 && start + count <= x.cols(), "slice_cols", "range");
  Matrix<S> out = x.value().middleCols(start, count);
  const auto ix = x.id();
  return x.tape()->record("slice_cols", std::move(out), {x},
                          [ix, start, count](Tape<S>& t, std::size_t, const Matrix<S>& g) {
                            t.grad_ref(ix).middleCols(start, count) += g;
                          });
}

template <class S>
Var<S> concat_cols(std::span<const Var<S>> parts) {
  detail::require(!parts.empty(), "concat_cols", "no inputs");
  Tape<S>* tape = parts.front().tape();
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    detail::require(p.rows() == rows, "concat_cols", "row count mismatch");
    detail::require(p.tape() == tape, "concat_cols", "inputs from different tapes");
    cols += p.cols();
  }
  Matrix<S> out(rows, cols);
  std::vector<std::size_t> ids;
  std::vector<Eigen::Index> offsets;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    ids.push_back(p.id());
    offsets.push_back(at);
    at += p.cols();
  }
  // record() takes a fixed input list; route through the first input that needs grad
  Var<S> anchor = parts.front();
  for (const auto& p : parts)
    if (tape->requires_grad(p)) { anchor = p; break; }
  return tape->record("concat_cols", std::move(out), {anchor},
                      [ids = std::move(ids), offsets = std::move(offsets)](
                          Tape<S>& t, std::size_t, const Matrix<S>& g) {
                        for (std::size_t k = 0; k < ids.size(); ++k) {
                          if (!t.requires_grad(ids[k])) continue;
                          auto& gk = t.grad_ref(ids[k]);
                          gk += g.middleCols(offsets[k], gk.cols());
                        }
                      });
}

template <class S>
Var<S> sum(const Var<S>& x) {
  Matrix<S> out(1, 1);
  out(0, 0) = x.value().sum();
  const auto ix = x.id();
  return x.tape()->record("sum", std::move(out), {x},
                          [ix](Tape<S>& t, std::size_t, const Matrix<S>& g) {
                            t.grad_ref(ix).array() += g(0, 0);
                          });
}

// Mean over rows of -sum_c target(r,c) * log softmax(logits)(r,c). Masked
// entries are excluded from the softmax and must carry zero target mass.
template <class S>
Var<S> softmax_cross_entropy(const Var<S>& logits, const Matrix<S>& target, const Mask* mask = nullptr) {
  const auto& lv = logits.value();
  detail::require(target.rows() == lv.rows() && target.cols() == lv.cols(), "softmax_cross_entropy",
                  "target shape " + detail::shape(target) + " vs logits " + detail::shape(lv));
  detail::require(lv.rows() > 0, "softmax_cross_entropy", "no rows");
  Matrix<S> prob = softmax_rows(lv, mask);
  S total = 0;
  for (Eigen::Index r = 0; r < lv.rows(); ++r) {
    S mx = -std::numeric_limits<S>::infinity();
    for (Eigen::Index c = 0; c < lv.cols(); ++c)
      if (!(mask && (*mask)(r, c))) mx = std::max(mx, lv(r, c));
    S z = 0;
    for (Eigen::Index c = 0; c < lv.cols(); ++c)
      if (!(mask && (*mask)(r, c))) z += std::exp(lv(r, c) - mx);
    const S logz = mx + std::log(z);
    for (Eigen::Index c = 0; c < lv.cols(); ++c) {
      if (mask && (*mask)(r, c)) {
        detail::require(target(r, c) == S(0), "softmax_cross_entropy", "target mass on masked entry");
        continue;
      }
      if (target(r, c) != S(0)) total -= target(r, c) * (lv(r, c) - logz);
    }
  }
  const S rows = S(lv.rows());
  Matrix<S> out(1, 1);
  out(0, 0) = total / rows;
  const auto il = logits.id();
  return logits.tape()->record(
      "softmax_cross_entropy", std::move(out), {logits},
      [il, prob = std::move(prob), target, rows](Tape<S>& t, std::size_t, const Matrix<S>& g) {
        Eigen::Matrix<S, Eigen::Dynamic, 1> mass = target.rowwise().sum();
        Matrix<S> d = (prob.array().colwise() * mass.array()).matrix() - target;
        t.grad_ref(il) += d * (g(0, 0) / rows);
      });
}

// out(i, k) = sum_c blocks(i, k*width + c) * rows(i, c)
template <class S>
Var<S> block_row_dot(const Var<S>& blocks, const Var<S>& rows) {
  const auto& bv = blocks.value();
  const auto& rv = rows.value();
  const Eigen::Index w = rv.cols();
  detail::require(bv.rows() == rv.rows() && w > 0 && bv.cols() % w == 0, "block_row_dot",
                  detail::shape(bv) + " vs " + detail::shape(rv));
  const Eigen::Index k = bv.cols() / w;
  Matrix<S> out(bv.rows(), k);
  for (Eigen::Index i = 0; i < bv.rows(); ++i)
    for (Eigen::Index y = 0; y < k; ++y) out(i, y) = bv.row(i).segment(y * w, w).dot(rv.row(i));
  const auto ib = blocks.id(), ir = rows.id();
  return blocks.tape()->record(
      "block_row_dot", std::move(out), {blocks, rows},
      [ib, ir, w, k](Tape<S>& t, std::size_t, const Matrix<S>& g) {
        const auto& bv = t.value(ib);
        const auto& rv = t.value(ir);
        if (t.requires_grad(ib)) {
          auto& gb = t.grad_ref(ib);
          for (Eigen::Index i = 0; i < bv.rows(); ++i)
            for (Eigen::Index y = 0; y < k; ++y) gb.row(i).segment(y * w, w) += g(i, y) * rv.row(i);
        }
        if (t.requires_grad(ir)) {
          auto& gr = t.grad_ref(ir);
          for (Eigen::Index i = 0; i < bv.rows(); ++i)
            for (Eigen::Index y = 0; y < k; ++y) gr.row(i) += g(i, y) * bv.row(i).segment(y * w, w);
        }
      });
}

}  // namespace typar
