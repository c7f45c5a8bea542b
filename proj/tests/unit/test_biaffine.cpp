#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "gradcheck.hpp"
#include "typar/biaffine.hpp"
#include "typar/ops.hpp"

using namespace typar;
using M = Matrix<double>;

namespace {

M random_matrix(std::mt19937_64& g, Eigen::Index r, Eigen::Index c, double sd = 1.0) {
  std::normal_distribution<double> dist(0, sd);
  M m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(g);
  return m;
}

}  // namespace

TEST_CASE("biaffine layout") {
  BiaffineDims small{4, 3, 2, 5};
  auto layout = biaffine_layout(small);
  CHECK(layout.entries().size() == 13);
  CHECK(layout.at("U_arc").rows == 3);
  CHECK(layout.at("U_arc").cols == 3);
  CHECK(layout.at("U_rel").cols == 10);
  CHECK(layout.at("W_rel").rows == 4);
  CHECK(layout.at("b_rel").cols == 5);
  CHECK(layout.at("arc_head.w").init == Init::normal);
  CHECK(layout.at("U_arc").init == Init::zero);

  BiaffineDims paper{768, 768, 256, 1};
  auto big = biaffine_layout(paper);
  CHECK(big.at("arc_head.w").cols == 768);
  CHECK(big.at("label_head.w").cols == 256);
}

TEST_CASE("zero projection weights give zero arc scores") {
  BiaffineDims dims{4, 3, 2, 2};
  auto layout = biaffine_layout(dims);
  Tape<double> tape;
  std::mt19937_64 g(1);
  M flat = M::Zero(layout.size(), 1);
  auto p = unflatten_biaffine(tape.constant(flat), dims);
  auto r = tape.constant(random_matrix(g, 5, 4));
  auto s = score_arcs(project(r, Projection::arc_head, p), project(r, Projection::arc_tail, p), p);
  CHECK(s.rows() == 5);
  CHECK(s.cols() == 5);
  CHECK(s.value().isZero(0));
}

TEST_CASE("arc scores match the bilinear form") {
  std::mt19937_64 g(2);
  BiaffineDims dims{3, 2, 2, 3};
  auto layout = biaffine_layout(dims);
  M flat = random_matrix(g, layout.size(), 1);
  Tape<double> tape;
  auto p = unflatten_biaffine(tape.constant(flat), dims);
  M hh = random_matrix(g, 4, 2), ht = random_matrix(g, 4, 2);
  auto s = score_arcs(tape.constant(hh), tape.constant(ht), p).value();
  const M U = p.u_arc.value(), u = p.u_arc_bias.value();
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i) {
      double expect = 0;
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) expect += hh(j, a) * U(a, b) * ht(i, b);
        expect += hh(j, a) * u(a, 0);
      }
      CHECK(std::abs(s(j, i) - expect) < 1e-12);
    }

  auto masked = arc_score_matrix(s);
  for (int i = 0; i < 4; ++i) {
    CHECK(masked(i, i) == -std::numeric_limits<double>::infinity());
    CHECK(masked(i, 0) == -std::numeric_limits<double>::infinity());
  }
  CHECK(masked(0, 1) == s(0, 1));
  CHECK(masked(2, 3) == s(2, 3));
}

TEST_CASE("label scores are local to the chosen head") {
  std::mt19937_64 g(3);
  BiaffineDims dims{3, 2, 2, 3};
  auto layout = biaffine_layout(dims);
  M flat = random_matrix(g, layout.size(), 1);
  Tape<double> tape;
  auto p = unflatten_biaffine(tape.constant(flat), dims);
  M lh = random_matrix(g, 4, 2), lt = random_matrix(g, 4, 2);
  std::vector<int> heads{0, 1, 1};
  auto s = score_labels(tape.constant(lh), tape.constant(lt), heads, p).value();
  CHECK(s.rows() == 3);
  CHECK(s.cols() == 3);

  // direct oracle: hh U_y ht^T + [hh; ht] W_y + b_y
  const M U = p.u_rel.value(), W = p.w_rel.value(), b = p.b_rel.value();
  for (int i = 0; i < 3; ++i)
    for (int y = 0; y < 3; ++y) {
      const auto hh = lh.row(heads[i]);
      const auto ht = lt.row(i + 1);
      double expect = b(0, y);
      for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 2; ++c) expect += hh(a) * U(a, y * 2 + c) * ht(c);
      for (int a = 0; a < 2; ++a) expect += hh(a) * W(a, y) + ht(a) * W(2 + a, y);
      CHECK(std::abs(s(i, y) - expect) < 1e-12);
    }

  // changing the head representation of an unrelated token leaves row 0 alone
  M lh2 = lh;
  lh2.row(2) *= -3;
  Tape<double> t2;
  auto p2 = unflatten_biaffine(t2.constant(flat), dims);
  auto s2 = score_labels(t2.constant(lh2), t2.constant(lt), heads, p2).value();
  CHECK(s2.row(0) == s.row(0));
  CHECK(s2.row(1) == s.row(1));

  std::vector<int> bad{0, 4, 1};
  CHECK_THROWS_AS(score_labels(tape.constant(lh), tape.constant(lt), bad, p), InvariantError);
}

TEST_CASE("parse_loss values") {
  SUBCASE("single token, three labels, smoothing 0.03") {
    Tape<double> tape;
    M arc = M::Zero(2, 2);
    M lab(1, 3);
    lab << 1, 2, 0;
    std::vector<int> heads{0}, labels{1};
    auto loss = parse_loss(tape.constant(arc), tape.constant(lab), heads, labels, 0.03, 0.03);
    // log(e + e^2 + 1) - (0.01 * 1 + 0.98 * 2)
    CHECK(std::abs(loss.value()(0, 0) - 0.43760596) < 1e-8);
  }
  SUBCASE("uniform scores give log n") {
    for (int n = 1; n <= 6; ++n) {
      Tape<double> tape;
      std::vector<int> heads(n, 0), labels(n, 0);
      auto loss = parse_loss(tape.constant(M::Zero(n + 1, n + 1)), tape.constant(M::Zero(n, 1)), heads, labels,
                             0.1, 0.1);
      CHECK(std::abs(loss.value()(0, 0) - std::log(double(n))) < 1e-12);
    }
  }
  SUBCASE("confident correct scores give ~0 without smoothing") {
    const int n = 3;
    std::vector<int> heads{2, 0, 2}, labels{1, 0, 1};
    M arc = M::Zero(n + 1, n + 1);
    for (int i = 0; i < n; ++i) arc(heads[i], i + 1) = 100;
    // a large score on the masked diagonal must not matter
    arc(1, 1) = 1000;
    M lab = M::Zero(n, 2);
    for (int i = 0; i < n; ++i) lab(i, labels[i]) = 100;
    Tape<double> tape;
    auto loss = parse_loss(tape.constant(arc), tape.constant(lab), heads, labels, 0, 0);
    CHECK(loss.value()(0, 0) < 1e-30);
  }
}

TEST_CASE("parse_loss gradient with respect to the biaffine parameters") {
  std::mt19937_64 g(8);
  BiaffineDims dims{4, 3, 2, 3};
  auto layout = biaffine_layout(dims);
  Parameter<double> flat("flat", random_matrix(g, layout.size(), 1, 0.5));
  M r = random_matrix(g, 5, 4);
  std::vector<int> heads{2, 0, 2, 3}, labels{0, 2, 1, 1};
  auto loss = [&](Tape<double>& tape) {
    auto p = unflatten_biaffine(tape.param(flat), dims);
    auto x = tape.constant(r);
    auto arcs = score_arcs(project(x, Projection::arc_head, p), project(x, Projection::arc_tail, p), p);
    auto labs = score_labels(project(x, Projection::label_head, p), project(x, Projection::label_tail, p), heads, p);
    return parse_loss(arcs, labs, heads, labels, 0.03, 0.03);
  };
  Tape<double> tape;
  tape.backward(loss(tape));
  M analytic = flat.grad;
  auto res = testing::finite_difference_check(flat, analytic, [&] {
    Tape<double> t;
    return loss(t).value()(0, 0);
  });
  CHECK(res.rel_error < 1e-6);
  CHECK(res.checked == static_cast<std::size_t>(layout.size()));
}

TEST_CASE("argmax_rows breaks ties to the lowest index") {
  Eigen::MatrixXd s(3, 3);
  s << 1, 1, 0, 0, 2, 2, -1, -2, -1;
  CHECK(argmax_rows(s) == std::vector<int>{0, 1, 0});
}
