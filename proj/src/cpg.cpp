#include "typar/cpg.hpp"

#include <charconv>
#include <cmath>

#include "typar/error.hpp"
#include "typar/ops.hpp"

namespace typar {

std::string LanguageEmbedding::provenance_label() const {
  switch (provenance) {
    case Provenance::typology: return "typology";
    case Provenance::learned: return "learned";
    case Provenance::centroid: return "centroid";
    case Provenance::proxy: return "proxy:" + source;
  }
  return "unknown";
}

template <class S>
LangEmbedNet<S> LangEmbedNet<S>::init(int hidden, int dim, Rng& rng) {
  auto normal = [&rng](Eigen::Index r, Eigen::Index c, double sd) {
    std::normal_distribution<double> dist(0.0, sd);
    Matrix<S> m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = S(dist(rng));
    return m;
  };
  LangEmbedNet net;
  net.w1 = {"langnet.w1", normal(kTypologyFeatures, hidden, 1.0 / std::sqrt(double(kTypologyFeatures)))};
  net.b1 = {"langnet.b1", Matrix<S>::Zero(1, hidden)};
  net.w2 = {"langnet.w2", normal(hidden, dim, 1.0 / std::sqrt(double(hidden)))};
  net.b2 = {"langnet.b2", Matrix<S>::Zero(1, dim)};
  return net;
}

template <class S>
Var<S> language_embedding(Tape<S>& tape, const TypologyVector& lt, LangEmbedNet<S>& net) {
  Matrix<S> x = lt.values().template cast<S>();
  auto h = relu(add_row(matmul(tape.constant(std::move(x)), tape.param(net.w1)), tape.param(net.b1)));
  return add_row(matmul(h, tape.param(net.w2)), tape.param(net.b2));
}

template <class S>
LanguageEmbedding language_embedding(const TypologyVector& lt, const LangEmbedNet<S>& net) {
  if (net.w1.value.rows() != kTypologyFeatures)
    throw InvariantError("language embedding network expects " + std::to_string(kTypologyFeatures) +
                         " inputs");
  Eigen::Matrix<S, 1, Eigen::Dynamic> x = lt.values().template cast<S>();
  Eigen::Matrix<S, 1, Eigen::Dynamic> h = (x * net.w1.value + net.b1.value).cwiseMax(S(0));
  Eigen::Matrix<S, 1, Eigen::Dynamic> e = h * net.w2.value + net.b2.value;
  return {e.template cast<double>(), Provenance::typology, {}};
}

template <class S>
GeneratorWeights<S> GeneratorWeights<S>::init(const ParamLayout* adapter_layout,
                                              const ParamLayout* biaffine_layout, int dim, Rng& rng) {
  auto rows_for = [&](const ParamLayout& layout, const std::string& name) {
    Matrix<S> w = Matrix<S>::Zero(layout.size(), dim);
    for (const auto& e : layout.entries()) {
      if (e.init != Init::normal) continue;
      std::normal_distribution<double> dist(0.0, e.stddev / std::sqrt(double(dim)));
      for (Eigen::Index i = 0; i < e.size(); ++i)
        for (int c = 0; c < dim; ++c) w(e.offset + i, c) = S(dist(rng));
    }
    return Parameter<S>(name, std::move(w));
  };
  GeneratorWeights gw;
  if (adapter_layout) gw.adapters = rows_for(*adapter_layout, "generator.adapters");
  if (biaffine_layout) gw.biaffine = rows_for(*biaffine_layout, "generator.biaffine");
  return gw;
}

template <class S>
GeneratedParams<S> generate_params(const Eigen::RowVectorXd& le, const GeneratorWeights<S>& gw) {
  GeneratedParams<S> out;
  Eigen::Matrix<S, Eigen::Dynamic, 1> l = le.transpose().template cast<S>();
  auto gen = [&](const Parameter<S>& w) {
    if (w.value.cols() != l.size())
      throw InvariantError("generate_params: generator expects embeddings of size " +
                           std::to_string(w.value.cols()) + ", got " + std::to_string(l.size()));
    return Matrix<S>(w.value * l);
  };
  if (gw.generates_adapters()) out.adapters = gen(gw.adapters);
  if (gw.generates_biaffine()) out.biaffine = gen(gw.biaffine);
  return out;
}

template <class S>
GeneratedVars<S> generate_params(Tape<S>& tape, const Var<S>& le, GeneratorWeights<S>& gw) {
  GeneratedVars<S> out;
  if (le.rows() != 1) throw InvariantError("generate_params: language embedding must be a row vector");
  auto col = transpose(le);
  if (gw.generates_adapters()) out.adapters = matmul(tape.param(gw.adapters), col);
  if (gw.generates_biaffine()) out.biaffine = matmul(tape.param(gw.biaffine), col);
  return out;
}

LanguageEmbedding centroid_embedding(const std::vector<LanguageEmbedding>& trained) {
  if (trained.empty()) throw DataError("centroid of an empty set of language embeddings");
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(trained.front().values.size());
  for (const auto& e : trained) {
    if (e.values.size() != sum.size()) throw DataError("centroid: language embeddings differ in length");
    sum += e.values;
  }
  return {sum / double(trained.size()), Provenance::centroid, {}};
}

LangvecMode LangvecMode::parse(const std::string& text) {
  LangvecMode m;
  if (text == "typology") m.kind = Kind::typology;
  else if (text == "learned") m.kind = Kind::learned;
  else if (text == "centroid") m.kind = Kind::centroid;
  else if (text.rfind("proxy:", 0) == 0 && text.size() > 6) {
    m.kind = Kind::proxy;
    m.proxy = text.substr(6);
  } else {
    throw UsageError("unknown language vector mode '" + text +
                     "' (expected typology, learned, centroid or proxy:<code>)");
  }
  return m;
}

std::string LangvecMode::str() const {
  switch (kind) {
    case Kind::typology: return "typology";
    case Kind::learned: return "learned";
    case Kind::centroid: return "centroid";
    case Kind::proxy: return "proxy:" + proxy;
  }
  return "?";
}

template <class S>
LanguageEmbedding resolve_language_vector(const std::string& code, const LangvecMode& mode,
                                          const TypologyTable& table, const LangEmbedNet<S>& net,
                                          const LanguageStore& store) {
  switch (mode.kind) {
    case LangvecMode::Kind::typology:
      if (!table.contains(code))
        throw MissingLanguageError("no typology vector for language '" + code +
                                   "'; use --langvec-mode centroid or proxy:<code>");
      return language_embedding(table.get(code), net);
    case LangvecMode::Kind::learned: {
      auto it = store.find(code);
      if (it == store.end())
        throw MissingLanguageError("language '" + code +
                                   "' was not seen in training and has no learned embedding; "
                                   "use --langvec-mode typology, centroid or proxy:<code>");
      return it->second;
    }
    case LangvecMode::Kind::centroid: {
      std::vector<LanguageEmbedding> all;
      for (const auto& [c, e] : store) all.push_back(e);
      return centroid_embedding(all);
    }
    case LangvecMode::Kind::proxy: {
      auto it = store.find(mode.proxy);
      if (it == store.end())
        throw MissingLanguageError("proxy language '" + mode.proxy + "' is not a training language");
      return {it->second.values, Provenance::proxy, mode.proxy};
    }
  }
  throw InvariantError("unhandled language vector mode");
}

ParamCount param_count(std::int64_t dim, std::int64_t adapter_params, std::int64_t biaffine_params) {
  if (dim <= 0 || adapter_params < 0 || biaffine_params < 0)
    throw UsageError("param_count: sizes must be positive");
  ParamCount c;
  c.adapters = dim * adapter_params;
  c.biaffine = dim * biaffine_params;
  c.total = c.adapters + c.biaffine;
  return c;
}

template <class S>
std::array<double, 3> feature_weight_report(const LangEmbedNet<S>& net, const std::array<FeatureSlice, 3>& slices) {
  const auto& w = net.w1.value;
  Eigen::VectorXd score(w.rows());
  for (Eigen::Index j = 0; j < w.rows(); ++j) score[j] = w.row(j).template cast<double>().norm();
  const double total = score.sum();
  std::array<double, 3> out{0, 0, 0};
  if (total == 0) return out;
  score /= total;
  for (int g = 0; g < 3; ++g) out[g] = score.segment(slices[g].begin, slices[g].size()).mean();
  return out;
}

std::string write_language_embeddings(const std::vector<std::pair<std::string, LanguageEmbedding>>& rows) {
  std::string out;
  char buf[32];
  for (const auto& [code, e] : rows) {
    out += code;
    out += '\t';
    out += e.provenance_label();
    out += '\t';
    for (Eigen::Index i = 0; i < e.values.size(); ++i) {
      if (i) out += ',';
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, e.values[i]);
      out.append(buf, ptr);
    }
    out += '\n';
  }
  return out;
}

#define TYPAR_INSTANTIATE_CPG(S)                                                                     \
  template struct LangEmbedNet<S>;                                                                   \
  template struct GeneratorWeights<S>;                                                               \
  template Var<S> language_embedding(Tape<S>&, const TypologyVector&, LangEmbedNet<S>&);            \
  template LanguageEmbedding language_embedding(const TypologyVector&, const LangEmbedNet<S>&);     \
  template GeneratedParams<S> generate_params(const Eigen::RowVectorXd&, const GeneratorWeights<S>&); \
  template GeneratedVars<S> generate_params(Tape<S>&, const Var<S>&, GeneratorWeights<S>&);         \
  template LanguageEmbedding resolve_language_vector(const std::string&, const LangvecMode&,        \
                                                     const TypologyTable&, const LangEmbedNet<S>&,  \
                                                     const LanguageStore&);                          \
  template std::array<double, 3> feature_weight_report(const LangEmbedNet<S>&,                      \
                                                       const std::array<FeatureSlice, 3>&);

TYPAR_INSTANTIATE_CPG(float)
TYPAR_INSTANTIATE_CPG(double)

}  // namespace typar
