#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "typar/layout.hpp"
#include "typar/tape.hpp"
#include "typar/typology.hpp"

namespace typar {

// Two-layer network from a typology vector to a language embedding:
//   l_e = max(0, l_t W1 + b1) W2 + b2
template <class S>
struct LangEmbedNet {
  Parameter<S> w1;  // 289 x hidden
  Parameter<S> b1;  // 1 x hidden
  Parameter<S> w2;  // hidden x M
  Parameter<S> b2;  // 1 x M

  static LangEmbedNet init(int hidden, int dim, Rng& rng);
  int dim() const { return static_cast<int>(w2.value.cols()); }
  std::vector<Parameter<S>*> parameters() { return {&w1, &b1, &w2, &b2}; }
};

enum class Provenance { typology, learned, centroid, proxy };

struct LanguageEmbedding {
  Eigen::RowVectorXd values;
  Provenance provenance = Provenance::typology;
  std::string source;  // proxy language code, when provenance == proxy

  std::string provenance_label() const;
};

template <class S>
Var<S> language_embedding(Tape<S>& tape, const TypologyVector& lt, LangEmbedNet<S>& net);
template <class S>
LanguageEmbedding language_embedding(const TypologyVector& lt, const LangEmbedNet<S>& net);

// Bias-free linear generator. Either matrix may be empty when that portion of
// the network is not generated.
template <class S>
struct GeneratorWeights {
  Parameter<S> adapters;  // P_ad x M
  Parameter<S> biaffine;  // P_bf x M

  bool generates_adapters() const { return adapters.value.size() > 0; }
  bool generates_biaffine() const { return biaffine.value.size() > 0; }

  // Rows follow each layout entry's init: zero entries get zero rows, normal
  // entries get N(0, stddev / sqrt(M)).
  static GeneratorWeights init(const ParamLayout* adapter_layout, const ParamLayout* biaffine_layout,
                               int dim, Rng& rng);
};

template <class S>
struct GeneratedParams {
  std::optional<Matrix<S>> adapters;  // P_ad x 1
  std::optional<Matrix<S>> biaffine;  // P_bf x 1
};

template <class S>
struct GeneratedVars {
  Var<S> adapters;
  Var<S> biaffine;
};

// theta_ad = W_ad l_e, theta_bf = W_bf l_e
template <class S>
GeneratedParams<S> generate_params(const Eigen::RowVectorXd& le, const GeneratorWeights<S>& gw);
template <class S>
GeneratedVars<S> generate_params(Tape<S>& tape, const Var<S>& le, GeneratorWeights<S>& gw);

LanguageEmbedding centroid_embedding(const std::vector<LanguageEmbedding>& trained);

struct LangvecMode {
  enum class Kind { typology, learned, centroid, proxy };
  Kind kind = Kind::typology;
  std::string proxy;

  static LangvecMode parse(const std::string& text);  // typology | learned | centroid | proxy:<code>
  std::string str() const;
  bool operator==(const LangvecMode&) const = default;
};

// Embeddings of the in-training languages, used by the learned, centroid and
// proxy modes.
using LanguageStore = std::map<std::string, LanguageEmbedding>;

template <class S>
LanguageEmbedding resolve_language_vector(const std::string& code, const LangvecMode& mode,
                                          const TypologyTable& table, const LangEmbedNet<S>& net,
                                          const LanguageStore& store);

struct ParamCount {
  std::int64_t adapters = 0;
  std::int64_t biaffine = 0;
  std::int64_t total = 0;
};

ParamCount param_count(std::int64_t dim, std::int64_t adapter_params, std::int64_t biaffine_params);

// Per-group mean of normalised first-layer input weights: each feature's
// score is the L2 norm of its outgoing weights, scores are normalised to sum
// to 1. Returns {syntax, phonology, inventory}.
template <class S>
std::array<double, 3> feature_weight_report(const LangEmbedNet<S>& net,
                                            const std::array<FeatureSlice, 3>& slices = feature_group_slices());

// One line per entry: code<TAB>provenance<TAB>e1,...,eM
std::string write_language_embeddings(const std::vector<std::pair<std::string, LanguageEmbedding>>& rows);

}  // namespace typar
