#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "typar/biaffine.hpp"
#include "typar/config.hpp"
#include "typar/cpg.hpp"
#include "typar/encoder.hpp"
#include "typar/typology.hpp"

namespace typar {

template <class S>
struct Model {
  TrainConfig config;
  Vocab vocab;
  std::vector<std::string> labels;     // label inventory, index = label id
  std::vector<std::string> languages;  // training languages, in input order
  TypologyTable typology;              // snapshot of the table given at training time

  Backbone<S> backbone;
  LangEmbedNet<S> langnet;            // empty unless conditioned on typology
  GeneratorWeights<S> generator;      // only the generated portions are non-empty
  Parameter<S> shared_adapters;       // P_ad x 1, when adapters are not generated
  Parameter<S> shared_biaffine;       // P_bf x 1, when the parser is not generated
  std::map<std::string, Parameter<S>> learned;  // 1 x M per training language

  // Parameters are drawn from `rng` in a fixed order, so a seed fixes the model.
  static Model create(const TrainConfig& config, Vocab vocab, std::vector<std::string> labels,
                      std::vector<std::string> languages, TypologyTable typology, Rng& rng);

  EncoderShape shape() const { return config.encoder_shape(); }
  BiaffineDims dims() const { return config.biaffine_dims(static_cast<int>(labels.size())); }
  bool conditioned() const { return config.cpg_mode != CpgMode::off; }
  bool generates_adapters() const {
    return config.cpg_mode == CpgMode::adapters || config.cpg_mode == CpgMode::both;
  }
  bool generates_biaffine() const {
    return config.cpg_mode == CpgMode::biaffine || config.cpg_mode == CpgMode::both;
  }
  bool uses_typology() const { return conditioned() && config.langvec == TrainLangvec::typology; }

  int label_id(const std::string& deprel) const;  // throws DataError if unknown

  // Everything the optimiser updates except the backbone.
  std::vector<Parameter<S>*> head_parameters();
  // Every stored parameter, in serialisation order.
  std::vector<Parameter<S>*> all_parameters();
  std::vector<const Parameter<S>*> all_parameters() const;
  Eigen::Index trainable_size() const;

  // Embeddings of the training languages: learned vectors, or the
  // typology-derived embeddings when the model is typology-conditioned.
  LanguageStore language_store() const;
  // nullopt for an unconditioned model.
  std::optional<LanguageEmbedding> resolve(const std::string& code, const LangvecMode& mode) const;
};

// Per-language flat parameter vectors for inference.
template <class S>
struct FixedParams {
  Matrix<S> adapters;
  Matrix<S> biaffine;
};

template <class S>
FixedParams<S> fixed_params(const Model<S>& m, const std::optional<LanguageEmbedding>& le);

template <class S>
struct BoundParams {
  AdapterVars<S> adapters;
  BiaffineVars<S> biaffine;
};

// Parameters for one training batch in `lang`, with gradients flowing back to
// the generator, the language embedding source and any shared parts.
template <class S>
BoundParams<S> bind_training(Tape<S>& tape, Model<S>& m, const std::string& lang);

template <class S>
BoundParams<S> bind_fixed(Tape<S>& tape, const Model<S>& m, const FixedParams<S>& fp);

// Label ids of each word's gold deprel.
template <class S>
std::vector<int> label_ids(const Model<S>& m, const Sentence& s);

template <class S>
Var<S> sentence_loss(Tape<S>& tape, Model<S>& m, const BoundParams<S>& p, const Sentence& s,
                     std::span<const int> labels, Rng& rng, bool training);

// Overwrites HEAD and DEPREL of every word with the decoded tree.
template <class S>
void predict_sentence(Model<S>& m, const FixedParams<S>& fp, Sentence& s);

}  // namespace typar
