#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "typar/config.hpp"
#include "typar/conllu.hpp"
#include "typar/metrics.hpp"
#include "typar/model.hpp"

namespace typar {

struct EpochLog {
  int epoch = 0;
  long steps = 0;         // optimiser steps so far
  double mean_loss = 0;   // over this epoch's batches
  std::map<std::string, double> dev_las;
  std::optional<double> dev_macro_las;
  bool selected = false;  // became the kept model
};

template <class S>
struct TrainResult {
  Model<S> model;
  std::vector<EpochLog> log;
  long steps = 0;
  long warmup = 0;
};

// Called after every epoch; returning false ends training early.
using EpochCallback = std::function<bool(const EpochLog&)>;

// Monolingual batches drawn from the concatenation of all training
// treebanks: each epoch shuffles every treebank, cuts it into batches and
// shuffles the batch list, so languages appear in proportion to their size.
// With dev treebanks, the epoch with the best macro-averaged dev LAS is kept.
template <class S>
TrainResult<S> train(const TrainConfig& config, const std::vector<Treebank>& train_sets,
                     const std::vector<Treebank>& dev_sets, const TypologyTable& typology,
                     const EpochCallback& on_epoch = {});

// Parses every sentence of `input`, replacing HEAD and DEPREL.
template <class S>
Treebank parse_treebank(Model<S>& model, const Treebank& input, const std::string& lang, const LangvecMode& mode);

template <class S>
AttachmentCounts evaluate(Model<S>& model, const Treebank& gold, const std::string& lang, const LangvecMode& mode);

// The mode a model uses for its own training languages.
template <class S>
LangvecMode native_mode(const Model<S>& model) {
  LangvecMode m;
  m.kind = model.uses_typology() || !model.conditioned() ? LangvecMode::Kind::typology : LangvecMode::Kind::learned;
  return m;
}

}  // namespace typar
