#include "typar/train.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "typar/error.hpp"
#include "typar/ops.hpp"
#include "typar/optim.hpp"

namespace typar {

namespace {

struct Batch {
  std::size_t treebank;
  std::vector<std::size_t> sentences;
};

std::vector<Batch> make_batches(const std::vector<Treebank>& sets, int batch_size, Rng& rng) {
  std::vector<Batch> batches;
  for (std::size_t t = 0; t < sets.size(); ++t) {
    std::vector<std::size_t> order(sets[t].sentences.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < order.size(); i += batch_size) {
      const auto end = std::min(order.size(), i + batch_size);
      batches.push_back({t, {order.begin() + i, order.begin() + end}});
    }
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

void check_inputs(const TrainConfig& config, const std::vector<Treebank>& train_sets,
                  const std::vector<Treebank>& dev_sets, const TypologyTable& typology) {
  if (train_sets.empty()) throw UsageError("no training treebanks given");
  std::set<std::string> seen;
  for (const auto& tb : train_sets) {
    if (tb.lang.empty()) throw UsageError("training treebank without a language code");
    if (!seen.insert(tb.lang).second) throw UsageError("language '" + tb.lang + "' given more than once");
    if (tb.sentences.empty()) throw DataError("training treebank for '" + tb.lang + "' is empty");
    const bool needs_typology = config.cpg_mode != CpgMode::off && config.langvec == TrainLangvec::typology;
    if (needs_typology && !typology.contains(tb.lang))
      throw MissingLanguageError("no typology vector for training language '" + tb.lang + "'");
    for (const auto& s : tb.sentences)
      if (static_cast<int>(s.size()) + 1 > config.maxlen)
        throw DataError("sentence of " + std::to_string(s.size()) + " words in '" + tb.lang +
                        "' exceeds maxlen " + std::to_string(config.maxlen));
  }
  for (const auto& tb : dev_sets)
    if (!seen.count(tb.lang)) throw UsageError("dev treebank for '" + tb.lang + "' has no training treebank");
}

}  // namespace

template <class S>
TrainResult<S> train(const TrainConfig& config, const std::vector<Treebank>& train_in,
                     const std::vector<Treebank>& dev_sets, const TypologyTable& typology,
                     const EpochCallback& on_epoch) {
  config.validate();
  check_inputs(config, train_in, dev_sets, typology);

  std::vector<Treebank> sets = train_in;
  if (config.max_sentences > 0)
    for (auto& tb : sets)
      if (tb.sentences.size() > static_cast<std::size_t>(config.max_sentences))
        tb.sentences.resize(config.max_sentences);

  std::set<std::string> label_set;
  std::vector<std::string> languages;
  for (const auto& tb : sets) {
    languages.push_back(tb.lang);
    for (const auto& s : tb.sentences)
      for (const auto& t : s.tokens) label_set.insert(t.deprel);
  }

  Rng rng(config.seed);
  TrainResult<S> result{Model<S>::create(config, Vocab::build(sets), {label_set.begin(), label_set.end()},
                                         languages, typology, rng),
                        {}, 0, 0};
  auto& model = result.model;

  std::vector<std::vector<std::vector<int>>> labels(sets.size());
  for (std::size_t t = 0; t < sets.size(); ++t)
    for (const auto& s : sets[t].sentences) labels[t].push_back(label_ids(model, s));

  long batches_per_epoch = 0;
  for (const auto& tb : sets)
    batches_per_epoch += static_cast<long>((tb.sentences.size() + config.batch_size - 1) / config.batch_size);
  long total = batches_per_epoch * config.epochs;
  if (config.max_steps > 0) total = std::min(total, config.max_steps);
  const long warmup = config.warmup_for(total);
  result.warmup = warmup;

  auto head_params = model.head_parameters();
  std::vector<Parameter<S>*> backbone_params;
  if (config.backbone == BackboneMode::trainable) backbone_params = model.backbone.parameters();
  AdamState<S> head_state{config.adam(), {}, {}, 0};
  AdamState<S> backbone_state{config.adam(), {}, {}, 0};

  const auto mode = native_mode(model);
  std::optional<Model<S>> best;
  double best_las = -1;
  long step = 0;

  for (int epoch = 1; epoch <= config.epochs && step < total; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    double loss_sum = 0;
    long batches = 0;
    for (const auto& batch : make_batches(sets, config.batch_size, rng)) {
      if (step >= total) break;
      ++step;
      for (auto* p : head_params) p->zero_grad();
      for (auto* p : backbone_params) p->zero_grad();
      Tape<S> tape;
      const auto& tb = sets[batch.treebank];
      auto bound = bind_training(tape, model, tb.lang);
      Var<S> loss;
      for (auto i : batch.sentences) {
        auto l = sentence_loss(tape, model, bound, tb.sentences[i], labels[batch.treebank][i], rng, true);
        loss = loss ? add(loss, l) : l;
      }
      loss = scale(loss, S(1.0 / double(batch.sentences.size())));
      loss_sum += double(loss.value()(0, 0));
      ++batches;
      tape.backward(loss);
      adam_step<S>(head_params, head_state, lr_at_step(step, config.lr, warmup));
      if (!backbone_params.empty())
        adam_step<S>(backbone_params, backbone_state, lr_at_step(step, config.backbone_lr, warmup));
    }
    log.steps = step;
    log.mean_loss = batches ? loss_sum / double(batches) : 0;

    if (!dev_sets.empty()) {
      double sum = 0;
      for (const auto& dev : dev_sets) {
        const double las = evaluate(model, dev, dev.lang, mode).las();
        log.dev_las[dev.lang] = las;
        sum += las;
      }
      log.dev_macro_las = sum / double(dev_sets.size());
      if (config.select_on_dev && *log.dev_macro_las > best_las) {
        best_las = *log.dev_macro_las;
        best = model;
        log.selected = true;
      }
    }
    result.log.push_back(log);
    if (on_epoch && !on_epoch(log)) break;
  }
  if (best) model = std::move(*best);
  for (auto* p : model.all_parameters()) p->grad.resize(0, 0);
  result.steps = step;
  return result;
}

template <class S>
Treebank parse_treebank(Model<S>& model, const Treebank& input, const std::string& lang, const LangvecMode& mode) {
  const auto fp = fixed_params(model, model.resolve(lang, mode));
  Treebank out = input;
  out.lang = lang;
  for (auto& s : out.sentences) predict_sentence(model, fp, s);
  return out;
}

template <class S>
AttachmentCounts evaluate(Model<S>& model, const Treebank& gold, const std::string& lang, const LangvecMode& mode) {
  return score_treebank(gold, parse_treebank(model, gold, lang, mode));
}

#define TYPAR_INSTANTIATE_TRAIN(S)                                                                     \
  template TrainResult<S> train(const TrainConfig&, const std::vector<Treebank>&,                      \
                                const std::vector<Treebank>&, const TypologyTable&, const EpochCallback&); \
  template Treebank parse_treebank(Model<S>&, const Treebank&, const std::string&, const LangvecMode&); \
  template AttachmentCounts evaluate(Model<S>&, const Treebank&, const std::string&, const LangvecMode&);

TYPAR_INSTANTIATE_TRAIN(float)
TYPAR_INSTANTIATE_TRAIN(double)

}  // namespace typar
