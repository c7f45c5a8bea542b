#include "typar/model.hpp"

#include <algorithm>

#include "typar/error.hpp"
#include "typar/mst.hpp"
#include "typar/ops.hpp"

namespace typar {

template <class S>
Model<S> Model<S>::create(const TrainConfig& config, Vocab vocab, std::vector<std::string> labels,
                          std::vector<std::string> languages, TypologyTable typology, Rng& rng) {
  config.validate();
  if (labels.empty()) throw DataError("empty label inventory");
  Model m;
  m.config = config;
  m.vocab = std::move(vocab);
  m.labels = std::move(labels);
  m.languages = std::move(languages);
  m.typology = std::move(typology);

  m.backbone = Backbone<S>::init(m.shape(), m.vocab.size(), rng);
  m.backbone.set_trainable(config.backbone == BackboneMode::trainable);
  const auto ad = adapter_layout(m.shape());
  const auto bf = biaffine_layout(m.dims());
  const int dim = config.langvec_dim;
  if (m.uses_typology()) m.langnet = LangEmbedNet<S>::init(config.langnet_hidden, dim, rng);
  if (m.conditioned())
    m.generator = GeneratorWeights<S>::init(m.generates_adapters() ? &ad : nullptr,
                                            m.generates_biaffine() ? &bf : nullptr, dim, rng);
  if (!m.generates_adapters()) m.shared_adapters = {"shared.adapters", ad.template sample<S>(rng)};
  if (!m.generates_biaffine()) m.shared_biaffine = {"shared.biaffine", bf.template sample<S>(rng)};
  if (m.conditioned() && config.langvec == TrainLangvec::learned) {
    std::normal_distribution<double> dist(0.0, 1.0);
    for (const auto& code : m.languages) {
      Matrix<S> v(1, dim);
      for (int i = 0; i < dim; ++i) v(0, i) = S(dist(rng));
      m.learned.emplace(code, Parameter<S>("learned." + code, std::move(v)));
    }
  }
  return m;
}

template <class S>
int Model<S>::label_id(const std::string& deprel) const {
  auto it = std::find(labels.begin(), labels.end(), deprel);
  if (it == labels.end()) throw DataError("label '" + deprel + "' is not in the model's label inventory");
  return static_cast<int>(it - labels.begin());
}

template <class S>
std::vector<Parameter<S>*> Model<S>::head_parameters() {
  std::vector<Parameter<S>*> out;
  auto push = [&out](Parameter<S>& p) {
    if (p.value.size() > 0) out.push_back(&p);
  };
  for (auto* p : langnet.parameters()) push(*p);
  push(generator.adapters);
  push(generator.biaffine);
  push(shared_adapters);
  push(shared_biaffine);
  for (auto& [code, p] : learned) push(p);
  return out;
}

template <class S>
std::vector<Parameter<S>*> Model<S>::all_parameters() {
  auto out = backbone.parameters();
  for (auto* p : head_parameters()) out.push_back(p);
  return out;
}

template <class S>
std::vector<const Parameter<S>*> Model<S>::all_parameters() const {
  auto ptrs = const_cast<Model*>(this)->all_parameters();
  return {ptrs.begin(), ptrs.end()};
}

template <class S>
Eigen::Index Model<S>::trainable_size() const {
  Eigen::Index n = 0;
  for (const auto* p : all_parameters())
    if (p->trainable) n += p->size();
  return n;
}

template <class S>
LanguageStore Model<S>::language_store() const {
  LanguageStore store;
  if (!conditioned()) return store;
  for (const auto& code : languages) {
    if (config.langvec == TrainLangvec::learned) {
      store[code] = {learned.at(code).value.template cast<double>(), Provenance::learned, {}};
    } else {
      auto e = language_embedding(typology.get(code), langnet);
      store[code] = std::move(e);
    }
  }
  return store;
}

template <class S>
std::optional<LanguageEmbedding> Model<S>::resolve(const std::string& code, const LangvecMode& mode) const {
  if (!conditioned()) return std::nullopt;
  if (mode.kind == LangvecMode::Kind::typology && !uses_typology())
    throw UsageError("this model was trained with learned language vectors and has no typology network; "
                     "use --langvec-mode learned, centroid or proxy:<code>");
  return resolve_language_vector(code, mode, typology, langnet, language_store());
}

template <class S>
FixedParams<S> fixed_params(const Model<S>& m, const std::optional<LanguageEmbedding>& le) {
  FixedParams<S> fp;
  if (m.conditioned() && !le) throw InvariantError("a conditioned model needs a language embedding");
  std::optional<GeneratedParams<S>> gen;
  if (m.conditioned()) gen = generate_params(le->values, m.generator);
  fp.adapters = m.generates_adapters() ? *gen->adapters : m.shared_adapters.value;
  fp.biaffine = m.generates_biaffine() ? *gen->biaffine : m.shared_biaffine.value;
  return fp;
}

template <class S>
BoundParams<S> bind_training(Tape<S>& tape, Model<S>& m, const std::string& lang) {
  Var<S> adapters, biaffine;
  if (m.conditioned()) {
    Var<S> le;
    if (m.uses_typology()) {
      le = language_embedding(tape, m.typology.get(lang), m.langnet);
    } else {
      auto it = m.learned.find(lang);
      if (it == m.learned.end()) throw MissingLanguageError("no learned vector for language '" + lang + "'");
      le = tape.param(it->second);
    }
    auto gen = generate_params(tape, le, m.generator);
    if (m.generates_adapters()) adapters = gen.adapters;
    if (m.generates_biaffine()) biaffine = gen.biaffine;
  }
  if (!adapters) adapters = tape.param(m.shared_adapters);
  if (!biaffine) biaffine = tape.param(m.shared_biaffine);
  return {unflatten_adapters(adapters, m.shape()), unflatten_biaffine(biaffine, m.dims())};
}

template <class S>
BoundParams<S> bind_fixed(Tape<S>& tape, const Model<S>& m, const FixedParams<S>& fp) {
  return {unflatten_adapters(tape.constant_ref(fp.adapters), m.shape()),
          unflatten_biaffine(tape.constant_ref(fp.biaffine), m.dims())};
}

template <class S>
std::vector<int> label_ids(const Model<S>& m, const Sentence& s) {
  std::vector<int> out;
  out.reserve(s.size());
  for (const auto& t : s.tokens) out.push_back(m.label_id(t.deprel));
  return out;
}

template <class S>
Var<S> sentence_loss(Tape<S>& tape, Model<S>& m, const BoundParams<S>& p, const Sentence& s,
                     std::span<const int> labels, Rng& rng, bool training) {
  const auto& c = m.config;
  EncodeOptions eo;
  if (training) eo = {c.mask_prob, c.encoder_dropout, true};
  auto r = encode(tape, s, m.backbone, &p.adapters, m.vocab, eo, rng);
  const double drop = training ? c.dropout : 0.0;
  Rng* dr = training ? &rng : nullptr;
  auto ah = project(r, Projection::arc_head, p.biaffine, drop, dr);
  auto at = project(r, Projection::arc_tail, p.biaffine, drop, dr);
  auto lh = project(r, Projection::label_head, p.biaffine, drop, dr);
  auto lt = project(r, Projection::label_tail, p.biaffine, drop, dr);
  const auto heads = heads_of(s);
  auto arcs = score_arcs(ah, at, p.biaffine);
  auto labs = score_labels(lh, lt, heads, p.biaffine);
  return parse_loss(arcs, labs, heads, labels, c.arc_smoothing, c.label_smoothing);
}

template <class S>
void predict_sentence(Model<S>& m, const FixedParams<S>& fp, Sentence& s) {
  if (s.size() == 0) return;
  Tape<S> tape(std::is_same_v<S, double>, false);
  auto p = bind_fixed(tape, m, fp);
  Rng unused(0);
  auto r = encode(tape, s, m.backbone, &p.adapters, m.vocab, {}, unused);
  auto ah = project(r, Projection::arc_head, p.biaffine);
  auto at = project(r, Projection::arc_tail, p.biaffine);
  const auto heads = decode_mst(arc_score_matrix(score_arcs(ah, at, p.biaffine).value()));
  auto lh = project(r, Projection::label_head, p.biaffine);
  auto lt = project(r, Projection::label_tail, p.biaffine);
  const Eigen::MatrixXd labs = score_labels(lh, lt, heads, p.biaffine).value().template cast<double>();
  const auto best = argmax_rows(labs);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s.tokens[i].head = heads[i];
    s.tokens[i].deprel = m.labels[best[i]];
  }
}

#define TYPAR_INSTANTIATE_MODEL(S)                                                                    \
  template struct Model<S>;                                                                           \
  template FixedParams<S> fixed_params(const Model<S>&, const std::optional<LanguageEmbedding>&);    \
  template BoundParams<S> bind_training(Tape<S>&, Model<S>&, const std::string&);                    \
  template BoundParams<S> bind_fixed(Tape<S>&, const Model<S>&, const FixedParams<S>&);              \
  template std::vector<int> label_ids(const Model<S>&, const Sentence&);                             \
  template Var<S> sentence_loss(Tape<S>&, Model<S>&, const BoundParams<S>&, const Sentence&,         \
                                std::span<const int>, Rng&, bool);                                    \
  template void predict_sentence(Model<S>&, const FixedParams<S>&, Sentence&);

TYPAR_INSTANTIATE_MODEL(float)
TYPAR_INSTANTIATE_MODEL(double)

}  // namespace typar
