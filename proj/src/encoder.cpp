#include "typar/encoder.hpp"

#include <cmath>

#include "typar/ops.hpp"

namespace typar {

Vocab::Vocab() : Vocab(std::vector<std::string>{"<pad>", "<unk>", "<mask>", "<root>"}) {}

Vocab::Vocab(const std::vector<std::string>& tokens) {
  if (tokens.size() < 4) throw DataError("vocabulary is missing its special tokens");
  for (const auto& t : tokens) {
    if (!index_.emplace(t, static_cast<int>(tokens_.size())).second)
      throw DataError("duplicate vocabulary entry '" + t + "'");
    tokens_.push_back(t);
  }
}

Vocab Vocab::build(const std::vector<Treebank>& treebanks) {
  Vocab v;
  for (const auto& tb : treebanks)
    for (const auto& s : tb.sentences)
      for (const auto& t : s.tokens) v.add(t.form);
  return v;
}

int Vocab::add(const std::string& form) {
  auto [it, inserted] = index_.emplace(form, static_cast<int>(tokens_.size()));
  if (inserted) tokens_.push_back(form);
  return it->second;
}

int Vocab::index(const std::string& form) const {
  auto it = index_.find(form);
  return it == index_.end() ? kUnk : it->second;
}

namespace {

template <class S>
Matrix<S> normal_matrix(Eigen::Index r, Eigen::Index c, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix<S> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = S(dist(rng));
  return m;
}

template <class S>
Matrix<S> sinusoids(int maxlen, int d) {
  Matrix<S> m(maxlen, d);
  for (int pos = 0; pos < maxlen; ++pos)
    for (int i = 0; i < d; ++i) {
      const double rate = std::pow(10000.0, -double(2 * (i / 2)) / double(d));
      m(pos, i) = S(i % 2 == 0 ? std::sin(pos * rate) : std::cos(pos * rate));
    }
  return m;
}

}  // namespace

template <class S>
Backbone<S> Backbone<S>::init(const EncoderShape& shape, int vocab_size, Rng& rng) {
  if (shape.hidden % shape.heads != 0)
    throw UsageError("hidden size must be divisible by the number of heads");
  if (shape.adapter >= shape.hidden) throw UsageError("adapter size must be smaller than hidden size");
  const int d = shape.hidden, f = shape.ffn;
  Backbone b;
  b.shape = shape;
  b.token_embedding = {"backbone.token_embedding", normal_matrix<S>(vocab_size, d, 1.0, rng)};
  b.position_embedding = {"backbone.position_embedding", sinusoids<S>(shape.maxlen, d)};
  const double sd = 1.0 / std::sqrt(double(d));
  const double sf = 1.0 / std::sqrt(double(f));
  for (int l = 0; l < shape.layers; ++l) {
    const std::string p = "backbone.layer" + std::to_string(l) + ".";
    EncoderLayerParams<S> L;
    L.wq = {p + "wq", normal_matrix<S>(d, d, sd, rng)};
    L.bq = {p + "bq", Matrix<S>::Zero(1, d)};
    L.wk = {p + "wk", normal_matrix<S>(d, d, sd, rng)};
    L.bk = {p + "bk", Matrix<S>::Zero(1, d)};
    L.wv = {p + "wv", normal_matrix<S>(d, d, sd, rng)};
    L.bv = {p + "bv", Matrix<S>::Zero(1, d)};
    L.wo = {p + "wo", normal_matrix<S>(d, d, sd, rng)};
    L.bo = {p + "bo", Matrix<S>::Zero(1, d)};
    L.ln1_gain = {p + "ln1_gain", Matrix<S>::Ones(1, d)};
    L.ln1_bias = {p + "ln1_bias", Matrix<S>::Zero(1, d)};
    L.w1 = {p + "w1", normal_matrix<S>(d, f, sd, rng)};
    L.b1 = {p + "b1", Matrix<S>::Zero(1, f)};
    L.w2 = {p + "w2", normal_matrix<S>(f, d, sf, rng)};
    L.b2 = {p + "b2", Matrix<S>::Zero(1, d)};
    L.ln2_gain = {p + "ln2_gain", Matrix<S>::Ones(1, d)};
    L.ln2_bias = {p + "ln2_bias", Matrix<S>::Zero(1, d)};
    b.layers.push_back(std::move(L));
  }
  b.set_trainable(false);
  return b;
}

template <class S>
std::vector<Parameter<S>*> Backbone<S>::parameters() {
  std::vector<Parameter<S>*> out{&token_embedding, &position_embedding};
  for (auto& L : layers)
    for (auto* p : {&L.wq, &L.bq, &L.wk, &L.bk, &L.wv, &L.bv, &L.wo, &L.bo, &L.ln1_gain, &L.ln1_bias,
                    &L.w1, &L.b1, &L.w2, &L.b2, &L.ln2_gain, &L.ln2_bias})
      out.push_back(p);
  return out;
}

template <class S>
void Backbone<S>::set_trainable(bool trainable) {
  for (auto* p : parameters()) p->trainable = trainable;
}

ParamLayout adapter_layout(const EncoderShape& shape) {
  ParamLayout layout;
  const int d = shape.hidden, a = shape.adapter;
  for (int l = 0; l < shape.layers; ++l)
    for (int slot = 0; slot < 2; ++slot) {
      const std::string p = "layer" + std::to_string(l) + (slot == 0 ? ".attn_adapter." : ".ffn_adapter.");
      layout.add(p + "down_w", d, a, Init::normal, 1.0 / std::sqrt(double(d)));
      layout.add(p + "down_b", 1, a);
      layout.add(p + "up_w", a, d);
      layout.add(p + "up_b", 1, d);
    }
  return layout;
}

template <class S>
AdapterVars<S> unflatten_adapters(const Var<S>& flat, const EncoderShape& shape) {
  auto parts = adapter_layout(shape).unflatten(flat);
  AdapterVars<S> out(shape.layers);
  std::size_t k = 0;
  for (int l = 0; l < shape.layers; ++l)
    for (int slot = 0; slot < 2; ++slot) {
      auto& a = out[l][slot];
      a.down_w = parts[k++];
      a.down_b = parts[k++];
      a.up_w = parts[k++];
      a.up_b = parts[k++];
    }
  return out;
}

template <class S>
Var<S> embed_tokens(Tape<S>& tape, const Sentence& s, Backbone<S>& backbone, const Vocab& vocab,
                    const EncodeOptions& opts, Rng& rng) {
  const int n = static_cast<int>(s.size());
  if (n + 1 > backbone.shape.maxlen)
    throw DataError("sentence of " + std::to_string(n) + " words exceeds maximum length " +
                    std::to_string(backbone.shape.maxlen - 1));
  std::vector<int> ids{Vocab::kRoot};
  std::vector<int> positions{0};
  const bool masking = opts.training && opts.mask_prob > 0;
  std::bernoulli_distribution mask(masking ? opts.mask_prob : 0.0);
  for (int i = 0; i < n; ++i) {
    ids.push_back(masking && mask(rng) ? Vocab::kMask : vocab.index(s.tokens[i].form));
    positions.push_back(i + 1);
  }
  auto words = gather_rows(tape.param(backbone.token_embedding), std::move(ids));
  auto pos = gather_rows(tape.param(backbone.position_embedding), std::move(positions));
  return add(words, pos);
}

template <class S>
Var<S> adapter_apply(const Var<S>& x, const AdapterSlot<S>& slot) {
  auto h = gelu(add_row(matmul(x, slot.down_w), slot.down_b));
  return add(x, add_row(matmul(h, slot.up_w), slot.up_b));
}

namespace {

template <class S>
Var<S> self_attention(Tape<S>& tape, const Var<S>& x, EncoderLayerParams<S>& L, int heads,
                      std::vector<Matrix<S>>* attention) {
  auto q = add_row(matmul(x, tape.param(L.wq)), tape.param(L.bq));
  auto k = add_row(matmul(x, tape.param(L.wk)), tape.param(L.bk));
  auto v = add_row(matmul(x, tape.param(L.wv)), tape.param(L.bv));
  const Eigen::Index dh = x.cols() / heads;
  const S inv_sqrt = S(1.0 / std::sqrt(double(dh)));
  std::vector<Var<S>> ctx;
  for (int h = 0; h < heads; ++h) {
    auto qh = slice_cols(q, h * dh, dh);
    auto kh = slice_cols(k, h * dh, dh);
    auto vh = slice_cols(v, h * dh, dh);
    auto p = softmax_rows(scale(matmul_nt(qh, kh), inv_sqrt));
    if (attention) attention->push_back(p.value());
    ctx.push_back(matmul(p, vh));
  }
  auto joined = heads == 1 ? ctx.front() : concat_cols<S>(ctx);
  return add_row(matmul(joined, tape.param(L.wo)), tape.param(L.bo));
}

}  // namespace

template <class S>
Var<S> encode(Tape<S>& tape, const Sentence& s, Backbone<S>& backbone, const AdapterVars<S>* adapters,
              const Vocab& vocab, const EncodeOptions& opts, Rng& rng, std::vector<Matrix<S>>* attention) {
  if (adapters && static_cast<int>(adapters->size()) != backbone.shape.layers)
    throw InvariantError("encode: adapter layer count does not match backbone");
  const double drop = opts.training ? opts.dropout : 0.0;
  auto x = embed_tokens(tape, s, backbone, vocab, opts, rng);
  for (int l = 0; l < backbone.shape.layers; ++l) {
    auto& L = backbone.layers[l];
    auto a = dropout(self_attention(tape, x, L, backbone.shape.heads, attention), drop, rng);
    if (adapters) a = adapter_apply(a, (*adapters)[l][0]);
    auto h = layer_norm_rows(add(x, a), tape.param(L.ln1_gain), tape.param(L.ln1_bias));
    auto f = add_row(matmul(gelu(add_row(matmul(h, tape.param(L.w1)), tape.param(L.b1))), tape.param(L.w2)),
                     tape.param(L.b2));
    f = dropout(f, drop, rng);
    if (adapters) f = adapter_apply(f, (*adapters)[l][1]);
    x = layer_norm_rows(add(h, f), tape.param(L.ln2_gain), tape.param(L.ln2_bias));
  }
  return x;
}

#define TYPAR_INSTANTIATE_ENCODER(S)                                                                \
  template struct Backbone<S>;                                                                      \
  template AdapterVars<S> unflatten_adapters(const Var<S>&, const EncoderShape&);                  \
  template Var<S> embed_tokens(Tape<S>&, const Sentence&, Backbone<S>&, const Vocab&,               \
                               const EncodeOptions&, Rng&);                                         \
  template Var<S> adapter_apply(const Var<S>&, const AdapterSlot<S>&);                             \
  template Var<S> encode(Tape<S>&, const Sentence&, Backbone<S>&, const AdapterVars<S>*, const Vocab&, \
                         const EncodeOptions&, Rng&, std::vector<Matrix<S>>*);

TYPAR_INSTANTIATE_ENCODER(float)
TYPAR_INSTANTIATE_ENCODER(double)

}  // namespace typar
