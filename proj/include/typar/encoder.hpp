#pragma once

#include <array>
#include <string>
#include <unordered_map>
#include <vector>

#include "typar/conllu.hpp"
#include "typar/layout.hpp"
#include "typar/tape.hpp"

namespace typar {

// Word-level vocabulary. Specials occupy the first four indices.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kMask = 2;
  static constexpr int kRoot = 3;

  Vocab();
  explicit Vocab(const std::vector<std::string>& tokens);  // includes the specials
  static Vocab build(const std::vector<Treebank>& treebanks);

  int add(const std::string& form);
  int index(const std::string& form) const;  // UNK when absent
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct EncoderShape {
  int layers = 4;
  int hidden = 128;
  int heads = 4;
  int ffn = 512;
  int maxlen = 128;
  int adapter = 32;
};

template <class S>
struct EncoderLayerParams {
  Parameter<S> wq, bq, wk, bk, wv, bv, wo, bo;
  Parameter<S> ln1_gain, ln1_bias;
  Parameter<S> w1, b1, w2, b2;
  Parameter<S> ln2_gain, ln2_bias;
};

// The frozen (or optionally trainable) transformer. Position embeddings start
// as sinusoids so that a randomly initialised, frozen backbone still exposes
// relative order.
template <class S>
struct Backbone {
  EncoderShape shape;
  Parameter<S> token_embedding;     // |V| x d
  Parameter<S> position_embedding;  // maxlen x d
  std::vector<EncoderLayerParams<S>> layers;

  static Backbone init(const EncoderShape& shape, int vocab_size, Rng& rng);
  std::vector<Parameter<S>*> parameters();
  void set_trainable(bool trainable);
  bool trainable() const { return token_embedding.trainable; }
};

template <class S>
struct AdapterSlot {
  Var<S> down_w, down_b, up_w, up_b;
};

// [layer][0] follows attention, [layer][1] follows the feedforward block.
template <class S>
using AdapterVars = std::vector<std::array<AdapterSlot<S>, 2>>;

// Per (layer, slot): down_w (d x a), down_b (1 x a), up_w (a x d), up_b (1 x d).
// Up-projections are zero-initialised.
ParamLayout adapter_layout(const EncoderShape& shape);

template <class S>
AdapterVars<S> unflatten_adapters(const Var<S>& flat, const EncoderShape& shape);

struct EncodeOptions {
  double mask_prob = 0;
  double dropout = 0;
  bool training = false;
};

// Row 0 is ROOT, row i the i-th word: token embedding + position embedding.
template <class S>
Var<S> embed_tokens(Tape<S>& tape, const Sentence& s, Backbone<S>& backbone, const Vocab& vocab,
                    const EncodeOptions& opts, Rng& rng);

// x + up(gelu(down(x)))
template <class S>
Var<S> adapter_apply(const Var<S>& x, const AdapterSlot<S>& slot);

// Post-LN transformer; each sublayer output goes through its adapter before
// the residual add and layer norm. `adapters` may be null (adapter-free).
// When `attention` is given, per-layer per-head attention matrices are appended.
template <class S>
Var<S> encode(Tape<S>& tape, const Sentence& s, Backbone<S>& backbone, const AdapterVars<S>* adapters,
              const Vocab& vocab, const EncodeOptions& opts, Rng& rng,
              std::vector<Matrix<S>>* attention = nullptr);

}  // namespace typar
