#pragma once

#include <cstdint>
#include <string>

#include "typar/biaffine.hpp"
#include "typar/encoder.hpp"
#include "typar/optim.hpp"

namespace typar {

// Which parts of the network are produced by the parameter generator.
// off is the plain adapter baseline: everything shared, no language input.
enum class CpgMode { off, adapters, biaffine, both };
enum class BackboneMode { frozen, trainable };
// How training languages obtain their embedding.
enum class TrainLangvec { typology, learned };
enum class Precision { f32, f64 };

struct TrainConfig {
  std::uint64_t seed = 1;
  int epochs = 80;
  int batch_size = 32;
  double lr = 1e-3;
  double backbone_lr = 5e-5;  // only used with backbone=trainable
  double warmup_ratio = 1.0 / 80.0;
  long warmup_steps = 0;  // overrides warmup_ratio when > 0
  long max_steps = 0;     // 0: no cap
  double dropout = 0.5;
  double encoder_dropout = 0.2;
  double mask_prob = 0.2;
  double arc_smoothing = 0.03;
  double label_smoothing = 0.03;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double weight_decay = 0.01;
  double adam_eps = 1e-8;

  int layers = 4;
  int hidden = 128;
  int heads = 4;
  int ffn = 512;
  int maxlen = 128;
  int adapter = 32;
  int arc_dim = 768;
  int tag_dim = 256;
  int langvec_dim = 32;
  int langnet_hidden = 64;

  CpgMode cpg_mode = CpgMode::both;
  BackboneMode backbone = BackboneMode::frozen;
  TrainLangvec langvec = TrainLangvec::typology;
  Precision precision = Precision::f32;

  int max_sentences = 0;  // per-treebank cap on training sentences, 0: none
  bool select_on_dev = true;

  EncoderShape encoder_shape() const { return {layers, hidden, heads, ffn, maxlen, adapter}; }
  BiaffineDims biaffine_dims(int labels) const { return {hidden, arc_dim, tag_dim, labels}; }
  AdamOptions adam() const { return {beta1, beta2, weight_decay, adam_eps}; }
  long warmup_for(long total_steps) const;

  void validate() const;  // throws UsageError
  void set(const std::string& key, const std::string& value);
  void apply_preset(const std::string& name);  // desk | paper | compact
};

// key=value lines; '#' starts a comment. A "preset" key is applied before
// the other keys regardless of its position.
TrainConfig parse_config(const std::string& text);
TrainConfig load_config(const std::string& path);
std::string write_config(const TrainConfig& c);

std::string to_string(CpgMode m);
std::string to_string(BackboneMode m);
std::string to_string(TrainLangvec m);
std::string to_string(Precision p);

}  // namespace typar
