#include "typar/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "typar/error.hpp"

namespace typar {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw UsageError("config key '" + key + "': cannot parse '" + v + "'");
  return out;
}

// "1/80" is accepted for ratios
double parse_real(const std::string& key, const std::string& v) {
  const auto slash = v.find('/');
  if (slash == std::string::npos) return parse_number<double>(key, v);
  const double den = parse_number<double>(key, v.substr(slash + 1));
  if (den == 0) throw UsageError("config key '" + key + "': division by zero");
  return parse_number<double>(key, v.substr(0, slash)) / den;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::string fmt(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

}  // namespace

std::string to_string(CpgMode m) {
  switch (m) {
    case CpgMode::off: return "off";
    case CpgMode::adapters: return "adapters";
    case CpgMode::biaffine: return "biaffine";
    case CpgMode::both: return "both";
  }
  return "?";
}

std::string to_string(BackboneMode m) { return m == BackboneMode::frozen ? "frozen" : "trainable"; }
std::string to_string(TrainLangvec m) { return m == TrainLangvec::typology ? "typology" : "learned"; }
std::string to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

long TrainConfig::warmup_for(long total_steps) const {
  if (warmup_steps > 0) return warmup_steps;
  return std::max(1L, static_cast<long>(double(total_steps) * warmup_ratio));
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw UsageError("invalid config: " + what);
  };
  require(epochs > 0, "epochs must be positive");
  require(batch_size > 0, "batch_size must be positive");
  require(lr > 0 && backbone_lr >= 0, "learning rates must be positive");
  require(warmup_ratio > 0 && warmup_ratio <= 1, "warmup_ratio must be in (0, 1]");
  require(warmup_steps >= 0 && max_steps >= 0, "step counts must be non-negative");
  require(dropout >= 0 && dropout < 1 && encoder_dropout >= 0 && encoder_dropout < 1, "dropout must be in [0, 1)");
  require(mask_prob >= 0 && mask_prob <= 1, "mask_prob must be in [0, 1]");
  require(arc_smoothing >= 0 && arc_smoothing < 1 && label_smoothing >= 0 && label_smoothing < 1,
          "smoothing must be in [0, 1)");
  require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, "Adam betas must be in [0, 1)");
  require(weight_decay >= 0 && adam_eps > 0, "weight_decay must be >= 0 and adam_eps > 0");
  require(layers > 0 && hidden > 0 && heads > 0 && ffn > 0 && maxlen > 1, "encoder sizes must be positive");
  require(hidden % heads == 0, "hidden must be divisible by heads");
  require(adapter > 0 && adapter < hidden, "adapter must be in (0, hidden)");
  require(arc_dim > 0 && tag_dim > 0 && langvec_dim > 0 && langnet_hidden > 0, "parser sizes must be positive");
  require(max_sentences >= 0, "max_sentences must be >= 0");
}

void TrainConfig::apply_preset(const std::string& name) {
  if (name == "desk") {
    layers = 4; hidden = 128; heads = 4; ffn = 512; maxlen = 128; adapter = 32;
  } else if (name == "paper") {
    layers = 12; hidden = 768; heads = 12; ffn = 3072; maxlen = 512; adapter = 256;
    arc_dim = 768; tag_dim = 256; langvec_dim = 32;
  } else if (name == "compact") {
    layers = 2; hidden = 64; heads = 2; ffn = 128; maxlen = 64; adapter = 16;
    arc_dim = 128; tag_dim = 64; langvec_dim = 8; langnet_hidden = 32;
  } else {
    throw UsageError("unknown preset '" + name + "' (expected desk, paper or compact)");
  }
}

void TrainConfig::set(const std::string& key, const std::string& v) {
  auto& c = *this;
  static const std::map<std::string, std::function<void(TrainConfig&, const std::string&, const std::string&)>>
      setters = {
          {"seed", [](auto& c, auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
          {"epochs", [](auto& c, auto& k, auto& v) { c.epochs = parse_number<int>(k, v); }},
          {"batch_size", [](auto& c, auto& k, auto& v) { c.batch_size = parse_number<int>(k, v); }},
          {"lr", [](auto& c, auto& k, auto& v) { c.lr = parse_real(k, v); }},
          {"backbone_lr", [](auto& c, auto& k, auto& v) { c.backbone_lr = parse_real(k, v); }},
          {"warmup_ratio", [](auto& c, auto& k, auto& v) { c.warmup_ratio = parse_real(k, v); }},
          {"warmup_steps", [](auto& c, auto& k, auto& v) { c.warmup_steps = parse_number<long>(k, v); }},
          {"max_steps", [](auto& c, auto& k, auto& v) { c.max_steps = parse_number<long>(k, v); }},
          {"dropout", [](auto& c, auto& k, auto& v) { c.dropout = parse_real(k, v); }},
          {"encoder_dropout", [](auto& c, auto& k, auto& v) { c.encoder_dropout = parse_real(k, v); }},
          {"mask_prob", [](auto& c, auto& k, auto& v) { c.mask_prob = parse_real(k, v); }},
          {"arc_smoothing", [](auto& c, auto& k, auto& v) { c.arc_smoothing = parse_real(k, v); }},
          {"label_smoothing", [](auto& c, auto& k, auto& v) { c.label_smoothing = parse_real(k, v); }},
          {"beta1", [](auto& c, auto& k, auto& v) { c.beta1 = parse_real(k, v); }},
          {"beta2", [](auto& c, auto& k, auto& v) { c.beta2 = parse_real(k, v); }},
          {"weight_decay", [](auto& c, auto& k, auto& v) { c.weight_decay = parse_real(k, v); }},
          {"adam_eps", [](auto& c, auto& k, auto& v) { c.adam_eps = parse_real(k, v); }},
          {"layers", [](auto& c, auto& k, auto& v) { c.layers = parse_number<int>(k, v); }},
          {"hidden", [](auto& c, auto& k, auto& v) { c.hidden = parse_number<int>(k, v); }},
          {"heads", [](auto& c, auto& k, auto& v) { c.heads = parse_number<int>(k, v); }},
          {"ffn", [](auto& c, auto& k, auto& v) { c.ffn = parse_number<int>(k, v); }},
          {"maxlen", [](auto& c, auto& k, auto& v) { c.maxlen = parse_number<int>(k, v); }},
          {"adapter", [](auto& c, auto& k, auto& v) { c.adapter = parse_number<int>(k, v); }},
          {"arc_dim", [](auto& c, auto& k, auto& v) { c.arc_dim = parse_number<int>(k, v); }},
          {"tag_dim", [](auto& c, auto& k, auto& v) { c.tag_dim = parse_number<int>(k, v); }},
          {"langvec_dim", [](auto& c, auto& k, auto& v) { c.langvec_dim = parse_number<int>(k, v); }},
          {"langnet_hidden", [](auto& c, auto& k, auto& v) { c.langnet_hidden = parse_number<int>(k, v); }},
          {"max_sentences", [](auto& c, auto& k, auto& v) { c.max_sentences = parse_number<int>(k, v); }},
          {"select_on_dev", [](auto& c, auto& k, auto& v) { c.select_on_dev = parse_bool(k, v); }},
          {"cpg_mode",
           [](auto& c, auto& k, auto& v) {
             if (v == "off") c.cpg_mode = CpgMode::off;
             else if (v == "adapters") c.cpg_mode = CpgMode::adapters;
             else if (v == "biaffine") c.cpg_mode = CpgMode::biaffine;
             else if (v == "both") c.cpg_mode = CpgMode::both;
             else throw UsageError("config key '" + k + "': expected off, adapters, biaffine or both");
           }},
          {"backbone",
           [](auto& c, auto& k, auto& v) {
             if (v == "frozen") c.backbone = BackboneMode::frozen;
             else if (v == "trainable") c.backbone = BackboneMode::trainable;
             else throw UsageError("config key '" + k + "': expected frozen or trainable");
           }},
          {"langvec_mode",
           [](auto& c, auto& k, auto& v) {
             if (v == "typology") c.langvec = TrainLangvec::typology;
             else if (v == "learned") c.langvec = TrainLangvec::learned;
             else throw UsageError("config key '" + k + "': expected typology or learned");
           }},
          {"precision",
           [](auto& c, auto& k, auto& v) {
             if (v == "f32") c.precision = Precision::f32;
             else if (v == "f64") c.precision = Precision::f64;
             else throw UsageError("config key '" + k + "': expected f32 or f64");
           }},
          {"preset", [](auto& c, auto&, auto& v) { c.apply_preset(v); }},
      };
  auto it = setters.find(key);
  if (it == setters.end()) throw UsageError("unknown config key '" + key + "'");
  it->second(c, key, v);
}

TrainConfig parse_config(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
    kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  TrainConfig c;
  for (const auto& [k, v] : kv)
    if (k == "preset") c.apply_preset(v);
  for (const auto& [k, v] : kv)
    if (k != "preset") c.set(k, v);
  c.validate();
  return c;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string write_config(const TrainConfig& c) {
  std::ostringstream o;
  o << "seed=" << c.seed << "\n"
    << "epochs=" << c.epochs << "\n"
    << "batch_size=" << c.batch_size << "\n"
    << "lr=" << fmt(c.lr) << "\n"
    << "backbone_lr=" << fmt(c.backbone_lr) << "\n"
    << "warmup_ratio=" << fmt(c.warmup_ratio) << "\n"
    << "warmup_steps=" << c.warmup_steps << "\n"
    << "max_steps=" << c.max_steps << "\n"
    << "dropout=" << fmt(c.dropout) << "\n"
    << "encoder_dropout=" << fmt(c.encoder_dropout) << "\n"
    << "mask_prob=" << fmt(c.mask_prob) << "\n"
    << "arc_smoothing=" << fmt(c.arc_smoothing) << "\n"
    << "label_smoothing=" << fmt(c.label_smoothing) << "\n"
    << "beta1=" << fmt(c.beta1) << "\n"
    << "beta2=" << fmt(c.beta2) << "\n"
    << "weight_decay=" << fmt(c.weight_decay) << "\n"
    << "adam_eps=" << fmt(c.adam_eps) << "\n"
    << "layers=" << c.layers << "\n"
    << "hidden=" << c.hidden << "\n"
    << "heads=" << c.heads << "\n"
    << "ffn=" << c.ffn << "\n"
    << "maxlen=" << c.maxlen << "\n"
    << "adapter=" << c.adapter << "\n"
    << "arc_dim=" << c.arc_dim << "\n"
    << "tag_dim=" << c.tag_dim << "\n"
    << "langvec_dim=" << c.langvec_dim << "\n"
    << "langnet_hidden=" << c.langnet_hidden << "\n"
    << "cpg_mode=" << to_string(c.cpg_mode) << "\n"
    << "backbone=" << to_string(c.backbone) << "\n"
    << "langvec_mode=" << to_string(c.langvec) << "\n"
    << "precision=" << to_string(c.precision) << "\n"
    << "max_sentences=" << c.max_sentences << "\n"
    << "select_on_dev=" << (c.select_on_dev ? "true" : "false") << "\n";
  return o.str();
}

}  // namespace typar
