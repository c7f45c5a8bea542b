// Command-line front end: train, parse, eval, significance, export-langvec,
// report-features. Exit codes: 0 success, 1 usage, 2 data, 3 invariant.
#include <chrono>
#include <filesystem>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "typar/bundle.hpp"
#include "typar/conllu.hpp"
#include "typar/cpg.hpp"
#include "typar/error.hpp"
#include "typar/metrics.hpp"
#include "typar/train.hpp"

using namespace typar;

namespace {

std::pair<std::string, std::string> split_code_path(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size())
    throw UsageError("expected code=path, got '" + arg + "'");
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

std::vector<Treebank> read_treebanks(const std::vector<std::string>& args) {
  std::vector<Treebank> out;
  for (const auto& a : args) {
    auto [code, path] = split_code_path(a);
    out.push_back(read_conllu(path, code));
  }
  return out;
}

// Typology vectors given on the command line extend (or refresh) the
// model's snapshot, so that languages unknown at training time can be used.
template <class S>
void extend_typology(Model<S>& m, const std::string& path) {
  if (path.empty()) return;
  TypologyTable merged;
  const auto extra = load_typology(path);
  for (const auto& [code, v] : extra.entries()) merged.insert(code, v);
  for (const auto& [code, v] : m.typology.entries())
    if (!merged.contains(code)) merged.insert(code, v);
  merged.set_feature_names(m.typology.feature_names());
  m.typology = std::move(merged);
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
}

std::string fixed2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

int run_train(const std::string& config_path, const std::vector<std::string>& tb_args,
              const std::vector<std::string>& dev_args, const std::string& typology_path, const std::string& out) {
  TrainConfig config = config_path.empty() ? TrainConfig{} : load_config(config_path);
  const auto train_sets = read_treebanks(tb_args);
  const auto dev_sets = read_treebanks(dev_args);
  TypologyTable typology;
  if (!typology_path.empty()) typology = load_typology(typology_path);
  const auto start = std::chrono::steady_clock::now();
  auto on_epoch = [&](const EpochLog& log) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cerr << "epoch " << log.epoch << " steps " << log.steps << " loss " << log.mean_loss;
    for (const auto& [lang, las] : log.dev_las) std::cerr << " dev_las[" << lang << "] " << fixed2(las);
    if (log.dev_macro_las) std::cerr << " dev_macro_las " << fixed2(*log.dev_macro_las);
    if (log.selected) std::cerr << " *";
    std::cerr << " time " << fixed2(secs) << "s\n";
    return true;
  };
  auto go = [&](auto tag) {
    using S = decltype(tag);
    auto result = train<S>(config, train_sets, dev_sets, typology, on_epoch);
    // --out names a directory unless it is given as a .json manifest path
    if (std::filesystem::path(out).extension() != ".json") std::filesystem::create_directories(out);
    save_model(result.model, out);
    std::cerr << "saved " << manifest_path(out) << " (" << result.steps << " steps, "
              << result.model.trainable_size() << " trainable parameters)\n";
  };
  if (config.precision == Precision::f64)
    go(double{});
  else
    go(float{});
  return 0;
}

int run_parse(const std::string& model_path, const std::string& input, const std::string& lang,
              const std::string& mode_text, const std::string& typology, const std::string& output) {
  const auto mode = LangvecMode::parse(mode_text);
  auto any = load_model(model_path);
  ConlluOptions raw;
  raw.require_heads = false;
  const auto tb = read_conllu(input, lang, raw);
  std::visit(
      [&](auto& m) {
        extend_typology(m, typology);
        write_output(output, write_conllu(parse_treebank(m, tb, lang, mode)));
      },
      any);
  return 0;
}

int run_eval(const std::string& model_path, const std::string& gold_path, const std::string& lang,
             const std::string& mode_text, const std::string& typology) {
  const auto mode = LangvecMode::parse(mode_text);
  auto any = load_model(model_path);
  const auto gold = read_conllu(gold_path, lang);
  for (const auto& s : gold.sentences) {
    auto v = validate_tree(s);
    if (!v.ok()) throw DataError("gold tree is invalid: " + v.message());
  }
  std::visit(
      [&](auto& m) {
        extend_typology(m, typology);
        const auto c = evaluate(m, gold, lang, mode);
        std::cout << "lang\tmode\twords\tUAS\tLAS\n"
                  << lang << '\t' << mode.str() << '\t' << c.words << '\t' << fixed2(c.uas()) << '\t'
                  << fixed2(c.las()) << '\n';
      },
      any);
  return 0;
}

int run_significance(const std::string& gold_path, const std::string& a_path, const std::string& b_path, int iters,
                     std::uint64_t seed) {
  const auto gold = read_conllu(gold_path, "");
  const auto a = read_conllu(a_path, "");
  const auto b = read_conllu(b_path, "");
  const auto ca = per_sentence_counts(gold, a);
  const auto cb = per_sentence_counts(gold, b);
  AttachmentCounts ta, tb;
  for (const auto& c : ca) ta += c;
  for (const auto& c : cb) tb += c;
  const double p = bootstrap_significance(ca, cb, iters, seed);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", p);
  std::cout << "sentences\t" << ca.size() << "\nLAS_A\t" << fixed2(ta.las()) << "\nLAS_B\t" << fixed2(tb.las())
            << "\niterations\t" << iters << "\np_value\t" << buf << '\n';
  return 0;
}

int run_export(const std::string& model_path, const std::string& out) {
  auto any = load_model(model_path);
  std::visit(
      [&](auto& m) {
        if (!m.conditioned()) throw UsageError("this model has no language embeddings (cpg_mode=off)");
        std::vector<std::pair<std::string, LanguageEmbedding>> rows;
        auto store = m.language_store();
        for (const auto& code : m.languages) rows.emplace_back(code, store.at(code));
        if (m.uses_typology())
          for (const auto& [code, v] : m.typology.entries())
            if (!store.count(code)) rows.emplace_back(code, language_embedding(v, m.langnet));
        write_output(out, write_language_embeddings(rows));
      },
      any);
  return 0;
}

int run_report(const std::string& model_path) {
  auto any = load_model(model_path);
  std::visit(
      [&](auto& m) {
        if (!m.uses_typology())
          throw UsageError("feature report needs a model conditioned on typology vectors");
        const auto r = feature_weight_report(m.langnet);
        const auto slices = feature_group_slices();
        const char* names[] = {"syntax", "phonology", "inventory"};
        std::cout << "group\tfeatures\tmean_weight\n";
        for (int g = 0; g < 3; ++g) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.6g", r[g]);
          std::cout << names[g] << '\t' << slices[g].size() << '\t' << buf << '\n';
        }
      },
      any);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"typology-conditioned multilingual dependency parser"};
  app.require_subcommand(1);

  std::string config, typology, out, model, input, lang, mode = "typology", output, gold, pred_a, pred_b;
  std::vector<std::string> treebanks, devs;
  int iters = 10000;
  std::uint64_t seed = 1;

  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--config", config, "key=value configuration file");
  train_cmd->add_option("--treebank", treebanks, "training treebank as code=path")->required();
  train_cmd->add_option("--dev", devs, "development treebank as code=path");
  train_cmd->add_option("--typology", typology, "typology vectors (code<TAB>v1,...,v289)");
  train_cmd->add_option("--out", out, "output directory or manifest path")->required();

  auto add_model_opts = [&](CLI::App* c) {
    c->add_option("--model", model, "model manifest or directory")->required();
    c->add_option("--lang", lang, "language code")->required();
    c->add_option("--langvec-mode", mode, "typology | learned | centroid | proxy:<code>");
    c->add_option("--typology", typology, "extra typology vectors for unseen languages");
  };
  auto* parse_cmd = app.add_subcommand("parse", "parse a CoNLL-U file");
  add_model_opts(parse_cmd);
  parse_cmd->add_option("--input", input, "CoNLL-U input")->required();
  parse_cmd->add_option("--output", output, "CoNLL-U output (default: stdout)");

  auto* eval_cmd = app.add_subcommand("eval", "parse a gold file and score it");
  add_model_opts(eval_cmd);
  eval_cmd->add_option("--gold", gold, "gold CoNLL-U")->required();

  auto* sig_cmd = app.add_subcommand("significance", "paired bootstrap test of system A over system B");
  sig_cmd->add_option("--gold", gold)->required();
  sig_cmd->add_option("--predA", pred_a)->required();
  sig_cmd->add_option("--predB", pred_b)->required();
  sig_cmd->add_option("--iters", iters);
  sig_cmd->add_option("--seed", seed);

  auto* export_cmd = app.add_subcommand("export-langvec", "write language embeddings as TSV");
  export_cmd->add_option("--model", model)->required();
  export_cmd->add_option("--out", out)->required();

  auto* report_cmd = app.add_subcommand("report-features", "per-group typology feature weights");
  report_cmd->add_option("--model", model)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) return run_train(config, treebanks, devs, typology, out);
    if (*parse_cmd) return run_parse(model, input, lang, mode, typology, output);
    if (*eval_cmd) return run_eval(model, gold, lang, mode, typology);
    if (*sig_cmd) return run_significance(gold, pred_a, pred_b, iters, seed);
    if (*export_cmd) return run_export(model, out);
    if (*report_cmd) return run_report(model);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
