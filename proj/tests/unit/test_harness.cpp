#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "model_compare.hpp"
#include "synthetic.hpp"
#include "typar/bundle.hpp"
#include "typar/config.hpp"
#include "typar/metrics.hpp"
#include "typar/mst.hpp"
#include "typar/optim.hpp"
#include "typar/train.hpp"

using namespace typar;
namespace fs = std::filesystem;

namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  c.apply_preset("compact");
  c.layers = 1;
  c.hidden = 16;
  c.heads = 2;
  c.ffn = 32;
  c.adapter = 4;
  c.arc_dim = 12;
  c.tag_dim = 8;
  c.langvec_dim = 4;
  c.langnet_hidden = 8;
  c.epochs = 2;
  c.batch_size = 8;
  return c;
}

TypologyTable synthetic_table() {
  auto typ = testing::synthetic_typology(5);
  TypologyTable t;
  t.insert("aa", typ.left);
  t.insert("bb", typ.right);
  t.insert("cc", typ.mixed);
  return t;
}

Sentence sentence(std::vector<int> heads, std::vector<std::string> labels) {
  Sentence s;
  for (std::size_t i = 0; i < heads.size(); ++i) {
    Token t;
    t.id = static_cast<int>(i + 1);
    t.form = "w" + std::to_string(i);
    t.head = heads[i];
    t.deprel = labels[i];
    s.tokens.push_back(t);
  }
  return s;
}

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("typar_unit_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config defaults follow the published hyper-parameters") {
  TrainConfig c;
  CHECK(c.epochs == 80);
  CHECK(c.batch_size == 32);
  CHECK(c.lr == 1e-3);
  CHECK(c.backbone_lr == 5e-5);
  CHECK(c.warmup_ratio == 1.0 / 80.0);
  CHECK(c.dropout == 0.5);
  CHECK(c.encoder_dropout == 0.2);
  CHECK(c.mask_prob == 0.2);
  CHECK(c.arc_smoothing == 0.03);
  CHECK(c.label_smoothing == 0.03);
  CHECK(c.beta1 == 0.9);
  CHECK(c.beta2 == 0.99);
  CHECK(c.weight_decay == 0.01);
  CHECK(c.arc_dim == 768);
  CHECK(c.tag_dim == 256);
  CHECK(c.langvec_dim == 32);
  CHECK(c.cpg_mode == CpgMode::both);
  CHECK(c.backbone == BackboneMode::frozen);
  CHECK_NOTHROW(c.validate());
  CHECK(c.warmup_for(8000) == 100);
  CHECK(c.warmup_for(10) == 1);

  TrainConfig paper;
  paper.apply_preset("paper");
  CHECK(paper.adapter == 256);
  CHECK(paper.hidden == 768);
}

TEST_CASE("config parsing") {
  auto c = parse_config("# comment\nepochs = 3\ncpg_mode=off\nwarmup_ratio=1/40\nadapter=8 # trailing\npreset=compact\n");
  CHECK(c.epochs == 3);
  CHECK(c.cpg_mode == CpgMode::off);
  CHECK(c.warmup_ratio == 1.0 / 40.0);
  CHECK(c.adapter == 8);  // explicit key wins over the preset
  CHECK(c.hidden == 64);
  CHECK(parse_config(write_config(c)).cpg_mode == CpgMode::off);
  CHECK(write_config(parse_config(write_config(c))) == write_config(c));

  CHECK_THROWS_AS(parse_config("epochs=three\n"), UsageError);
  CHECK_THROWS_AS(parse_config("unknown_key=1\n"), UsageError);
  CHECK_THROWS_AS(parse_config("no equals sign\n"), UsageError);
  CHECK_THROWS_AS(parse_config("hidden=10\nheads=4\n"), UsageError);
  CHECK_THROWS_AS(parse_config("adapter=128\n"), UsageError);
  CHECK_THROWS_AS(parse_config("cpg_mode=sometimes\n"), UsageError);
}

TEST_CASE("learning-rate schedule peaks at the warm-up boundary") {
  const long warmup = 25;
  double peak = 0;
  long at = 0;
  for (long s = 1; s <= 1000; ++s) {
    const double lr = lr_at_step(s, 1e-3, warmup);
    if (lr > peak) {
      peak = lr;
      at = s;
    }
  }
  CHECK(peak == 1e-3);
  CHECK(at == warmup);
}

TEST_CASE("attachment scores") {
  SUBCASE("identical") {
    auto g = sentence({2, 0, 2}, {"det", "root", "obj"});
    auto c = count_attachments(g, g);
    CHECK(c.uas() == 100.0);
    CHECK(c.las() == 100.0);
  }
  SUBCASE("heads right, labels wrong") {
    auto g = sentence({2, 0, 2}, {"det", "root", "obj"});
    auto p = sentence({2, 0, 2}, {"obj", "det", "root"});
    auto c = count_attachments(g, p);
    CHECK(c.uas() == 100.0);
    CHECK(c.las() == 0.0);
  }
  SUBCASE("4 tokens, 3 heads right, 2 of them labelled right") {
    auto g = sentence({2, 0, 2, 3}, {"nsubj", "root", "obj", "amod"});
    auto p = sentence({2, 0, 2, 1}, {"nsubj", "root", "iobj", "amod"});
    auto c = count_attachments(g, p);
    CHECK(c.uas() == 75.0);
    CHECK(c.las() == 50.0);
  }
  SUBCASE("language-specific subtypes are ignored") {
    CHECK(deprel_matches("nsubj:pass", "nsubj"));
    CHECK(deprel_matches("obl", "obl:tmod"));
    CHECK_FALSE(deprel_matches("obl", "obj"));
  }
  SUBCASE("mismatched tokens") {
    auto g = sentence({0}, {"root"});
    auto p = sentence({0, 1}, {"root", "dep"});
    CHECK_THROWS_AS(count_attachments(g, p), DataError);
  }
  SUBCASE("macro average") {
    Metrics m;
    m.languages["aa"] = {4, 3, 2};
    m.languages["bb"] = {6, 6, 6};
    CHECK(m.macro_uas() == (75.0 + 100.0) / 2);
    CHECK(m.macro_las() == (50.0 + 100.0) / 2);
    CHECK(m.total().words == 10);
  }
}

TEST_CASE("bootstrap significance") {
  std::vector<AttachmentCounts> a{{5, 5, 5}, {4, 3, 2}, {6, 4, 4}};
  SUBCASE("identical systems never show A ahead") {
    CHECK(bootstrap_significance(a, a, 1000, 1) == 1.0);
  }
  SUBCASE("A better on every sentence") {
    std::vector<AttachmentCounts> b{{5, 5, 4}, {4, 3, 1}, {6, 4, 3}};
    CHECK(bootstrap_significance(a, b, 1000, 1) == 0.0);
  }
  SUBCASE("exhaustive enumeration over 27 resamples") {
    // A wins sentence 0 by 2, loses sentence 1 by 1, ties sentence 2
    std::vector<AttachmentCounts> b{{5, 5, 3}, {4, 3, 3}, {6, 4, 4}};
    int count = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          long la = a[i].labeled + a[j].labeled + a[k].labeled;
          long lb = b[i].labeled + b[j].labeled + b[k].labeled;
          count += lb >= la;
        }
    const double exact = count / 27.0;
    const double p = bootstrap_significance(a, b, 10000, 42);
    CHECK(std::abs(p - exact) < 0.02);
    CHECK(bootstrap_significance(a, b, 10000, 42) == p);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(bootstrap_significance(a, {a[0]}, 10, 1), DataError);
    CHECK_THROWS_AS(bootstrap_significance({}, {}, 10, 1), DataError);
  }
}

TEST_CASE("synthetic languages mirror each other") {
  std::uint64_t state = 3;
  for (int i = 0; i < 200; ++i) {
    auto s = testing::synthetic_sentence(testing::Direction::head_left, state);
    CHECK(validate_tree(s).ok());
    std::vector<std::string> reversed;
    for (auto it = s.tokens.rbegin(); it != s.tokens.rend(); ++it) reversed.push_back(it->form);
    auto m = testing::annotate(reversed, testing::Direction::head_right);
    CHECK(validate_tree(m).ok());
    const int n = static_cast<int>(s.size());
    for (int k = 0; k < n; ++k) {
      const auto& a = s.tokens[k];
      const auto& b = m.tokens[n - 1 - k];
      CHECK(a.deprel == b.deprel);
      CHECK(b.head == (a.head == 0 ? 0 : n - a.head + 1));
    }
  }
  auto t = testing::synthetic_typology(1);
  CHECK(t.left[0] + t.right[0] == 1.0);
  CHECK(t.left[200] == t.right[200]);
}

TEST_CASE("training, parsing and evaluation") {
  auto table = synthetic_table();
  auto a = testing::synthetic_treebank("aa", testing::Direction::head_left, 24, 1);
  auto b = testing::synthetic_treebank("bb", testing::Direction::head_right, 24, 2);
  auto cfg = tiny_config();

  SUBCASE("missing typology is reported before training") {
    auto x = a;
    x.lang = "xx";
    CHECK_THROWS_AS(train<float>(cfg, {x}, {}, table, {}), MissingLanguageError);
  }

  auto result = train<double>(cfg, {a, b}, {a, b}, table, {});
  auto& model = result.model;
  CHECK(result.log.size() == 2);
  CHECK(result.steps == 2 * (3 + 3));
  CHECK(result.log[1].dev_macro_las.has_value());

  SUBCASE("parse output is a valid tree and re-scores like evaluate") {
    auto parsed = parse_treebank(model, a, "aa", LangvecMode{});
    for (const auto& s : parsed.sentences) CHECK(validate_tree(s).ok());
    CHECK(score_treebank(a, parsed).labeled == evaluate(model, a, "aa", LangvecMode{}).labeled);
    auto reread = parse_conllu(write_conllu(parsed), "aa");
    CHECK(score_treebank(a, reread).labeled == score_treebank(a, parsed).labeled);
    for (std::size_t i = 0; i < a.sentences.size(); ++i)
      for (std::size_t k = 0; k < a.sentences[i].size(); ++k) {
        CHECK(parsed.sentences[i].tokens[k].form == a.sentences[i].tokens[k].form);
        CHECK(parsed.sentences[i].tokens[k].upos == a.sentences[i].tokens[k].upos);
      }
  }
  SUBCASE("zero-shot language through its typology vector") {
    CHECK_NOTHROW(parse_treebank(model, a, "cc", LangvecMode{}));
    CHECK_THROWS_AS(parse_treebank(model, a, "cc", LangvecMode::parse("learned")), MissingLanguageError);
    CHECK_NOTHROW(parse_treebank(model, a, "cc", LangvecMode::parse("centroid")));
    CHECK_NOTHROW(parse_treebank(model, a, "cc", LangvecMode::parse("proxy:bb")));
  }
  SUBCASE("different language vectors give different arc scores") {
    auto fa = fixed_params(model, model.resolve("aa", LangvecMode{}));
    auto fb = fixed_params(model, model.resolve("bb", LangvecMode{}));
    CHECK((fa.biaffine - fb.biaffine).norm() > 0);
    CHECK((fa.adapters - fb.adapters).norm() > 0);
    auto fa2 = fixed_params(model, model.resolve("aa", LangvecMode::parse("proxy:aa")));
    CHECK(fa2.biaffine == fa.biaffine);
  }
  SUBCASE("bundle round trip") {
    auto dir = temp_dir("bundle");
    save_model(model, dir.string());
    auto loaded = load_model(dir.string());
    REQUIRE(std::holds_alternative<Model<double>>(loaded));
    auto& m2 = std::get<Model<double>>(loaded);
    CHECK(testing::models_identical(model, m2));
    CHECK(evaluate(m2, b, "bb", LangvecMode{}).labeled == evaluate(model, b, "bb", LangvecMode{}).labeled);

    // format version bump
    {
      std::ifstream in(dir / "model.json");
      std::string text((std::istreambuf_iterator<char>(in)), {});
      auto pos = text.find("\"format_version\": 1");
      REQUIRE(pos != std::string::npos);
      text.replace(pos, 19, "\"format_version\": 2");
      auto bumped = dir / "bumped.json";
      std::ofstream(bumped) << text;
      fs::copy_file(dir / "model.bin", dir / "bumped.bin");
      CHECK_THROWS_AS(load_model(bumped.string()), FormatVersionError);
    }
    // truncated blob
    fs::resize_file(dir / "model.bin", fs::file_size(dir / "model.bin") - 3);
    CHECK_THROWS_AS(load_model(dir.string()), ChecksumError);
    // flipped byte at full length
    save_model(model, dir.string());
    {
      std::fstream f(dir / "model.bin", std::ios::in | std::ios::out | std::ios::binary);
      f.seekp(100);
      char c = 0;
      f.read(&c, 1);
      f.seekp(100);
      c ^= 0x10;
      f.write(&c, 1);
    }
    CHECK_THROWS_AS(load_model(dir.string()), ChecksumError);
    fs::remove_all(dir);
  }
}

TEST_CASE("an unconditioned model ignores the language") {
  auto table = synthetic_table();
  auto a = testing::synthetic_treebank("aa", testing::Direction::head_left, 16, 1);
  auto b = testing::synthetic_treebank("bb", testing::Direction::head_right, 16, 2);
  auto cfg = tiny_config();
  cfg.cpg_mode = CpgMode::off;
  auto model = train<float>(cfg, {a, b}, {}, table, {}).model;
  CHECK(model.generator.adapters.value.size() == 0);
  CHECK(model.langnet.w1.value.size() == 0);
  auto pa = parse_treebank(model, a, "aa", LangvecMode{});
  auto pb = parse_treebank(model, a, "bb", LangvecMode{});
  auto pz = parse_treebank(model, a, "zz", LangvecMode::parse("learned"));
  for (std::size_t i = 0; i < pa.sentences.size(); ++i) {
    CHECK(pa.sentences[i].tokens == pb.sentences[i].tokens);
    CHECK(pa.sentences[i].tokens == pz.sentences[i].tokens);
  }
}

TEST_CASE("learned language vectors") {
  auto table = synthetic_table();
  auto a = testing::synthetic_treebank("aa", testing::Direction::head_left, 16, 1);
  auto b = testing::synthetic_treebank("bb", testing::Direction::head_right, 16, 2);
  auto cfg = tiny_config();
  cfg.langvec = TrainLangvec::learned;
  // no typology needed for learned vectors
  auto model = train<float>(cfg, {a, b}, {}, TypologyTable{}, {}).model;
  CHECK(model.learned.size() == 2);
  CHECK(model.langnet.w1.value.size() == 0);
  CHECK_NOTHROW(parse_treebank(model, a, "aa", LangvecMode::parse("learned")));
  CHECK_THROWS_AS(parse_treebank(model, a, "aa", LangvecMode::parse("typology")), UsageError);
  auto store = model.language_store();
  auto centroid = model.resolve("zz", LangvecMode::parse("centroid"));
  REQUIRE(centroid.has_value());
  CHECK((centroid->values - (store["aa"].values + store["bb"].values) / 2).norm() < 1e-12);
}

TEST_CASE("frozen backbone is untouched and seeded runs repeat") {
  auto table = synthetic_table();
  auto a = testing::synthetic_treebank("aa", testing::Direction::head_left, 16, 1);
  auto cfg = tiny_config();
  cfg.max_steps = 3;
  Rng rng(cfg.seed);
  auto fresh = Model<float>::create(cfg, Vocab::build({a}), {"amod", "conj", "det", "nsubj", "obj", "root"}, {"aa"},
                                    table, rng);
  auto r1 = train<float>(cfg, {a}, {}, table, {});
  auto r2 = train<float>(cfg, {a}, {}, table, {});
  CHECK(r1.steps == 3);
  CHECK(testing::models_identical(r1.model, r2.model));
  auto before = fresh.backbone.parameters();
  auto after = r1.model.backbone.parameters();
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i]->value == after[i]->value);
  CHECK(fresh.generator.biaffine.value != r1.model.generator.biaffine.value);
}
