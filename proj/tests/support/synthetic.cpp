#include "synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <random>

namespace typar::testing {

namespace {

constexpr int kWordsPerClass = 10;
constexpr int kOrderFeatures = 20;

char word_class(const std::string& form) { return form.empty() ? '?' : form[0]; }

// Tree for the head_left grammar.
void attach_left(const std::vector<char>& cls, std::vector<int>& heads, std::vector<std::string>& labels) {
  const int n = static_cast<int>(cls.size());
  auto nearest = [&](int i, char c, int step) {
    for (int j = i + step; j >= 0 && j < n; j += step)
      if (cls[j] == c) return j;
    return -1;
  };
  const int root = static_cast<int>(std::find(cls.begin(), cls.end(), 'v') - cls.begin());
  heads.assign(n, 0);
  labels.assign(n, "");
  for (int i = 0; i < n; ++i) {
    int h = -1;
    std::string label;
    switch (cls[i]) {
      case 'v':
        if (i == root) {
          heads[i] = 0;
          labels[i] = "root";
          continue;
        }
        h = nearest(i, 'v', -1);
        label = "conj";
        break;
      case 'n':
        h = nearest(i, 'v', -1);
        label = "obj";
        if (h < 0) {
          h = nearest(i, 'v', +1);
          label = "nsubj";
        }
        break;
      case 'a':
        h = nearest(i, 'n', -1);
        if (h < 0) h = nearest(i, 'n', +1);
        if (h < 0) h = root;
        label = "amod";
        break;
      case 'd':
        h = nearest(i, 'n', +1);
        if (h < 0) h = nearest(i, 'n', -1);
        if (h < 0) h = root;
        label = "det";
        break;
    }
    heads[i] = h + 1;
    labels[i] = label;
  }
}

}  // namespace

std::vector<std::string> synthetic_vocabulary() {
  std::vector<std::string> out;
  for (char c : {'n', 'v', 'a', 'd'})
    for (int i = 0; i < kWordsPerClass; ++i) out.push_back(std::string(1, c) + std::to_string(i));
  return out;
}

Sentence annotate(const std::vector<std::string>& forms, Direction dir) {
  const int n = static_cast<int>(forms.size());
  std::vector<char> cls;
  for (const auto& f : forms) cls.push_back(word_class(f));
  if (dir == Direction::head_right) std::reverse(cls.begin(), cls.end());
  std::vector<int> heads;
  std::vector<std::string> labels;
  attach_left(cls, heads, labels);
  if (dir == Direction::head_right) {
    // mirror: position i maps to n-1-i
    std::vector<int> h(n);
    std::vector<std::string> l(n);
    for (int i = 0; i < n; ++i) {
      const int m = n - 1 - i;
      h[m] = heads[i] == 0 ? 0 : n - heads[i] + 1;
      l[m] = labels[i];
    }
    heads = std::move(h);
    labels = std::move(l);
  }
  Sentence s;
  for (int i = 0; i < n; ++i) {
    Token t;
    t.id = i + 1;
    t.form = forms[i];
    t.lemma = forms[i];
    t.upos = std::string(1, static_cast<char>(std::toupper(word_class(forms[i]))));
    t.head = heads[i];
    t.deprel = labels[i];
    s.tokens.push_back(std::move(t));
  }
  return s;
}

Sentence synthetic_sentence(Direction dir, std::uint64_t& state) {
  std::mt19937_64 rng(state);
  state = rng();
  std::uniform_int_distribution<int> length(4, 10);
  std::discrete_distribution<int> klass({35, 25, 20, 20});
  std::uniform_int_distribution<int> word(0, kWordsPerClass - 1);
  const char classes[] = {'n', 'v', 'a', 'd'};
  const int n = length(rng);
  std::vector<char> cls(n);
  for (auto& c : cls) c = classes[klass(rng)];
  if (std::find(cls.begin(), cls.end(), 'v') == cls.end())
    cls[std::uniform_int_distribution<int>(0, n - 1)(rng)] = 'v';
  std::vector<std::string> forms;
  for (char c : cls) forms.push_back(std::string(1, c) + std::to_string(word(rng)));
  return annotate(forms, dir);
}

Treebank synthetic_treebank(const std::string& lang, Direction dir, int sentences, std::uint64_t seed) {
  Treebank tb;
  tb.lang = lang;
  std::uint64_t state = seed;
  for (int i = 0; i < sentences; ++i) {
    auto s = synthetic_sentence(dir, state);
    s.lang = lang;
    s.comments.push_back("# sent_id = " + lang + "-" + std::to_string(i + 1));
    tb.sentences.push_back(std::move(s));
  }
  return tb;
}

SyntheticTypology synthetic_typology(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::bernoulli_distribution bit(0.5);
  Eigen::RowVectorXd left(kTypologyFeatures);
  for (int i = 0; i < kTypologyFeatures; ++i) left[i] = i < kOrderFeatures ? (bit(rng) ? 1.0 : 0.0) : u(rng);
  Eigen::RowVectorXd right = left;
  for (int i = 0; i < kOrderFeatures; ++i) right[i] = 1.0 - left[i];
  Eigen::RowVectorXd mixed = 0.75 * left + 0.25 * right;
  return {TypologyVector(left), TypologyVector(right), TypologyVector(mixed)};
}

}  // namespace typar::testing
