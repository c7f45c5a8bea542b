#include "typar/metrics.hpp"

#include <random>

#include "typar/error.hpp"

namespace typar {

bool deprel_matches(const std::string& gold, const std::string& pred) {
  return gold.substr(0, gold.find(':')) == pred.substr(0, pred.find(':'));
}

AttachmentCounts count_attachments(const Sentence& gold, const Sentence& pred) {
  if (gold.size() != pred.size())
    throw DataError("sentence length mismatch: gold has " + std::to_string(gold.size()) + " words, prediction " +
                    std::to_string(pred.size()));
  AttachmentCounts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& g = gold.tokens[i];
    const auto& p = pred.tokens[i];
    if (g.form != p.form)
      throw DataError("word mismatch at token " + std::to_string(g.id) + ": '" + g.form + "' vs '" + p.form + "'");
    ++c.words;
    if (g.head == p.head) {
      ++c.heads;
      if (deprel_matches(g.deprel, p.deprel)) ++c.labeled;
    }
  }
  return c;
}

std::vector<AttachmentCounts> per_sentence_counts(const Treebank& gold, const Treebank& pred) {
  if (gold.sentences.size() != pred.sentences.size())
    throw DataError("sentence count mismatch: " + std::to_string(gold.sentences.size()) + " vs " +
                    std::to_string(pred.sentences.size()));
  std::vector<AttachmentCounts> out;
  out.reserve(gold.sentences.size());
  for (std::size_t i = 0; i < gold.sentences.size(); ++i)
    out.push_back(count_attachments(gold.sentences[i], pred.sentences[i]));
  return out;
}

AttachmentCounts score_treebank(const Treebank& gold, const Treebank& pred) {
  AttachmentCounts total;
  for (const auto& c : per_sentence_counts(gold, pred)) total += c;
  return total;
}

double Metrics::macro_uas() const {
  if (languages.empty()) return 0;
  double s = 0;
  for (const auto& [l, c] : languages) s += c.uas();
  return s / double(languages.size());
}

double Metrics::macro_las() const {
  if (languages.empty()) return 0;
  double s = 0;
  for (const auto& [l, c] : languages) s += c.las();
  return s / double(languages.size());
}

AttachmentCounts Metrics::total() const {
  AttachmentCounts t;
  for (const auto& [l, c] : languages) t += c;
  return t;
}

double bootstrap_significance(const std::vector<AttachmentCounts>& a, const std::vector<AttachmentCounts>& b,
                              int iterations, std::uint64_t seed) {
  if (a.size() != b.size()) throw DataError("bootstrap: systems were scored on different sentence sets");
  if (a.empty()) throw DataError("bootstrap: no sentences");
  if (iterations <= 0) throw UsageError("bootstrap: iterations must be positive");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].words != b[i].words) throw DataError("bootstrap: systems disagree on sentence " + std::to_string(i + 1));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, a.size() - 1);
  long not_better = 0;
  for (int it = 0; it < iterations; ++it) {
    // both systems share each resample's word count, so comparing correct
    // counts compares LAS
    long la = 0, lb = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const auto i = pick(rng);
      la += a[i].labeled;
      lb += b[i].labeled;
    }
    if (lb >= la) ++not_better;
  }
  return double(not_better) / double(iterations);
}

}  // namespace typar
