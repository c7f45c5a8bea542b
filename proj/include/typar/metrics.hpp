#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "typar/conllu.hpp"

namespace typar {

struct AttachmentCounts {
  long words = 0;
  long heads = 0;     // correct head
  long labeled = 0;   // correct head and label

  double uas() const { return words ? 100.0 * double(heads) / double(words) : 0.0; }
  double las() const { return words ? 100.0 * double(labeled) / double(words) : 0.0; }
  AttachmentCounts& operator+=(const AttachmentCounts& o) {
    words += o.words;
    heads += o.heads;
    labeled += o.labeled;
    return *this;
  }
};

// Labels match on their universal part (text before ':'), as in the CoNLL
// 2018 evaluation.
bool deprel_matches(const std::string& gold, const std::string& pred);

// Counts over all words; sentences must align token by token.
AttachmentCounts count_attachments(const Sentence& gold, const Sentence& pred);
std::vector<AttachmentCounts> per_sentence_counts(const Treebank& gold, const Treebank& pred);
AttachmentCounts score_treebank(const Treebank& gold, const Treebank& pred);

struct Metrics {
  std::map<std::string, AttachmentCounts> languages;

  double macro_uas() const;
  double macro_las() const;
  AttachmentCounts total() const;
};

// One-sided paired bootstrap over sentences: the fraction of resamples in
// which system B's LAS is at least system A's.
double bootstrap_significance(const std::vector<AttachmentCounts>& a, const std::vector<AttachmentCounts>& b,
                              int iterations, std::uint64_t seed);

}  // namespace typar
