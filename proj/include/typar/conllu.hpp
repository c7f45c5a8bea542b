#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace typar {

struct Token {
  int id = 0;
  std::string form, lemma, upos, xpos, feats;
  int head = 0;  // 0 is the artificial root
  std::string deprel, deps, misc;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;
  std::vector<std::string> comments;
  std::string lang;

  std::size_t size() const { return tokens.size(); }
};

enum class Split { train, dev, test };

struct Treebank {
  std::vector<Sentence> sentences;
  std::string lang;
  Split split = Split::train;
};

struct ConlluOptions {
  // When false, "_" in the HEAD column reads as 0 and "_" DEPREL is kept;
  // used for raw input that is about to be parsed.
  bool require_heads = true;
};

Treebank parse_conllu(std::string_view text, const std::string& lang,
                      const ConlluOptions& opts = {});
Treebank read_conllu(const std::string& path, const std::string& lang,
                     const ConlluOptions& opts = {});
std::string write_conllu(const Treebank& tb);

enum class TreeIssueKind { multiple_roots, no_root, cycle };

struct TreeIssue {
  TreeIssueKind kind;
  int token = 0;  // first token found on a cycle; 0 for root issues
};

struct TreeValidation {
  std::vector<TreeIssue> issues;
  bool ok() const { return issues.empty(); }
  bool has(TreeIssueKind kind) const;
  std::string message() const;
};

// heads[i] is the head of token i+1.
TreeValidation validate_heads(const std::vector<int>& heads);
TreeValidation validate_tree(const Sentence& s);

std::vector<int> heads_of(const Sentence& s);

}  // namespace typar
