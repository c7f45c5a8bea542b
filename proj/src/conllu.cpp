#include "typar/conllu.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "typar/error.hpp"

namespace typar {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

void finish_sentence(Sentence& cur, Treebank& tb, std::size_t line_no) {
  if (cur.tokens.empty()) {
    if (!cur.comments.empty())
      throw ParseError(line_no, "comment block without tokens");
    return;
  }
  const int n = static_cast<int>(cur.tokens.size());
  for (const auto& t : cur.tokens) {
    if (t.head > n)
      throw ParseError(line_no, "head " + std::to_string(t.head) + " of token " +
                                    std::to_string(t.id) + " exceeds sentence length");
  }
  tb.sentences.push_back(std::move(cur));
  cur = Sentence{};
  cur.lang = tb.lang;
}

}  // namespace

Treebank parse_conllu(std::string_view text, const std::string& lang,
                      const ConlluOptions& opts) {
  Treebank tb;
  tb.lang = lang;
  Sentence cur;
  cur.lang = lang;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      finish_sentence(cur, tb, line_no);
      if (eol == text.size()) break;
      continue;
    }
    if (line.front() == '#') {
      cur.comments.emplace_back(line);
      continue;
    }

    auto cols = split_tabs(line);
    if (cols.size() != 10)
      throw ParseError(line_no, "expected 10 tab-separated columns, got " +
                                    std::to_string(cols.size()));
    // multiword token ranges and empty nodes are not syntactic words
    if (cols[0].find('-') != std::string_view::npos ||
        cols[0].find('.') != std::string_view::npos)
      continue;

    Token t;
    if (!parse_int(cols[0], t.id) || t.id < 1)
      throw ParseError(line_no, "invalid token id '" + std::string(cols[0]) + "'");
    if (t.id != static_cast<int>(cur.tokens.size()) + 1)
      throw ParseError(line_no, "token id " + std::to_string(t.id) + " out of sequence");
    t.form = cols[1];
    t.lemma = cols[2];
    t.upos = cols[3];
    t.xpos = cols[4];
    t.feats = cols[5];
    if (cols[6] == "_" && !opts.require_heads) {
      t.head = 0;
    } else if (!parse_int(cols[6], t.head) || t.head < 0) {
      throw ParseError(line_no, "invalid head '" + std::string(cols[6]) + "'");
    }
    if (t.head == t.id && opts.require_heads)
      throw ParseError(line_no, "token " + std::to_string(t.id) + " is its own head");
    t.deprel = cols[7];
    if (opts.require_heads && (t.deprel.empty() || t.deprel == "_"))
      throw ParseError(line_no, "missing dependency label");
    t.deps = cols[8];
    t.misc = cols[9];
    cur.tokens.push_back(std::move(t));
    if (eol == text.size()) break;
  }
  finish_sentence(cur, tb, line_no);
  return tb;
}

Treebank read_conllu(const std::string& path, const std::string& lang,
                     const ConlluOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_conllu(ss.str(), lang, opts);
  } catch (const ParseError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string write_conllu(const Treebank& tb) {
  std::string out;
  for (const auto& s : tb.sentences) {
    for (const auto& c : s.comments) {
      out += c;
      out += '\n';
    }
    for (const auto& t : s.tokens) {
      out += std::to_string(t.id);
      for (const std::string* f : {&t.form, &t.lemma, &t.upos, &t.xpos, &t.feats}) {
        out += '\t';
        out += *f;
      }
      out += '\t';
      out += std::to_string(t.head);
      for (const std::string* f : {&t.deprel, &t.deps, &t.misc}) {
        out += '\t';
        out += *f;
      }
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

bool TreeValidation::has(TreeIssueKind kind) const {
  for (const auto& i : issues)
    if (i.kind == kind) return true;
  return false;
}

std::string TreeValidation::message() const {
  if (issues.empty()) return "valid";
  std::string msg;
  for (const auto& i : issues) {
    if (!msg.empty()) msg += "; ";
    switch (i.kind) {
      case TreeIssueKind::multiple_roots: msg += "multiple roots"; break;
      case TreeIssueKind::no_root: msg += "no root"; break;
      case TreeIssueKind::cycle: msg += "cycle at token " + std::to_string(i.token); break;
    }
  }
  return msg;
}

TreeValidation validate_heads(const std::vector<int>& heads) {
  TreeValidation v;
  const int n = static_cast<int>(heads.size());
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    if (heads[i] < 0 || heads[i] > n)
      throw DataError("head index " + std::to_string(heads[i]) + " out of range");
    if (heads[i] == 0) ++roots;
  }
  if (roots == 0) v.issues.push_back({TreeIssueKind::no_root, 0});
  if (roots > 1) v.issues.push_back({TreeIssueKind::multiple_roots, 0});

  // 0 = unvisited, 1 = on current path, 2 = reaches root
  std::vector<int> state(n + 1, 0);
  state[0] = 2;
  for (int start = 1; start <= n; ++start) {
    std::vector<int> path;
    int cur = start;
    while (state[cur] == 0) {
      state[cur] = 1;
      path.push_back(cur);
      cur = heads[cur - 1];
    }
    if (state[cur] == 1) {
      int lowest = cur;
      for (int k = heads[cur - 1]; k != cur; k = heads[k - 1]) lowest = std::min(lowest, k);
      v.issues.push_back({TreeIssueKind::cycle, lowest});
    }
    for (int p : path) state[p] = 2;
  }
  return v;
}

TreeValidation validate_tree(const Sentence& s) {
  return validate_heads(heads_of(s));
}

std::vector<int> heads_of(const Sentence& s) {
  std::vector<int> heads;
  heads.reserve(s.tokens.size());
  for (const auto& t : s.tokens) heads.push_back(t.head);
  return heads;
}

}  // namespace typar
