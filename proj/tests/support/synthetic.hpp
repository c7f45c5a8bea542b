#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "typar/conllu.hpp"
#include "typar/typology.hpp"

namespace typar::testing {

// Toy languages over a shared vocabulary of nouns, verbs, adjectives and
// determiners. Word classes are drawn independently per position, so a word
// string and its reversal are equally likely. Grammar with heads preferred
// on the left:
//   root  leftmost verb
//   conj  other verbs attach to the nearest verb on the left
//   obj   nouns attach to the nearest verb on the left, otherwise
//   nsubj the nearest verb on the right
//   amod  adjectives attach to the nearest noun on the left, then right,
//         then the root
//   det   determiners attach to the nearest noun on the right, then left,
//         then the root
// The mirrored language is the same grammar applied right to left, so the
// two share a surface distribution but disagree on every directional arc.
enum class Direction { head_left, head_right };

std::vector<std::string> synthetic_vocabulary();
Sentence synthetic_sentence(Direction dir, std::uint64_t& state);
Treebank synthetic_treebank(const std::string& lang, Direction dir, int sentences, std::uint64_t seed);

// Heads and labels for a given word sequence (forms from synthetic_vocabulary).
Sentence annotate(const std::vector<std::string>& forms, Direction dir);

struct SyntheticTypology {
  TypologyVector left, right, mixed;  // mixed = 0.75 left + 0.25 right
};

// Word-order features (the first 20 syntax features) are 0/1 and flipped
// between the two directions; everything else is shared.
SyntheticTypology synthetic_typology(std::uint64_t seed);

}  // namespace typar::testing
