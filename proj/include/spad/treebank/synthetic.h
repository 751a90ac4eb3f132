#ifndef SPAD_TREEBANK_SYNTHETIC_H_
#define SPAD_TREEBANK_SYNTHETIC_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "spad/treebank/sentence.h"

namespace spad::treebank {

// A preterminal class of the synthetic grammar. Surface words are either
// listed explicitly or generated as pseudo-words from the lexicon seed; the
// first share_count words may be borrowed from an earlier class to create
// homographs (e.g. noun/verb ambiguity).
struct PosClass {
  std::string name;
  std::string tag;  // UPOS
  int size = 0;
  std::vector<std::string> words;
  std::string share_class;
  int share_count = 0;
};

// One head-marked production. rhs entries name either a nonterminal (a key
// of SynthGrammarConfig::templates) or a PosClass.
struct Production {
  std::vector<std::string> rhs;
  int head = 0;
};

struct SynthGrammarConfig {
  std::vector<PosClass> pos_classes;
  std::map<std::string, std::vector<Production>> templates;
  std::map<std::string, std::vector<double>> weights;
  std::string start = "S";
  int max_len = 40;
  int max_depth = 6;
  uint64_t seed = 1;  // lexicon seed

  // Throws ConfigError on negative or all-zero weights, dangling symbols,
  // bad head indices, unknown tags, or max_len < 1.
  void Validate() const;
};

SynthGrammarConfig DefaultGrammarConfig();

// JSON form with keys {pos_classes, templates, weights, max_len, seed} and
// optional {max_depth, start}.
SynthGrammarConfig GrammarFromJson(const nlohmann::json &j);
nlohmann::json GrammarToJson(const SynthGrammarConfig &config);

// n sentences with gold projective trees and tags; a pure function of
// (config, seed). Sentence ids are "<seed>-<index>".
Corpus GenerateSynthetic(const SynthGrammarConfig &config, int n,
                         uint64_t seed);

}  // namespace spad::treebank

#endif  // SPAD_TREEBANK_SYNTHETIC_H_
