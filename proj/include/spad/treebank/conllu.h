#ifndef SPAD_TREEBANK_CONLLU_H_
#define SPAD_TREEBANK_CONLLU_H_

#include <string>
#include <string_view>

#include "spad/treebank/sentence.h"

namespace spad::treebank {

// Reads blank-line separated CoNLL-U blocks. Comment lines are ignored except
// "# sent_id = ...", which sets Sentence::id. HEAD fills gold_tree, UPOS
// fills gold_tags; a column that is "_" on every line leaves the annotation
// absent. Multiword-token ranges and empty nodes are rejected.
Corpus ParseConllu(std::string_view text);

// Canonical form: ten tab-separated columns, "\n" line endings, one blank
// line between sentences and none at the end.
std::string WriteConllu(const Corpus &corpus);

Corpus ReadConlluFile(const std::string &path);
void WriteConlluFile(const std::string &path, const Corpus &corpus);

struct LengthCapReport {
  int kept = 0;
  int skipped = 0;
};

// Drops sentences longer than max_len tokens (truncation would corrupt head
// indices) and reports how many were skipped.
LengthCapReport ApplyLengthCap(Corpus &corpus, int max_len);

inline constexpr int kDefaultMaxSentenceLength = 40;

}  // namespace spad::treebank

#endif  // SPAD_TREEBANK_CONLLU_H_
