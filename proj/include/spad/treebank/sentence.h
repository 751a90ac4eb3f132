#ifndef SPAD_TREEBANK_SENTENCE_H_
#define SPAD_TREEBANK_SENTENCE_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spad::treebank {

// Unlabeled dependency tree over tokens 1..n. heads[i] is the head of token
// i + 1; 0 denotes ROOT. Labels are carried but never scored.
struct DepTree {
  std::vector<int> heads;
  std::vector<std::string> labels;  // empty or one per token

  int size() const { return static_cast<int>(heads.size()); }
  bool operator==(const DepTree &o) const = default;

  // Throws ValidityError unless: heads in 0..n, no self loop, exactly one
  // ROOT child, acyclic (hence every token reachable from ROOT).
  void Validate() const;
  bool IsValid() const;
  bool IsProjective() const;
};

// Universal POS tags; the closed tagset shared by all taggers.
const std::vector<std::string> &UposTags();
int NumTags();
// Tag id for a UPOS string, or -1.
int TagId(std::string_view tag);

struct TagSeq {
  std::vector<int> tags;

  int size() const { return static_cast<int>(tags.size()); }
  bool operator==(const TagSeq &o) const = default;
  void Validate() const;
};

struct Sentence {
  std::string id;
  std::vector<std::string> tokens;
  std::optional<DepTree> gold_tree;
  std::optional<TagSeq> gold_tags;

  int size() const { return static_cast<int>(tokens.size()); }
  bool operator==(const Sentence &o) const = default;

  // Length >= 1, no empty token, annotations aligned with tokens and valid.
  void Validate() const;
};

using Corpus = std::vector<Sentence>;

}  // namespace spad::treebank

#endif  // SPAD_TREEBANK_SENTENCE_H_
