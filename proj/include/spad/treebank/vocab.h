#ifndef SPAD_TREEBANK_VOCAB_H_
#define SPAD_TREEBANK_VOCAB_H_

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spad/treebank/sentence.h"

namespace spad::treebank {

// Reserved ids are fixed so checkpoints stay portable across runs.
inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kBosId = 2;
inline constexpr int kEosId = 3;
inline constexpr int kRootId = 4;
// Input-side blank for the denoising generator; never emitted as output.
inline constexpr int kMaskId = 5;
inline constexpr int kNumReserved = 6;

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kBosToken = "<s>";
inline constexpr std::string_view kEosToken = "</s>";
inline constexpr std::string_view kRootToken = "<root>";
inline constexpr std::string_view kMaskToken = "<mask>";

class Vocabulary {
 public:
  // Only the reserved tokens.
  Vocabulary();

  // Tokens with frequency >= min_count get ids, most frequent first (ties in
  // byte order). min_count must be >= 1.
  static Vocabulary Build(const Corpus &corpus, int min_count);
  // Rebuilds from an id-ordered token list that starts with the reserved
  // tokens (the checkpoint form).
  static Vocabulary FromTokens(const std::vector<std::string> &tokens,
                               int min_count = 1);

  // Total: unknown strings map to kUnkId.
  int Lookup(std::string_view token) const;
  std::vector<int> Lookup(const std::vector<std::string> &tokens) const;
  const std::string &Token(int id) const;
  bool Contains(std::string_view token) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  int min_count() const { return min_count_; }
  const std::vector<std::string> &tokens() const { return tokens_; }

  static bool IsReserved(int id) { return id >= 0 && id < kNumReserved; }

 private:
  void Append(const std::string &token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
  int min_count_ = 1;
};

}  // namespace spad::treebank

#endif  // SPAD_TREEBANK_VOCAB_H_
