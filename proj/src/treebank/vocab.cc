#include "spad/treebank/vocab.h"

#include <algorithm>
#include <map>

#include "spad/base/error.h"

namespace spad::treebank {

Vocabulary::Vocabulary() {
  for (std::string_view t : {kPadToken, kUnkToken, kBosToken, kEosToken,
                             kRootToken, kMaskToken}) {
    Append(std::string(t));
  }
}

void Vocabulary::Append(const std::string &token) {
  ids_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(token);
}

Vocabulary Vocabulary::Build(const Corpus &corpus, int min_count) {
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  std::map<std::string, int> counts;
  for (const auto &s : corpus) {
    for (const auto &t : s.tokens) ++counts[t];
  }
  std::vector<std::pair<std::string, int>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto &a, const auto &b) { return a.second > b.second; });
  Vocabulary v;
  v.min_count_ = min_count;
  for (const auto &[token, count] : ranked) {
    if (count >= min_count && !v.Contains(token)) v.Append(token);
  }
  return v;
}

Vocabulary Vocabulary::FromTokens(const std::vector<std::string> &tokens,
                                  int min_count) {
  Vocabulary v;
  if (tokens.size() < size_t(kNumReserved)) {
    throw FormatError("vocabulary is missing reserved tokens");
  }
  for (int i = 0; i < kNumReserved; ++i) {
    if (tokens[i] != v.tokens_[i]) {
      throw FormatError("reserved token mismatch at id " + std::to_string(i));
    }
  }
  for (size_t i = kNumReserved; i < tokens.size(); ++i) {
    if (v.Contains(tokens[i])) throw FormatError("duplicate token " + tokens[i]);
    v.Append(tokens[i]);
  }
  v.min_count_ = min_count;
  return v;
}

int Vocabulary::Lookup(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

std::vector<int> Vocabulary::Lookup(const std::vector<std::string> &tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto &t : tokens) out.push_back(Lookup(t));
  return out;
}

const std::string &Vocabulary::Token(int id) const {
  if (id < 0 || id >= size()) {
    throw ShapeError("token id " + std::to_string(id) + " outside vocabulary");
  }
  return tokens_[id];
}

bool Vocabulary::Contains(std::string_view token) const {
  return ids_.count(std::string(token)) > 0;
}

}  // namespace spad::treebank
