#include "spad/treebank/sentence.h"

#include <algorithm>

#include "spad/base/error.h"

namespace spad::treebank {

void DepTree::Validate() const {
  const int n = size();
  if (n == 0) throw ValidityError("empty dependency tree");
  if (!labels.empty() && static_cast<int>(labels.size()) != n) {
    throw ValidityError("label count does not match head count");
  }
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const int h = heads[i];
    if (h < 0 || h > n) {
      throw ValidityError("head " + std::to_string(h) + " of token " +
                          std::to_string(i + 1) + " out of range 0.." +
                          std::to_string(n));
    }
    if (h == i + 1) {
      throw ValidityError("token " + std::to_string(i + 1) + " heads itself");
    }
    if (h == 0) ++roots;
  }
  if (roots != 1) {
    throw ValidityError("expected exactly one ROOT child, found " +
                        std::to_string(roots));
  }
  // 0 = unvisited, 1 = on current path, 2 = reaches ROOT.
  std::vector<int> state(n + 1, 0);
  state[0] = 2;
  for (int start = 1; start <= n; ++start) {
    std::vector<int> path;
    int v = start;
    while (state[v] == 0) {
      state[v] = 1;
      path.push_back(v);
      v = heads[v - 1];
    }
    if (state[v] == 1) {
      throw ValidityError("cycle through token " + std::to_string(v));
    }
    for (int p : path) state[p] = 2;
  }
}

bool DepTree::IsValid() const {
  try {
    Validate();
    return true;
  } catch (const ValidityError &) {
    return false;
  }
}

bool DepTree::IsProjective() const {
  const int n = size();
  for (int i = 1; i <= n; ++i) {
    const int a1 = std::min(i, heads[i - 1]), b1 = std::max(i, heads[i - 1]);
    for (int j = 1; j <= n; ++j) {
      const int a2 = std::min(j, heads[j - 1]), b2 = std::max(j, heads[j - 1]);
      if (a1 < a2 && a2 < b1 && b1 < b2) return false;
    }
  }
  return true;
}

const std::vector<std::string> &UposTags() {
  static const std::vector<std::string> kTags = {
      "ADJ", "ADP",   "ADV",  "AUX",   "CCONJ", "DET",  "INTJ", "NOUN", "NUM",
      "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X"};
  return kTags;
}

int NumTags() { return static_cast<int>(UposTags().size()); }

int TagId(std::string_view tag) {
  const auto &tags = UposTags();
  auto it = std::find(tags.begin(), tags.end(), tag);
  return it == tags.end() ? -1 : static_cast<int>(it - tags.begin());
}

void TagSeq::Validate() const {
  for (int t : tags) {
    if (t < 0 || t >= NumTags()) {
      throw ValidityError("tag id " + std::to_string(t) + " outside tagset");
    }
  }
}

void Sentence::Validate() const {
  if (tokens.empty()) throw ValidityError("sentence " + id + " is empty");
  for (const auto &t : tokens) {
    if (t.empty()) throw ValidityError("sentence " + id + " has an empty token");
  }
  if (gold_tree) {
    if (gold_tree->size() != size()) {
      throw ValidityError("sentence " + id + ": tree length mismatch");
    }
    gold_tree->Validate();
  }
  if (gold_tags) {
    if (gold_tags->size() != size()) {
      throw ValidityError("sentence " + id + ": tag length mismatch");
    }
    gold_tags->Validate();
  }
}

}  // namespace spad::treebank
