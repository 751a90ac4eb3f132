#include "spad/structpred/agreement.h"

#include "spad/base/error.h"

namespace spad::structpred {

namespace {

size_t CountEqual(const std::vector<int> &a, const std::vector<int> &b) {
  if (a.size() != b.size()) {
    throw ShapeError("agreement between sequences of length " +
                     std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  size_t same = 0;
  for (size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return same;
}

}  // namespace

double Agreement(const std::vector<int> &a, const std::vector<int> &b) {
  const size_t same = CountEqual(a, b);
  if (a.empty()) throw ShapeError("agreement of empty sequences");
  return static_cast<double>(same) / static_cast<double>(a.size());
}

double AttachmentAgreement(const treebank::DepTree &a, const treebank::DepTree &b) {
  return Agreement(a.heads, b.heads);
}

double TagAgreement(const treebank::TagSeq &a, const treebank::TagSeq &b) {
  return Agreement(a.tags, b.tags);
}

double CorpusAgreement(const std::vector<std::vector<int>> &predicted,
                       const std::vector<std::vector<int>> &gold) {
  if (predicted.size() != gold.size()) {
    throw ShapeError("corpus sizes differ");
  }
  size_t same = 0, total = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    same += CountEqual(predicted[i], gold[i]);
    total += gold[i].size();
  }
  if (total == 0) throw ShapeError("agreement over an empty corpus");
  return static_cast<double>(same) / static_cast<double>(total);
}

}  // namespace spad::structpred
