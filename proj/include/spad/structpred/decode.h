#ifndef SPAD_STRUCTPRED_DECODE_H_
#define SPAD_STRUCTPRED_DECODE_H_

#include <limits>
#include <vector>

#include "spad/nn/tensor.h"
#include "spad/treebank/sentence.h"

namespace spad::structpred {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Arc scores s[h][d] for heads h in 0..n (0 is ROOT) and dependents d in
// 1..n. Entries with h == d hold the -inf sentinel.
class ArcScores {
 public:
  ArcScores() = default;
  // All finite entries start at zero.
  explicit ArcScores(int n);
  // From a [n, n+1] matrix whose row d-1 holds the scores of every head for
  // dependent d (the layout produced by the scorers).
  static ArcScores FromDependentRows(const nn::Tensor &rows);

  int size() const { return n_; }
  double operator()(int h, int d) const { return s_[Index(h, d)]; }
  // Writes to the diagonal are ignored so the sentinel survives.
  void Set(int h, int d, double v);

  // Sum of s[heads[d]][d]; -inf when any arc is masked.
  double TreeScore(const std::vector<int> &heads) const;
  // Throws ValidityError on non-finite off-diagonal entries.
  void Validate() const;

 private:
  size_t Index(int h, int d) const { return size_t(h) * n_ + (d - 1); }

  int n_ = 0;
  std::vector<double> s_;
};

// Best projective tree with exactly one ROOT child. Ties go to the
// lexicographically smallest head sequence.
treebank::DepTree DecodeEisner(const ArcScores &scores);

// Maximum spanning arborescence with exactly one ROOT child. Ties go to the
// lexicographically smallest head sequence.
treebank::DepTree DecodeCle(const ArcScores &scores);

// Per-token argmax with single-root enforcement and greedy cycle repair.
treebank::DepTree DecodeGreedy(const ArcScores &scores);

// Best tag path for emissions [n, T] and transitions [T, T] (from row to
// column), all in log space. Ties go to the lexicographically smallest path.
treebank::TagSeq ViterbiDecode(const nn::Tensor &emissions,
                               const nn::Tensor &transitions);

double PathScore(const nn::Tensor &emissions, const nn::Tensor &transitions,
                 const std::vector<int> &tags);

}  // namespace spad::structpred

#endif  // SPAD_STRUCTPRED_DECODE_H_
