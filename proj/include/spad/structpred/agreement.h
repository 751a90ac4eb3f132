#ifndef SPAD_STRUCTPRED_AGREEMENT_H_
#define SPAD_STRUCTPRED_AGREEMENT_H_

#include <vector>

#include "spad/treebank/sentence.h"

namespace spad::structpred {

// Fraction of positions with identical values. Works for head sequences and
// tag sequences alike. Throws ShapeError on a length mismatch or on empty
// input.
double Agreement(const std::vector<int> &a, const std::vector<int> &b);

double AttachmentAgreement(const treebank::DepTree &a, const treebank::DepTree &b);
double TagAgreement(const treebank::TagSeq &a, const treebank::TagSeq &b);

// Token-weighted agreement over a corpus of aligned sequences.
double CorpusAgreement(const std::vector<std::vector<int>> &predicted,
                       const std::vector<std::vector<int>> &gold);

}  // namespace spad::structpred

#endif  // SPAD_STRUCTPRED_AGREEMENT_H_
