#ifndef SPAD_HARNESS_METRICS_H_
#define SPAD_HARNESS_METRICS_H_

#include <string>
#include <vector>

#include "json.hpp"
#include "spad/base/error.h"
#include "spad/harness/record.h"

namespace spad::harness {

// Raised when a rate has no sentences left to count.
class UndefinedRateError : public Error {
 public:
  explicit UndefinedRateError(const std::string &what)
      : Error(Kind::kPrecondition, what) {}
};

// Token and sentence tallies of one reference mode. Every token is counted;
// under kBAndC sentences where B and C disagree are discarded whole.
struct AttackCounts {
  long tokens_counted = 0;
  long tokens_wrong = 0;
  long sentences_counted = 0;
  long sentences_wrong = 0;  // at least one wrong token
  long tokens_discarded = 0;
  long sentences_discarded = 0;

  bool operator==(const AttackCounts &o) const = default;
  // Percentages; throw UndefinedRateError when nothing was counted.
  double TokenRate() const;
  double SentenceRate() const;
  nlohmann::json ToJson() const;
  static AttackCounts FromJson(const nlohmann::json &j);
};

// Validates every record (ValidityError).
AttackCounts CountAttacks(const std::vector<AdvRecord> &records, RefMode mode);

// 100 x wrong tokens / counted tokens.
double TokenAttackRate(const std::vector<AdvRecord> &records, RefMode mode);
// 100 x sentences with a wrong token / counted sentences.
double SentenceAttackRate(const std::vector<AdvRecord> &records, RefMode mode);

}  // namespace spad::harness

#endif  // SPAD_HARNESS_METRICS_H_
