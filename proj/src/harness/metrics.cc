#include "spad/harness/metrics.h"

#include <algorithm>

namespace spad::harness {

double AttackCounts::TokenRate() const {
  if (tokens_counted == 0) throw UndefinedRateError("no tokens left to count");
  return 100.0 * static_cast<double>(tokens_wrong) / static_cast<double>(tokens_counted);
}

double AttackCounts::SentenceRate() const {
  if (sentences_counted == 0) throw UndefinedRateError("no sentences left to count");
  return 100.0 * static_cast<double>(sentences_wrong) /
         static_cast<double>(sentences_counted);
}

nlohmann::json AttackCounts::ToJson() const {
  return {{"tokens_counted", tokens_counted},
          {"tokens_wrong", tokens_wrong},
          {"sentences_counted", sentences_counted},
          {"sentences_wrong", sentences_wrong},
          {"tokens_discarded", tokens_discarded},
          {"sentences_discarded", sentences_discarded}};
}

AttackCounts AttackCounts::FromJson(const nlohmann::json &j) {
  try {
    AttackCounts c;
    c.tokens_counted = j.at("tokens_counted").get<long>();
    c.tokens_wrong = j.at("tokens_wrong").get<long>();
    c.sentences_counted = j.at("sentences_counted").get<long>();
    c.sentences_wrong = j.at("sentences_wrong").get<long>();
    c.tokens_discarded = j.at("tokens_discarded").get<long>();
    c.sentences_discarded = j.at("sentences_discarded").get<long>();
    return c;
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("attack counts: ") + e.what());
  }
}

AttackCounts CountAttacks(const std::vector<AdvRecord> &records, RefMode mode) {
  AttackCounts c;
  for (const AdvRecord &r : records) {
    r.Validate();
    const long n = static_cast<long>(r.generated.size());
    if (mode == RefMode::kBAndC && !r.Consensus()) {
      c.tokens_discarded += n;
      ++c.sentences_discarded;
      continue;
    }
    const std::vector<bool> wrong = r.Wrong(mode);
    const long w = std::count(wrong.begin(), wrong.end(), true);
    c.tokens_counted += n;
    c.tokens_wrong += w;
    ++c.sentences_counted;
    c.sentences_wrong += w > 0;
  }
  return c;
}

double TokenAttackRate(const std::vector<AdvRecord> &records, RefMode mode) {
  return CountAttacks(records, mode).TokenRate();
}

double SentenceAttackRate(const std::vector<AdvRecord> &records, RefMode mode) {
  return CountAttacks(records, mode).SentenceRate();
}

}  // namespace spad::harness
