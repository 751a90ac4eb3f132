#ifndef SPAD_HARNESS_REPORT_H_
#define SPAD_HARNESS_REPORT_H_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "spad/genattack/reward.h"
#include "spad/harness/metrics.h"
#include "spad/harness/record.h"

namespace spad::harness {

struct ModeReport {
  // Absent when the mode leaves nothing to count.
  std::optional<double> token_rate;
  std::optional<double> sentence_rate;
  AttackCounts counts;

  bool operator==(const ModeReport &o) const = default;
};

struct EvalReport {
  long records = 0;
  std::array<ModeReport, 3> modes;  // indexed like kAllRefModes
  // Absent when the corresponding scorer was not supplied.
  std::optional<double> mean_perplexity;  // of the generated sentences
  std::optional<double> mean_s_m;         // similarity of generated to original
  nlohmann::json config;            // echo of the producing run

  const ModeReport &Mode(RefMode m) const { return modes[static_cast<int>(m)]; }
  bool operator==(const EvalReport &o) const = default;
  nlohmann::json ToJson() const;
  // Throws FormatError on malformed input.
  static EvalReport FromJson(const nlohmann::json &j);
};

// Rates under every reference mode plus fluency and meaning scores from
// whichever scorers are non-null. Throws PreconditionError on no records;
// rate and scorer errors propagate.
EvalReport EvaluateReport(const std::vector<AdvRecord> &records,
                          const genattack::Scorers &scorers,
                          const nlohmann::json &config = nlohmann::json::object(), int jobs = 1);

void WriteReport(const std::string &path, const EvalReport &report);
EvalReport ReadReport(const std::string &path);

}  // namespace spad::harness

#endif  // SPAD_HARNESS_REPORT_H_
