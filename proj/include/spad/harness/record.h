#ifndef SPAD_HARNESS_RECORD_H_
#define SPAD_HARNESS_RECORD_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace spad::harness {

// Weighted reward of one generated sentence:
// total = alpha * s_p + beta * s_f + gamma * s_m + unk_penalty.
struct RewardBreakdown {
  double s_p = 0.0;
  double s_f = 0.0;  // negative perplexity
  double s_m = 0.0;
  double unk_penalty = 0.0;
  double total = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double w_unk = 0.0;

  bool operator==(const RewardBreakdown &o) const = default;
  nlohmann::json ToJson() const;
  static RewardBreakdown FromJson(const nlohmann::json &j);
};

// Ground truth against which the victim is scored: one reference model,
// or the consensus of both (sentences where they disagree are discarded).
enum class RefMode { kB, kC, kBAndC };

std::string_view RefModeName(RefMode m);  // "b", "c", "bc"
// Throws ConfigError for unknown names.
RefMode RefModeFromName(std::string_view name);
inline constexpr RefMode kAllRefModes[] = {RefMode::kB, RefMode::kC, RefMode::kBAndC};

// One attacked sentence. Predictions are heads (parsers) or tag ids
// (taggers) on the generated sentence.
struct AdvRecord {
  std::string id;
  std::string kind;  // "parser" or "tagger"
  std::vector<std::string> original;
  std::vector<std::string> generated;
  std::vector<int> victim_original;  // A on the original; may be empty
  std::vector<int> pred_a;
  std::vector<int> pred_b;
  std::vector<int> pred_c;
  std::optional<RewardBreakdown> reward;

  bool operator==(const AdvRecord &o) const = default;

  bool Consensus() const { return pred_b == pred_c; }
  // Per-token flags: A differs from the mode's ground truth. Empty for
  // kBAndC when B and C disagree.
  std::vector<bool> Wrong(RefMode mode) const;
  // Throws ValidityError when predictions do not match the generated
  // length or the kind is unknown.
  void Validate() const;
  // Includes the wrongness flags of every mode.
  nlohmann::json ToJson() const;
  // Throws FormatError on malformed input or flags inconsistent with the
  // predictions.
  static AdvRecord FromJson(const nlohmann::json &j);
};

// Line-delimited JSON, one record per line.
void WriteRecords(const std::string &path, const std::vector<AdvRecord> &records);
std::vector<AdvRecord> ReadRecords(const std::string &path);

}  // namespace spad::harness

#endif  // SPAD_HARNESS_RECORD_H_
