#include "spad/harness/record.h"

#include <fstream>

#include "spad/base/error.h"

namespace spad::harness {

nlohmann::json RewardBreakdown::ToJson() const {
  return {{"s_p", s_p},     {"s_f", s_f},     {"s_m", s_m},
          {"unk_penalty", unk_penalty},     {"total", total},
          {"alpha", alpha}, {"beta", beta}, {"gamma", gamma},
          {"w_unk", w_unk}};
}

RewardBreakdown RewardBreakdown::FromJson(const nlohmann::json &j) {
  RewardBreakdown r;
  try {
    r.s_p = j.at("s_p").get<double>();
    r.s_f = j.at("s_f").get<double>();
    r.s_m = j.at("s_m").get<double>();
    r.unk_penalty = j.at("unk_penalty").get<double>();
    r.total = j.at("total").get<double>();
    r.alpha = j.at("alpha").get<double>();
    r.beta = j.at("beta").get<double>();
    r.gamma = j.at("gamma").get<double>();
    r.w_unk = j.at("w_unk").get<double>();
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("malformed reward: ") + e.what());
  }
  return r;
}

std::string_view RefModeName(RefMode m) {
  switch (m) {
    case RefMode::kB:
      return "b";
    case RefMode::kC:
      return "c";
    case RefMode::kBAndC:
      return "bc";
  }
  return "unknown";
}

RefMode RefModeFromName(std::string_view name) {
  for (RefMode m : kAllRefModes) {
    if (RefModeName(m) == name) return m;
  }
  throw ConfigError("unknown reference mode: " + std::string(name) +
                    " (expected b, c or bc)");
}

std::vector<bool> AdvRecord::Wrong(RefMode mode) const {
  const std::vector<int> *truth = &pred_b;
  if (mode == RefMode::kC) truth = &pred_c;
  if (mode == RefMode::kBAndC && !Consensus()) return {};
  std::vector<bool> wrong(pred_a.size());
  for (size_t i = 0; i < pred_a.size(); ++i) wrong[i] = pred_a[i] != (*truth)[i];
  return wrong;
}

void AdvRecord::Validate() const {
  if (kind != "parser" && kind != "tagger") {
    throw ValidityError("record " + id + ": unknown kind '" + kind + "'");
  }
  if (generated.empty()) throw ValidityError("record " + id + ": empty generated sentence");
  const size_t n = generated.size();
  if (pred_a.size() != n || pred_b.size() != n || pred_c.size() != n) {
    throw ValidityError("record " + id + ": predictions do not match the generated length");
  }
  if (!victim_original.empty() && victim_original.size() != original.size()) {
    throw ValidityError("record " + id + ": victim prediction does not match the original");
  }
}

namespace {

nlohmann::json Flags(const std::vector<bool> &v) {
  nlohmann::json out = nlohmann::json::array();
  for (bool b : v) out.push_back(b ? 1 : 0);
  return out;
}

}  // namespace

nlohmann::json AdvRecord::ToJson() const {
  nlohmann::json j = {{"id", id},
                      {"kind", kind},
                      {"original", original},
                      {"generated", generated},
                      {"victim_original", victim_original},
                      {"pred_a", pred_a},
                      {"pred_b", pred_b},
                      {"pred_c", pred_c}};
  j["reward"] = reward ? reward->ToJson() : nlohmann::json(nullptr);
  for (RefMode m : kAllRefModes) {
    j["wrong_" + std::string(RefModeName(m))] = Flags(Wrong(m));
  }
  return j;
}

AdvRecord AdvRecord::FromJson(const nlohmann::json &j) {
  AdvRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.kind = j.at("kind").get<std::string>();
    r.original = j.at("original").get<std::vector<std::string>>();
    r.generated = j.at("generated").get<std::vector<std::string>>();
    r.victim_original = j.value("victim_original", std::vector<int>{});
    r.pred_a = j.at("pred_a").get<std::vector<int>>();
    r.pred_b = j.at("pred_b").get<std::vector<int>>();
    r.pred_c = j.at("pred_c").get<std::vector<int>>();
    if (j.contains("reward") && !j.at("reward").is_null()) {
      r.reward = RewardBreakdown::FromJson(j.at("reward"));
    }
    r.Validate();
    for (RefMode m : kAllRefModes) {
      const std::string key = "wrong_" + std::string(RefModeName(m));
      if (j.contains(key) && j.at(key) != Flags(r.Wrong(m))) {
        throw FormatError("record " + r.id + ": " + key + " disagrees with the predictions");
      }
    }
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("malformed record: ") + e.what());
  } catch (const ValidityError &e) {
    throw FormatError(e.what());
  }
  return r;
}

void WriteRecords(const std::string &path, const std::vector<AdvRecord> &records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const auto &r : records) out << r.ToJson().dump() << '\n';
  if (!out) throw IoError("failed writing " + path);
}

std::vector<AdvRecord> ReadRecords(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::vector<AdvRecord> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception &e) {
      throw FormatError(path + ":" + std::to_string(number) + ": " + e.what());
    }
    out.push_back(AdvRecord::FromJson(j));
  }
  return out;
}

}  // namespace spad::harness
