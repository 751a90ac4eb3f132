#include "spad/harness/report.h"

#include <fstream>
#include <sstream>

#include "spad/base/error.h"
#include "spad/base/parallel.h"
#include "spad/quality/embedder.h"
#include "spad/quality/lm.h"

namespace spad::harness {

namespace {

nlohmann::json OptionalJson(const std::optional<double> &v) {
  return v ? nlohmann::json(*v) : nlohmann::json();
}

std::optional<double> OptionalDouble(const nlohmann::json &j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

nlohmann::json EvalReport::ToJson() const {
  nlohmann::json by_mode = nlohmann::json::object();
  for (RefMode m : kAllRefModes) {
    const ModeReport &r = Mode(m);
    by_mode[std::string(RefModeName(m))] = {{"token_rate", OptionalJson(r.token_rate)},
                                            {"sentence_rate", OptionalJson(r.sentence_rate)},
                                            {"counts", r.counts.ToJson()}};
  }
  return {{"records", records},
          {"modes", by_mode},
          {"mean_perplexity", OptionalJson(mean_perplexity)},
          {"mean_s_m", OptionalJson(mean_s_m)},
          {"config", config}};
}

EvalReport EvalReport::FromJson(const nlohmann::json &j) {
  try {
    EvalReport r;
    r.records = j.at("records").get<long>();
    for (RefMode m : kAllRefModes) {
      const nlohmann::json &e = j.at("modes").at(std::string(RefModeName(m)));
      ModeReport &mr = r.modes[static_cast<int>(m)];
      mr.token_rate = OptionalDouble(e.at("token_rate"));
      mr.sentence_rate = OptionalDouble(e.at("sentence_rate"));
      mr.counts = AttackCounts::FromJson(e.at("counts"));
    }
    r.mean_perplexity = OptionalDouble(j.at("mean_perplexity"));
    r.mean_s_m = OptionalDouble(j.at("mean_s_m"));
    r.config = j.at("config");
    return r;
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("report: ") + e.what());
  }
}

EvalReport EvaluateReport(const std::vector<AdvRecord> &records,
                          const genattack::Scorers &scorers, const nlohmann::json &config,
                          int jobs) {
  if (records.empty()) throw PreconditionError("cannot report on no records");
  EvalReport report;
  report.records = static_cast<long>(records.size());
  report.config = config;
  for (RefMode m : kAllRefModes) {
    ModeReport &mr = report.modes[static_cast<int>(m)];
    mr.counts = CountAttacks(records, m);
    if (mr.counts.tokens_counted > 0) mr.token_rate = mr.counts.TokenRate();
    if (mr.counts.sentences_counted > 0) mr.sentence_rate = mr.counts.SentenceRate();
  }
  std::vector<double> ppl(records.size()), sim(records.size());
  ParallelFor(records.size(), jobs, [&](size_t i) {
    if (scorers.lm != nullptr) ppl[i] = scorers.lm->Perplexity(records[i].generated);
    if (scorers.embedder != nullptr) {
      sim[i] = quality::SimScore(records[i].original, records[i].generated, *scorers.embedder);
    }
  });
  // Summed in order so the result does not depend on jobs.
  const double n = static_cast<double>(records.size());
  if (scorers.lm != nullptr) {
    double total = 0.0;
    for (double v : ppl) total += v;
    report.mean_perplexity = total / n;
  }
  if (scorers.embedder != nullptr) {
    double total = 0.0;
    for (double v : sim) total += v;
    report.mean_s_m = total / n;
  }
  return report;
}

void WriteReport(const std::string &path, const EvalReport &report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << report.ToJson().dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path);
}

EvalReport ReadReport(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(path + ": " + e.what());
  }
  return EvalReport::FromJson(j);
}

}  // namespace spad::harness
