#include "spad/quality/embedder.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "spad/base/error.h"

namespace spad::quality {

using nn::Tensor;

namespace {

constexpr double kNormFloor = 1e-8;

}  // namespace

nlohmann::json EmbedderConfig::ToJson() const {
  return {{"dim", dim}, {"window", window}, {"min_count", min_count}};
}

EmbedderConfig EmbedderConfig::FromJson(const nlohmann::json &j) {
  if (!j.is_object()) throw ConfigError("embedder config must be a JSON object");
  EmbedderConfig c;
  try {
    for (const auto &[k, v] : j.items()) {
      if (k != "dim" && k != "window" && k != "min_count") {
        throw ConfigError("unknown embedder config key: " + k);
      }
    }
    c.dim = j.value("dim", c.dim);
    c.window = j.value("window", c.window);
    c.min_count = j.value("min_count", c.min_count);
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("malformed embedder config: ") + e.what());
  }
  c.Validate();
  return c;
}

void EmbedderConfig::Validate() const {
  if (dim < 1 || window < 1 || min_count < 1) {
    throw ConfigError("embedder dim, window and min_count must be >= 1");
  }
}

Embedder Embedder::Train(const treebank::Corpus &corpus, const EmbedderConfig &config) {
  config.Validate();
  if (corpus.empty()) throw ConfigError("cannot train an embedder on an empty corpus");
  Embedder e;
  e.config_ = config;
  e.vocab_ = treebank::Vocabulary::Build(corpus, config.min_count);
  const int v = e.vocab_.size();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(v, v);
  for (const auto &s : corpus) {
    const std::vector<int> ids = e.vocab_.Lookup(s.tokens);
    const int n = static_cast<int>(ids.size());
    for (int i = 0; i < n; ++i) {
      for (int j = std::max(0, i - config.window); j <= std::min(n - 1, i + config.window); ++j) {
        if (j != i) counts(ids[i], ids[j]) += 1.0;
      }
    }
  }
  const double total = counts.sum();
  const Eigen::VectorXd row = counts.rowwise().sum();
  const Eigen::VectorXd col = counts.colwise().sum().transpose();
  Eigen::MatrixXd ppmi = Eigen::MatrixXd::Zero(v, v);
  for (int a = treebank::kNumReserved; a < v; ++a) {
    for (int b = treebank::kNumReserved; b < v; ++b) {
      if (counts(a, b) > 0.0) {
        ppmi(a, b) = std::max(0.0, std::log(counts(a, b) * total / (row(a) * col(b))));
      }
    }
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(ppmi, Eigen::ComputeThinU);
  const Eigen::MatrixXd &u = svd.matrixU();
  const Eigen::VectorXd &sigma = svd.singularValues();
  const int k = std::min<int>(config.dim, static_cast<int>(sigma.size()));
  e.table_ = Tensor(v, config.dim);
  for (int c = 0; c < k; ++c) {
    // Fix the sign so the largest-magnitude entry is positive.
    Eigen::Index arg = 0;
    u.col(c).cwiseAbs().maxCoeff(&arg);
    const double sign = u(arg, c) < 0.0 ? -1.0 : 1.0;
    const double scale = std::sqrt(sigma(c));
    for (int r = treebank::kNumReserved; r < v; ++r) {
      e.table_(r, c) = static_cast<float>(sign * scale * u(r, c));
    }
  }
  return e;
}

Embedder Embedder::FromTable(treebank::Vocabulary vocab, Tensor table) {
  if (table.rows() != vocab.size()) {
    throw ShapeError("embedding table has " + std::to_string(table.rows()) +
                     " rows for a vocabulary of " + std::to_string(vocab.size()));
  }
  if (!table.AllFinite()) throw NumericError("embedding table is not finite");
  Embedder e;
  e.config_.dim = table.cols();
  e.vocab_ = std::move(vocab);
  e.table_ = std::move(table);
  return e;
}

nn::Checkpoint Embedder::ToCheckpoint() const {
  nn::Checkpoint ck;
  ck.kind = "embedder";
  ck.flavor = "ppmi_svd";
  ck.meta["config"] = config_.ToJson();
  ck.meta["vocab"] = vocab_.tokens();
  ck.tensors.emplace_back("emb", table_);
  return ck;
}

Embedder Embedder::FromCheckpoint(const nn::Checkpoint &ck) {
  nn::ExpectKind(ck, "embedder");
  try {
    Embedder e = FromTable(
        treebank::Vocabulary::FromTokens(ck.meta.at("vocab").get<std::vector<std::string>>()),
        ck.Find("emb"));
    e.config_ = EmbedderConfig::FromJson(ck.meta.at("config"));
    return e;
  } catch (const nlohmann::json::exception &ex) {
    throw FormatError(std::string("bad embedder metadata: ") + ex.what());
  }
}

Embedder Embedder::Load(const std::string &path) {
  return FromCheckpoint(nn::LoadCheckpoint(path));
}

void Embedder::Save(const std::string &path) const {
  nn::SaveCheckpoint(path, ToCheckpoint());
}

std::vector<double> Embedder::Vector(const std::string &token) const {
  const int id = vocab_.Lookup(token);
  std::vector<double> out(table_.cols());
  for (int c = 0; c < table_.cols(); ++c) out[c] = table_(id, c);
  return out;
}

std::vector<std::vector<double>> Embedder::Vectors(
    const std::vector<std::string> &tokens) const {
  std::vector<std::vector<double>> out;
  out.reserve(tokens.size());
  for (const auto &t : tokens) out.push_back(Vector(t));
  return out;
}

double Cosine(const std::vector<double> &a, const std::vector<double> &b) {
  if (a.size() != b.size()) throw ShapeError("cosine of vectors of different sizes");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::max(std::sqrt(na), kNormFloor) * std::max(std::sqrt(nb), kNormFloor));
}

double SimScore(const std::vector<std::vector<double>> &x,
                const std::vector<std::vector<double>> &y) {
  if (x.empty() || y.empty()) throw ShapeError("similarity of an empty sentence");
  std::vector<double> best_x(x.size(), -std::numeric_limits<double>::infinity());
  std::vector<double> best_y(y.size(), -std::numeric_limits<double>::infinity());
  for (size_t i = 0; i < x.size(); ++i) {
    for (size_t j = 0; j < y.size(); ++j) {
      const double c = Cosine(x[i], y[j]);
      best_x[i] = std::max(best_x[i], c);
      best_y[j] = std::max(best_y[j], c);
    }
  }
  double recall = 0.0, precision = 0.0;
  for (double b : best_x) recall += b;
  for (double b : best_y) precision += b;
  recall /= static_cast<double>(x.size());
  precision /= static_cast<double>(y.size());
  // The harmonic mean needs positive operands; otherwise fall back to the
  // smaller score, which keeps the result within [-1, 1].
  if (recall > 0.0 && precision > 0.0) {
    return 2.0 * precision * recall / (precision + recall);
  }
  return std::min(precision, recall);
}

double SimScore(const std::vector<std::string> &x, const std::vector<std::string> &y,
                const Embedder &embedder) {
  return SimScore(embedder.Vectors(x), embedder.Vectors(y));
}

}  // namespace spad::quality
