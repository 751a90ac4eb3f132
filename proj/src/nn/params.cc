#include "spad/nn/params.h"

#include <cmath>

#include "spad/base/error.h"

namespace spad::nn {

Parameter &ParamStore::Add(const std::string &name, Tensor init) {
  if (index_.count(name)) throw ConfigError("duplicate parameter: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->grad = Tensor::ZerosLike(init);
  p->value = std::move(init);
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter &ParamStore::AddGlorot(const std::string &name, int rows, int cols,
                                 Rng &rng) {
  const double scale = std::sqrt(6.0 / (rows + cols));
  return AddUniform(name, rows, cols, scale, rng);
}

Parameter &ParamStore::AddUniform(const std::string &name, int rows, int cols,
                                  double scale, Rng &rng) {
  Tensor t(rows, cols);
  for (double &v : t.data()) v = rng.Uniform(-scale, scale);
  return Add(name, std::move(t));
}

Parameter &ParamStore::AddZeros(const std::string &name, int rows, int cols) {
  return Add(name, Tensor(rows, cols));
}

Parameter &ParamStore::Get(const std::string &name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return *params_[it->second];
}

const Parameter &ParamStore::Get(const std::string &name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return *params_[it->second];
}

std::vector<Parameter *> ParamStore::All() {
  std::vector<Parameter *> out;
  out.reserve(params_.size());
  for (auto &p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter *> ParamStore::All() const {
  std::vector<const Parameter *> out;
  out.reserve(params_.size());
  for (const auto &p : params_) out.push_back(p.get());
  return out;
}

size_t ParamStore::NumScalars() const {
  size_t n = 0;
  for (const auto &p : params_) n += p->value.size();
  return n;
}

void ParamStore::ZeroGrad() {
  for (auto &p : params_) p->grad.Fill(0.0);
}

double ParamStore::GradNorm() const {
  double sq = 0.0;
  for (const auto &p : params_) {
    for (double g : p->grad.data()) sq += g * g;
  }
  return std::sqrt(sq);
}

double ParamStore::ClipGradNorm(double max_norm) {
  const double norm = GradNorm();
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto &p : params_) {
      for (double &g : p->grad.data()) g *= scale;
    }
  }
  return norm;
}

void ParamStore::RoundToFloat() {
  for (auto &p : params_) {
    for (double &v : p->value.data()) v = static_cast<double>(float(v));
  }
}

}  // namespace spad::nn
