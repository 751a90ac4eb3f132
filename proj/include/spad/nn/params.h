#ifndef SPAD_NN_PARAMS_H_
#define SPAD_NN_PARAMS_H_

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "spad/base/rng.h"
#include "spad/nn/tensor.h"

namespace spad::nn {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Named parameters with gradient accumulators. Iteration order is insertion
// order, which fixes checkpoint layout and optimizer reduction order.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore &) = delete;
  ParamStore &operator=(const ParamStore &) = delete;
  ParamStore(ParamStore &&) = default;
  ParamStore &operator=(ParamStore &&) = default;

  Parameter &Add(const std::string &name, Tensor init);
  // Glorot-uniform initialized matrix.
  Parameter &AddGlorot(const std::string &name, int rows, int cols, Rng &rng);
  Parameter &AddUniform(const std::string &name, int rows, int cols,
                        double scale, Rng &rng);
  Parameter &AddZeros(const std::string &name, int rows, int cols);

  Parameter &Get(const std::string &name);
  const Parameter &Get(const std::string &name) const;
  bool Contains(const std::string &name) const {
    return index_.count(name) > 0;
  }

  std::vector<Parameter *> All();
  std::vector<const Parameter *> All() const;
  size_t size() const { return params_.size(); }
  size_t NumScalars() const;

  void ZeroGrad();
  double GradNorm() const;
  // Rescales all gradients so their global L2 norm is at most max_norm.
  // Returns the pre-clipping norm.
  double ClipGradNorm(double max_norm);
  // Rounds every value to the nearest float32, so that a checkpoint
  // round trip reproduces the parameters exactly.
  void RoundToFloat();

  long step() const { return step_; }
  void IncrementStep() { ++step_; }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, size_t> index_;
  long step_ = 0;
};

}  // namespace spad::nn

#endif  // SPAD_NN_PARAMS_H_
