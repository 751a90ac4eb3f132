#ifndef SPAD_NN_OPTIM_H_
#define SPAD_NN_OPTIM_H_

#include <functional>
#include <span>
#include <vector>

#include "spad/base/rng.h"
#include "spad/nn/graph.h"
#include "spad/nn/params.h"

namespace spad::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Global-norm gradient clipping applied before each step; <= 0 disables.
  double clip_norm = 5.0;
};

// Learning-rate defaults: model pretraining, parsing-attacker RL,
// tagging-attacker RL.
inline constexpr double kPretrainLearningRate = 1e-3;
inline constexpr double kParsingRlLearningRate = 2e-5;
inline constexpr double kTaggingRlLearningRate = 5e-5;

class AdamState {
 public:
  AdamState(const ParamStore &params, AdamConfig config);

  const AdamConfig &config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  long steps() const { return steps_; }

  // Bias-corrected Adam update from the accumulated gradients, then clears
  // them and increments the store's step counter.
  void Step(ParamStore &params);

 private:
  AdamConfig config_;
  std::vector<Tensor> first_;
  std::vector<Tensor> second_;
  long steps_ = 0;
};

// Max over coordinates of |analytic - central| / max(|analytic|, |central|,
// 1e-8). The loss is rebuilt from scratch for every perturbation, so
// loss_fn must be deterministic.
double FiniteDiffCheck(ParamStore &params,
                       const std::function<Expr(Graph &)> &loss_fn, double h);

// Same measure against the fourth-order five-point stencil. Suited to losses
// with coordinates far smaller than the loss itself, where the rounding noise
// of a central difference dominates.
double FiniteDiffCheckFourthOrder(ParamStore &params,
                                  const std::function<Expr(Graph &)> &loss_fn,
                                  double h);

// Same check for a plain scalar function of a parameter vector with a
// caller-supplied analytic gradient.
double FiniteDiffCheck(const std::function<double(std::span<const double>)> &f,
                       std::span<const double> point,
                       std::span<const double> analytic, double h);

// Draws an index with the given probabilities. Probabilities must be
// non-negative and sum to 1 within 1e-6.
int SampleCategorical(std::span<const double> probabilities, Rng &rng);

}  // namespace spad::nn

#endif  // SPAD_NN_OPTIM_H_
