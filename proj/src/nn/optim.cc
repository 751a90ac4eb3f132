#include "spad/nn/optim.h"

#include <cmath>

#include "spad/base/error.h"

namespace spad::nn {

AdamState::AdamState(const ParamStore &params, AdamConfig config)
    : config_(config) {
  if (!(config.beta1 > 0.0 && config.beta1 < 1.0 && config.beta2 > 0.0 &&
        config.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in (0, 1)");
  }
  for (const Parameter *p : params.All()) {
    first_.push_back(Tensor::ZerosLike(p->value));
    second_.push_back(Tensor::ZerosLike(p->value));
  }
}

void AdamState::Step(ParamStore &params) {
  auto all = params.All();
  if (all.size() != first_.size()) {
    throw ShapeError("parameter store does not match optimizer state");
  }
  if (config_.clip_norm > 0.0) params.ClipGradNorm(config_.clip_norm);
  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (size_t k = 0; k < all.size(); ++k) {
    Parameter &p = *all[k];
    if (!p.grad.SameShape(first_[k]) || !p.value.SameShape(first_[k])) {
      throw ShapeError("shape mismatch for parameter " + p.name);
    }
    Tensor &m = first_[k];
    Tensor &v = second_[k];
    for (size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p.value[i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
  params.ZeroGrad();
  params.IncrementStep();
}

namespace {

double RelativeError(double analytic, double numeric) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace

namespace {

double CheckParams(ParamStore &params, const std::function<Expr(Graph &)> &loss_fn,
                   double h, bool fourth_order) {
  if (!(h > 0.0)) throw PreconditionError("finite-difference step must be > 0");
  params.ZeroGrad();
  {
    Graph g;
    Expr loss = loss_fn(g);
    if (!std::isfinite(loss.value().scalar())) {
      throw NumericError("loss is not finite");
    }
    g.Backward(loss);
  }
  double worst = 0.0;
  for (Parameter *p : params.All()) {
    for (size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      auto at = [&](double offset) {
        p->value[i] = saved + offset;
        Graph g;
        const double v = loss_fn(g).value().scalar();
        if (!std::isfinite(v)) throw NumericError("loss is not finite");
        return v;
      };
      double numeric;
      if (fourth_order) {
        numeric = (at(-2 * h) - 8 * at(-h) + 8 * at(h) - at(2 * h)) / (12 * h);
      } else {
        numeric = (at(h) - at(-h)) / (2 * h);
      }
      p->value[i] = saved;
      worst = std::max(worst, RelativeError(p->grad[i], numeric));
    }
  }
  params.ZeroGrad();
  return worst;
}

}  // namespace

double FiniteDiffCheck(ParamStore &params,
                       const std::function<Expr(Graph &)> &loss_fn, double h) {
  return CheckParams(params, loss_fn, h, false);
}

double FiniteDiffCheckFourthOrder(ParamStore &params,
                                  const std::function<Expr(Graph &)> &loss_fn,
                                  double h) {
  return CheckParams(params, loss_fn, h, true);
}

double FiniteDiffCheck(const std::function<double(std::span<const double>)> &f,
                       std::span<const double> point,
                       std::span<const double> analytic, double h) {
  if (!(h > 0.0)) throw PreconditionError("finite-difference step must be > 0");
  if (point.size() != analytic.size()) {
    throw ShapeError("gradient length does not match point");
  }
  std::vector<double> x(point.begin(), point.end());
  double worst = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("function value is not finite");
    }
    worst = std::max(worst, RelativeError(analytic[i], (up - down) / (2 * h)));
  }
  return worst;
}

int SampleCategorical(std::span<const double> probabilities, Rng &rng) {
  if (probabilities.empty()) throw DistributionError("empty distribution");
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0)) throw DistributionError("negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw DistributionError("probabilities sum to " + std::to_string(total));
  }
  const double u = rng.Uniform() * total;
  double cum = 0.0;
  int last_nonzero = 0;
  for (size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] <= 0.0) continue;
    cum += probabilities[i];
    last_nonzero = static_cast<int>(i);
    if (u < cum) return last_nonzero;
  }
  return last_nonzero;
}

}  // namespace spad::nn
