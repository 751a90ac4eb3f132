#include "spad/harness/significance.h"

#include <cmath>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "spad/base/error.h"
#include "spad/base/rng.h"

namespace spad::harness {

std::string_view TestMethodName(TestMethod m) {
  return m == TestMethod::kSignBootstrap ? "sign_bootstrap" : "welch_t";
}

TestMethod TestMethodFromName(std::string_view name) {
  if (name == "sign_bootstrap") return TestMethod::kSignBootstrap;
  if (name == "welch_t") return TestMethod::kWelchT;
  throw ConfigError("unknown test method '" + std::string(name) +
                    "' (expected sign_bootstrap or welch_t)");
}

nlohmann::json SignificanceResult::ToJson() const {
  nlohmann::json j = {{"method", TestMethodName(method)},
                      {"statistic", statistic},
                      {"p_value", p_value},
                      {"degenerate", degenerate},
                      {"n_before", n_before},
                      {"n_after", n_after}};
  if (method == TestMethod::kSignBootstrap) {
    j["resamples"] = resamples;
    j["seed"] = seed;
  } else {
    j["dof"] = dof;
  }
  return j;
}

SignificanceResult SignBootstrap(const std::vector<double> &before,
                                 const std::vector<double> &after, int resamples,
                                 uint64_t seed) {
  if (before.size() != after.size()) {
    throw ShapeError("paired test needs equal-length samples");
  }
  if (before.empty()) throw ShapeError("paired test needs at least one unit");
  if (resamples < kMinResamples) {
    throw PreconditionError("at least " + std::to_string(kMinResamples) + " resamples required");
  }
  const size_t n = before.size();
  std::vector<int> sign(n);
  long total = 0;
  for (size_t i = 0; i < n; ++i) {
    const double d = after[i] - before[i];
    sign[i] = (d > 0) - (d < 0);
    total += sign[i];
  }
  // Integer sums keep the tie test exact: S* - S >= S iff sum* >= 2 sum.
  Rng rng = Rng::Derive(seed, "sign-bootstrap");
  double exceed = 0.0;
  for (int r = 0; r < resamples; ++r) {
    long sum = 0;
    for (size_t i = 0; i < n; ++i) sum += sign[rng.UniformInt(n)];
    if (sum > 2 * total) {
      exceed += 1.0;
    } else if (sum == 2 * total) {
      exceed += 0.5;
    }
  }
  SignificanceResult out;
  out.method = TestMethod::kSignBootstrap;
  out.statistic = static_cast<double>(total) / static_cast<double>(n);
  out.p_value = exceed / resamples;
  out.n_before = out.n_after = static_cast<long>(n);
  out.resamples = resamples;
  out.seed = seed;
  return out;
}

namespace {

void MeanVar(const std::vector<double> &x, double *mean, double *var) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  *mean = m;
  *var = ss / static_cast<double>(x.size() - 1);
}

}  // namespace

SignificanceResult WelchT(const std::vector<double> &before, const std::vector<double> &after) {
  if (before.size() < 2 || after.size() < 2) {
    throw ShapeError("Welch's t-test needs at least two values per sample");
  }
  double mb, vb, ma, va;
  MeanVar(before, &mb, &vb);
  MeanVar(after, &ma, &va);
  const double nb = static_cast<double>(before.size());
  const double na = static_cast<double>(after.size());
  SignificanceResult out;
  out.method = TestMethod::kWelchT;
  out.n_before = static_cast<long>(before.size());
  out.n_after = static_cast<long>(after.size());
  const double qa = va / na, qb = vb / nb;
  if (qa + qb == 0.0) {
    out.degenerate = true;
    out.p_value = ma > mb ? 0.0 : 1.0;
    return out;
  }
  out.statistic = (ma - mb) / std::sqrt(qa + qb);
  out.dof = (qa + qb) * (qa + qb) / (qa * qa / (na - 1) + qb * qb / (nb - 1));
  const boost::math::students_t dist(out.dof);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

SignificanceResult Significance(const std::vector<double> &before,
                                const std::vector<double> &after, TestMethod method,
                                int resamples, uint64_t seed) {
  if (method == TestMethod::kSignBootstrap) return SignBootstrap(before, after, resamples, seed);
  return WelchT(before, after);
}

}  // namespace spad::harness
