#ifndef SPAD_HARNESS_SIGNIFICANCE_H_
#define SPAD_HARNESS_SIGNIFICANCE_H_

#include <cstdint>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace spad::harness {

enum class TestMethod { kSignBootstrap, kWelchT };
std::string_view TestMethodName(TestMethod m);  // "sign_bootstrap", "welch_t"
// Throws ConfigError for unknown names.
TestMethod TestMethodFromName(std::string_view name);

inline constexpr int kMinResamples = 1000;

// One-tailed test of "after is better than before", larger outcomes being
// better.
struct SignificanceResult {
  TestMethod method = TestMethod::kSignBootstrap;
  double statistic = 0.0;  // mean sign of the differences, or Welch's t
  double p_value = 1.0;
  double dof = 0.0;  // Welch only
  // Welch with zero variance in both samples: p is 0 when after has the
  // larger mean and 1 otherwise.
  bool degenerate = false;
  long n_before = 0;
  long n_after = 0;
  int resamples = 0;  // bootstrap only
  uint64_t seed = 0;  // bootstrap only

  bool operator==(const SignificanceResult &o) const = default;
  nlohmann::json ToJson() const;
};

// Paired sign test by bootstrap. The statistic is the mean sign of
// after[i] - before[i]; resamples of the units, shifted to the null of a
// zero mean, give p = P(S* - S > S) + P(S* - S = S) / 2. Throws ShapeError
// on unequal or empty inputs and PreconditionError when resamples is below
// kMinResamples.
SignificanceResult SignBootstrap(const std::vector<double> &before,
                                 const std::vector<double> &after, int resamples,
                                 uint64_t seed);

// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of
// freedom. Throws ShapeError unless each sample has at least two values.
SignificanceResult WelchT(const std::vector<double> &before, const std::vector<double> &after);

SignificanceResult Significance(const std::vector<double> &before,
                                const std::vector<double> &after, TestMethod method,
                                int resamples, uint64_t seed);

}  // namespace spad::harness

#endif  // SPAD_HARNESS_SIGNIFICANCE_H_
