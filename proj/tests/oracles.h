#ifndef SPAD_TESTS_ORACLES_H_
#define SPAD_TESTS_ORACLES_H_

// Brute-force reference implementations used by the unit and acceptance
// tests. They share no code with the library beyond plain data types.

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "spad/base/rng.h"
#include "spad/nn/tensor.h"
#include "spad/structpred/decode.h"

namespace spad::oracle {

inline bool IsSingleRootTree(const std::vector<int> &heads) {
  const int n = static_cast<int>(heads.size());
  int roots = 0;
  for (int d = 1; d <= n; ++d) {
    const int h = heads[d - 1];
    if (h < 0 || h > n || h == d) return false;
    roots += h == 0;
  }
  if (roots != 1) return false;
  for (int d = 1; d <= n; ++d) {
    int v = d, steps = 0;
    while (v != 0) {
      v = heads[v - 1];
      if (++steps > n) return false;
    }
  }
  return true;
}

inline bool IsProjectiveTree(const std::vector<int> &heads) {
  const int n = static_cast<int>(heads.size());
  // Every token between a head and its dependent must descend from the head.
  auto dominates = [&](int h, int v) {
    while (v != 0 && v != h) v = heads[v - 1];
    return v == h;
  };
  for (int d = 1; d <= n; ++d) {
    const int h = heads[d - 1];
    const int lo = std::min(h, d), hi = std::max(h, d);
    for (int k = lo + 1; k < hi; ++k) {
      if (!dominates(h, k)) return false;
    }
  }
  return true;
}

// All head sequences of length n satisfying keep, in lexicographic order.
inline std::vector<std::vector<int>> EnumerateTrees(
    int n, const std::function<bool(const std::vector<int> &)> &keep) {
  std::vector<std::vector<int>> out;
  std::vector<int> heads(n, 0);
  while (true) {
    if (keep(heads)) out.push_back(heads);
    int pos = n - 1;
    while (pos >= 0 && heads[pos] == n) heads[pos--] = 0;
    if (pos < 0) break;
    ++heads[pos];
  }
  return out;
}

inline const std::vector<std::vector<int>> &AllTrees(int n, bool projective) {
  static std::map<std::pair<int, bool>, std::vector<std::vector<int>>> cache;
  auto key = std::make_pair(n, projective);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto trees = EnumerateTrees(n, [projective](const std::vector<int> &h) {
    if (!IsSingleRootTree(h)) return false;
    return !projective || IsProjectiveTree(h);
  });
  return cache.emplace(key, std::move(trees)).first->second;
}

struct BestTree {
  double score = -std::numeric_limits<double>::infinity();
  std::vector<int> heads;
};

// Maximum over the candidate trees; ties (within 1e-9 relative) go to the
// lexicographically first candidate.
inline BestTree BruteForceTree(const structpred::ArcScores &s, bool projective) {
  const auto &trees = AllTrees(s.size(), projective);
  BestTree best;
  for (const auto &h : trees) {
    double total = 0.0;
    for (int d = 1; d <= s.size(); ++d) total += s(h[d - 1], d);
    const double tol = 1e-9 * std::max(1.0, std::abs(best.score));
    if (best.heads.empty() || total > best.score + tol) {
      best.score = total;
      best.heads = h;
    }
  }
  return best;
}

struct BestPath {
  double score = -std::numeric_limits<double>::infinity();
  std::vector<int> tags;
};

inline BestPath BruteForcePath(const nn::Tensor &e, const nn::Tensor &t) {
  const int n = e.rows(), k = e.cols();
  BestPath best;
  std::vector<int> tags(n, 0);
  while (true) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      total += e(i, tags[i]);
      if (i > 0) total += t(tags[i - 1], tags[i]);
    }
    const double tol = 1e-9 * std::max(1.0, std::abs(best.score));
    if (best.tags.empty() || total > best.score + tol) {
      best.score = total;
      best.tags = tags;
    }
    int pos = n - 1;
    while (pos >= 0 && tags[pos] == k - 1) tags[pos--] = 0;
    if (pos < 0) break;
    ++tags[pos];
  }
  return best;
}

// Random scores: continuous normals, or small integers to force ties.
inline structpred::ArcScores RandomArcScores(int n, Rng &rng, bool integer) {
  structpred::ArcScores s(n);
  for (int h = 0; h <= n; ++h) {
    for (int d = 1; d <= n; ++d) {
      s.Set(h, d, integer ? static_cast<double>(rng.UniformInt(4)) : rng.Normal());
    }
  }
  return s;
}

inline nn::Tensor RandomMatrix(int rows, int cols, Rng &rng, bool integer) {
  nn::Tensor m(rows, cols);
  for (size_t i = 0; i < m.size(); ++i) {
    m[i] = integer ? static_cast<double>(rng.UniformInt(3)) : rng.Normal();
  }
  return m;
}

}  // namespace spad::oracle

#endif  // SPAD_TESTS_ORACLES_H_
