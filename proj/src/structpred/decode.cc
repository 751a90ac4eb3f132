#include "spad/structpred/decode.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include "spad/base/error.h"

namespace spad::structpred {

using treebank::DepTree;
using treebank::TagSeq;

namespace {

constexpr double kTieTolerance = 1e-9;

bool NearlyEqual(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) return a == b;
  return std::abs(a - b) <= kTieTolerance * std::max(1.0, std::abs(a));
}

struct Decoded {
  double score = kNegInf;
  std::vector<int> heads;
  bool tie = false;
};

// Fixes heads left to right, taking the smallest head whose constrained
// optimum still reaches the unconstrained one.
std::vector<int> LexicographicRefine(
    const ArcScores &scores, double best,
    const std::function<double(const ArcScores &)> &best_score) {
  const int n = scores.size();
  ArcScores constrained = scores;
  std::vector<int> heads(n, 0);
  for (int d = 1; d <= n; ++d) {
    bool fixed = false;
    for (int h = 0; h <= n && !fixed; ++h) {
      if (h == d || !std::isfinite(scores(h, d))) continue;
      ArcScores trial = constrained;
      for (int g = 0; g <= n; ++g) {
        if (g != h) trial.Set(g, d, kNegInf);
      }
      if (NearlyEqual(best_score(trial), best)) {
        constrained = std::move(trial);
        heads[d - 1] = h;
        fixed = true;
      }
    }
    if (!fixed) throw NumericError("tie refinement lost the optimum");
  }
  return heads;
}

// Eisner's algorithm over tokens 1..n with the ROOT attachment handled at
// the top so that exactly one token attaches to ROOT.
Decoded EisnerCore(const ArcScores &s, bool want_heads) {
  const int n = s.size();
  Decoded out;
  if (n == 0) {
    out.score = 0.0;
    return out;
  }
  // Indexed [i][j] for 1 <= i <= j <= n; direction 0 means head at j
  // (left-pointing), 1 means head at i.
  const int m = n + 1;
  auto at = [m](int i, int j) { return size_t(i) * m + j; };
  std::vector<double> comp[2], inc[2];
  std::vector<int> comp_split[2], inc_split[2];
  for (int dir = 0; dir < 2; ++dir) {
    comp[dir].assign(size_t(m) * m, kNegInf);
    inc[dir].assign(size_t(m) * m, kNegInf);
    comp_split[dir].assign(size_t(m) * m, -1);
    inc_split[dir].assign(size_t(m) * m, -1);
  }
  for (int i = 1; i <= n; ++i) {
    comp[0][at(i, i)] = 0.0;
    comp[1][at(i, i)] = 0.0;
  }
  auto consider = [&out](double cand, double &best, int &split, int r) {
    if (cand > best) {
      best = cand;
      split = r;
    } else if (std::isfinite(cand) && NearlyEqual(cand, best)) {
      out.tie = true;
    }
  };
  for (int len = 1; len < n; ++len) {
    for (int i = 1; i + len <= n; ++i) {
      const int j = i + len;
      for (int r = i; r < j; ++r) {
        const double base = comp[1][at(i, r)] + comp[0][at(r + 1, j)];
        consider(base + s(j, i), inc[0][at(i, j)], inc_split[0][at(i, j)], r);
        consider(base + s(i, j), inc[1][at(i, j)], inc_split[1][at(i, j)], r);
      }
      for (int r = i; r < j; ++r) {
        consider(comp[0][at(i, r)] + inc[0][at(r, j)], comp[0][at(i, j)],
                 comp_split[0][at(i, j)], r);
      }
      for (int r = i + 1; r <= j; ++r) {
        consider(inc[1][at(i, r)] + comp[1][at(r, j)], comp[1][at(i, j)],
                 comp_split[1][at(i, j)], r);
      }
    }
  }
  int root = -1;
  for (int r = 1; r <= n; ++r) {
    const double cand = s(0, r) + comp[0][at(1, r)] + comp[1][at(r, n)];
    int dummy = 0;
    double before = out.score;
    consider(cand, out.score, dummy, r);
    if (out.score != before) root = r;
  }
  if (!want_heads || root < 0) return out;
  out.heads.assign(n, -1);
  out.heads[root - 1] = 0;
  // Explicit stack of (kind, dir, i, j); kind 0 = complete, 1 = incomplete.
  struct Item {
    int kind, dir, i, j;
  };
  std::vector<Item> stack = {{0, 0, 1, root}, {0, 1, root, n}};
  while (!stack.empty()) {
    const Item it = stack.back();
    stack.pop_back();
    if (it.i == it.j) continue;
    if (it.kind == 1) {
      const int r = inc_split[it.dir][at(it.i, it.j)];
      if (it.dir == 0) {
        out.heads[it.i - 1] = it.j;
      } else {
        out.heads[it.j - 1] = it.i;
      }
      stack.push_back({0, 1, it.i, r});
      stack.push_back({0, 0, r + 1, it.j});
    } else {
      const int r = comp_split[it.dir][at(it.i, it.j)];
      if (it.dir == 0) {
        stack.push_back({0, 0, it.i, r});
        stack.push_back({1, 0, r, it.j});
      } else {
        stack.push_back({1, 1, it.i, r});
        stack.push_back({0, 1, r, it.j});
      }
    }
  }
  return out;
}

// Chu-Liu-Edmonds on a dense graph w[u][v] with node 0 as the root.
// Returns parents (parent[0] = -1), or an empty vector when no arborescence
// of finite score exists.
std::vector<int> Arborescence(const std::vector<std::vector<double>> &w) {
  const int m = static_cast<int>(w.size());
  std::vector<int> parent(m, -1);
  for (int v = 1; v < m; ++v) {
    double best = kNegInf;
    for (int u = 0; u < m; ++u) {
      if (u != v && w[u][v] > best) {
        best = w[u][v];
        parent[v] = u;
      }
    }
    if (parent[v] < 0) return {};
  }
  // Find a cycle by walking parent pointers.
  std::vector<int> color(m, 0);
  std::vector<int> cycle;
  color[0] = 2;
  for (int start = 1; start < m && cycle.empty(); ++start) {
    int v = start;
    while (color[v] == 0) {
      color[v] = 1;
      v = parent[v];
    }
    if (color[v] == 1) {
      int u = v;
      do {
        cycle.push_back(u);
        u = parent[u];
      } while (u != v);
    }
    for (v = start; color[v] == 1; v = parent[v]) color[v] = 2;
  }
  if (cycle.empty()) return parent;

  std::vector<bool> in_cycle(m, false);
  for (int v : cycle) in_cycle[v] = true;
  std::vector<int> new_index(m, -1), old_index;
  for (int v = 0; v < m; ++v) {
    if (!in_cycle[v]) {
      new_index[v] = static_cast<int>(old_index.size());
      old_index.push_back(v);
    }
  }
  const int c = static_cast<int>(old_index.size());
  std::vector<std::vector<double>> w2(c + 1, std::vector<double>(c + 1, kNegInf));
  std::vector<int> enter(c + 1, -1), leave(c + 1, -1);
  for (int u = 0; u < m; ++u) {
    for (int v = 1; v < m; ++v) {
      if (u == v || !std::isfinite(w[u][v])) continue;
      if (!in_cycle[u] && !in_cycle[v]) {
        w2[new_index[u]][new_index[v]] = w[u][v];
      } else if (!in_cycle[u] && in_cycle[v]) {
        const double val = w[u][v] - w[parent[v]][v];
        if (val > w2[new_index[u]][c]) {
          w2[new_index[u]][c] = val;
          enter[new_index[u]] = v;
        }
      } else if (in_cycle[u] && !in_cycle[v]) {
        if (w[u][v] > w2[c][new_index[v]]) {
          w2[c][new_index[v]] = w[u][v];
          leave[new_index[v]] = u;
        }
      }
    }
  }
  const std::vector<int> sub = Arborescence(w2);
  if (sub.empty()) return {};
  for (int nv = 1; nv < c; ++nv) {
    const int v = old_index[nv];
    parent[v] = sub[nv] == c ? leave[nv] : old_index[sub[nv]];
  }
  const int from = sub[c];
  parent[enter[from]] = old_index[from];
  return parent;
}

Decoded CleCore(const ArcScores &s) {
  const int n = s.size();
  Decoded out;
  if (n == 0) {
    out.score = 0.0;
    return out;
  }
  std::vector<std::vector<double>> w(n + 1, std::vector<double>(n + 1, kNegInf));
  for (int h = 0; h <= n; ++h) {
    for (int d = 1; d <= n; ++d) w[h][d] = s(h, d);
  }
  for (int r = 1; r <= n; ++r) {
    if (!std::isfinite(s(0, r))) continue;
    auto wr = w;
    for (int d = 1; d <= n; ++d) {
      if (d != r) wr[0][d] = kNegInf;
    }
    const std::vector<int> parent = Arborescence(wr);
    if (parent.empty()) continue;
    std::vector<int> heads(parent.begin() + 1, parent.end());
    const double score = s.TreeScore(heads);
    if (score > out.score) {
      out.score = score;
      out.heads = std::move(heads);
    }
  }
  return out;
}

DepTree MakeTree(std::vector<int> heads) {
  DepTree t;
  t.heads = std::move(heads);
  return t;
}

// True when some other single-root arborescence reaches the same score:
// any second optimum must avoid at least one arc of the first.
bool CleHasTie(const ArcScores &s, const Decoded &best) {
  const int n = s.size();
  for (int d = 1; d <= n; ++d) {
    ArcScores without = s;
    without.Set(best.heads[d - 1], d, kNegInf);
    const Decoded alt = CleCore(without);
    if (std::isfinite(alt.score) && NearlyEqual(alt.score, best.score)) return true;
  }
  return false;
}

}  // namespace

ArcScores::ArcScores(int n) : n_(n), s_(size_t(n + 1) * n, 0.0) {
  if (n < 0) throw ShapeError("negative sentence length");
  for (int d = 1; d <= n; ++d) s_[Index(d, d)] = kNegInf;
}

ArcScores ArcScores::FromDependentRows(const nn::Tensor &rows) {
  const int n = rows.rows();
  if (rows.cols() != n + 1) {
    throw ShapeError("dependent-row scores must be [n, n+1], got " +
                     rows.ShapeString());
  }
  ArcScores s(n);
  for (int d = 1; d <= n; ++d) {
    for (int h = 0; h <= n; ++h) s.Set(h, d, rows(d - 1, h));
  }
  return s;
}

void ArcScores::Set(int h, int d, double v) {
  if (h < 0 || h > n_ || d < 1 || d > n_) {
    throw ShapeError("arc (" + std::to_string(h) + ", " + std::to_string(d) +
                     ") outside a sentence of length " + std::to_string(n_));
  }
  if (h != d) s_[Index(h, d)] = v;
}

double ArcScores::TreeScore(const std::vector<int> &heads) const {
  if (static_cast<int>(heads.size()) != n_) {
    throw ShapeError("head sequence length does not match scores");
  }
  double total = 0.0;
  for (int d = 1; d <= n_; ++d) total += (*this)(heads[d - 1], d);
  return total;
}

void ArcScores::Validate() const {
  for (int h = 0; h <= n_; ++h) {
    for (int d = 1; d <= n_; ++d) {
      if (h != d && !std::isfinite((*this)(h, d))) {
        throw ValidityError("non-finite arc score");
      }
    }
  }
}

DepTree DecodeEisner(const ArcScores &scores) {
  Decoded best = EisnerCore(scores, true);
  if (best.heads.empty() && scores.size() > 0) {
    throw NumericError("no projective tree has finite score");
  }
  if (best.tie) {
    best.heads = LexicographicRefine(scores, best.score, [](const ArcScores &s) {
      return EisnerCore(s, false).score;
    });
  }
  return MakeTree(std::move(best.heads));
}

DepTree DecodeCle(const ArcScores &scores) {
  Decoded best = CleCore(scores);
  if (best.heads.empty() && scores.size() > 0) {
    throw NumericError("no spanning tree has finite score");
  }
  if (CleHasTie(scores, best)) {
    best.heads = LexicographicRefine(scores, best.score, [](const ArcScores &s) {
      return CleCore(s).score;
    });
  }
  return MakeTree(std::move(best.heads));
}

DepTree DecodeGreedy(const ArcScores &s) {
  const int n = s.size();
  auto best_head = [&s, n](int d, const std::function<bool(int)> &allowed) {
    int arg = -1;
    for (int h = 0; h <= n; ++h) {
      if (h == d || !allowed(h)) continue;
      if (arg < 0 || s(h, d) > s(arg, d)) arg = h;
    }
    return arg;
  };
  std::vector<int> heads(n);
  for (int d = 1; d <= n; ++d) {
    heads[d - 1] = best_head(d, [](int) { return true; });
  }
  // Keep the strongest ROOT child; demote the others.
  int keep = -1;
  for (int d = 1; d <= n; ++d) {
    if (heads[d - 1] == 0 && (keep < 0 || s(0, d) > s(0, keep))) keep = d;
  }
  for (int d = 1; d <= n; ++d) {
    if (heads[d - 1] == 0 && d != keep) {
      heads[d - 1] = best_head(d, [](int h) { return h != 0; });
    }
  }
  // Repair cycles one at a time.
  while (true) {
    std::vector<int> color(n + 1, 0), cycle;
    color[0] = 2;
    for (int start = 1; start <= n && cycle.empty(); ++start) {
      int v = start;
      while (color[v] == 0) {
        color[v] = 1;
        v = heads[v - 1];
      }
      if (color[v] == 1) {
        int u = v;
        do {
          cycle.push_back(u);
          u = heads[u - 1];
        } while (u != v);
      }
      for (v = start; color[v] == 1; v = heads[v - 1]) color[v] = 2;
    }
    if (cycle.empty()) break;
    // Nodes whose head chain enters the cycle cannot serve as new heads.
    std::vector<bool> tainted(n + 1, false);
    for (int v : cycle) tainted[v] = true;
    bool changed = true;
    while (changed) {
      changed = false;
      for (int d = 1; d <= n; ++d) {
        if (!tainted[d] && tainted[heads[d - 1]]) {
          tainted[d] = true;
          changed = true;
        }
      }
    }
    bool has_root_child = false;
    for (int d = 1; d <= n; ++d) has_root_child |= heads[d - 1] == 0;
    auto allowed = [&](int h) {
      return !tainted[h] && (h != 0 || !has_root_child);
    };
    int arc = -1, new_head = -1;
    double best_loss = 0.0;
    std::sort(cycle.begin(), cycle.end());
    for (int d : cycle) {
      const int h = best_head(d, allowed);
      if (h < 0) continue;
      const double loss = s(heads[d - 1], d) - s(h, d);
      if (arc < 0 || loss < best_loss) {
        arc = d;
        new_head = h;
        best_loss = loss;
      }
    }
    if (arc < 0) throw NumericError("greedy decoder could not break a cycle");
    heads[arc - 1] = new_head;
  }
  return MakeTree(std::move(heads));
}

double PathScore(const nn::Tensor &e, const nn::Tensor &t,
                 const std::vector<int> &tags) {
  double total = 0.0;
  for (size_t i = 0; i < tags.size(); ++i) {
    total += e(static_cast<int>(i), tags[i]);
    if (i > 0) total += t(tags[i - 1], tags[i]);
  }
  return total;
}

TagSeq ViterbiDecode(const nn::Tensor &e, const nn::Tensor &t) {
  const int n = e.rows();
  const int k = e.cols();
  if (t.rows() != k || t.cols() != k) {
    throw ShapeError("transitions must be [T, T] for emissions " + e.ShapeString());
  }
  if (n == 0) return TagSeq{};
  if (k == 0) throw ShapeError("empty tag set");
  // suffix[i][j]: best score of positions i..n-1 given tag j at i.
  std::vector<double> suffix(size_t(n) * k);
  for (int j = 0; j < k; ++j) suffix[size_t(n - 1) * k + j] = e(n - 1, j);
  for (int i = n - 2; i >= 0; --i) {
    for (int j = 0; j < k; ++j) {
      double best = kNegInf;
      for (int l = 0; l < k; ++l) {
        best = std::max(best, t(j, l) + suffix[size_t(i + 1) * k + l]);
      }
      suffix[size_t(i) * k + j] = e(i, j) + best;
    }
  }
  // Forward pass choosing the smallest tag that stays optimal.
  TagSeq out;
  out.tags.resize(n);
  auto pick = [&](int i, auto value) {
    double best = kNegInf;
    for (int j = 0; j < k; ++j) best = std::max(best, value(j));
    for (int j = 0; j < k; ++j) {
      if (NearlyEqual(value(j), best)) return j;
    }
    return 0;
  };
  out.tags[0] = pick(0, [&](int j) { return suffix[j]; });
  for (int i = 1; i < n; ++i) {
    const int prev = out.tags[i - 1];
    out.tags[i] = pick(i, [&](int j) {
      return t(prev, j) + suffix[size_t(i) * k + j];
    });
  }
  return out;
}

}  // namespace spad::structpred
