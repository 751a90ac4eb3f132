#include "spad/nn/graph.h"

#include <cmath>
#include <limits>

#include "spad/base/error.h"

namespace spad::nn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Graph &SameGraph(Expr a, Expr b) {
  if (a.graph == nullptr || a.graph != b.graph) {
    throw GraphError("operands belong to different graphs");
  }
  a.graph->Check(a);
  a.graph->Check(b);
  return *a.graph;
}

Graph &GraphOf(Expr a) {
  if (a.graph == nullptr) throw GraphError("expression is not recorded");
  a.graph->Check(a);
  return *a.graph;
}

// Shape relation for binary elementwise ops.
enum class Broadcast { kSame, kRow };

Broadcast BinaryShape(const Tensor &a, const Tensor &b, const char *op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::kSame;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::kRow;
  throw ShapeError(std::string(op) + ": incompatible shapes " +
                   a.ShapeString() + " and " + b.ShapeString());
}

// Reduces a [r, c] gradient onto the broadcast operand.
void AccumulateBroadcast(const Tensor &g, Broadcast mode, double sign,
                         Tensor &target) {
  if (mode == Broadcast::kSame) {
    for (size_t i = 0; i < g.size(); ++i) target[i] += sign * g[i];
    return;
  }
  const int c = g.cols();
  for (int r = 0; r < g.rows(); ++r) {
    for (int j = 0; j < c; ++j) target[j] += sign * g(r, j);
  }
}

template <typename F, typename D>
Expr Unary(Expr a, F forward, D derivative) {
  Graph &g = GraphOf(a);
  const Tensor &x = a.value();
  Tensor y = Tensor::ZerosLike(x);
  for (size_t i = 0; i < x.size(); ++i) y[i] = forward(x[i]);
  const int ai = a.id;
  return g.Record(std::move(y), {a}, [ai, derivative](Graph &g, int self) {
    const Tensor &x = g.ValueOf(ai);
    const Tensor &y = g.ValueOf(self);
    const Tensor &gy = g.GradOf(self);
    Tensor &gx = g.AccumGrad(ai);
    for (size_t i = 0; i < x.size(); ++i) gx[i] += gy[i] * derivative(x[i], y[i]);
  });
}

}  // namespace

const Tensor &Expr::value() const {
  if (graph == nullptr) throw GraphError("expression is not recorded");
  return graph->Value(*this);
}

void Graph::Check(Expr e) const {
  if (e.graph != this || e.id < 0 || e.id >= static_cast<int>(nodes_.size())) {
    throw GraphError("expression is not recorded in this graph");
  }
}

Expr Graph::Input(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Expr{this, static_cast<int>(nodes_.size()) - 1};
}

Expr Graph::Param(Parameter &p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Expr{this, it->second};
  Node n;
  n.value = p.value;
  n.param = &p;
  n.needs_grad = param_grads_;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_[&p] = id;
  return Expr{this, id};
}

Expr Graph::Lookup(Parameter &table, std::span<const int> ids) {
  const int dim = table.value.cols();
  const int vocab = table.value.rows();
  Tensor out(static_cast<int>(ids.size()), dim);
  for (size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || ids[r] >= vocab) {
      throw ShapeError("lookup id " + std::to_string(ids[r]) +
                       " outside table of " + std::to_string(vocab) + " rows");
    }
    for (int c = 0; c < dim; ++c) out(int(r), c) = table.value(ids[r], c);
  }
  Node n;
  n.value = std::move(out);
  n.needs_grad = param_grads_;
  std::vector<int> id_copy(ids.begin(), ids.end());
  Parameter *tp = &table;
  n.backward = [tp, id_copy](Graph &g, int self) {
    const Tensor &gy = g.GradOf(self);
    const int dim = gy.cols();
    for (size_t r = 0; r < id_copy.size(); ++r) {
      for (int c = 0; c < dim; ++c) tp->grad(id_copy[r], c) += gy(int(r), c);
    }
  };
  nodes_.push_back(std::move(n));
  return Expr{this, static_cast<int>(nodes_.size()) - 1};
}

Expr Graph::Record(Tensor value, std::initializer_list<Expr> inputs,
                   BackwardFn fn) {
  return Record(std::move(value), std::vector<Expr>(inputs), std::move(fn));
}

Expr Graph::Record(Tensor value, const std::vector<Expr> &inputs,
                   BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (const Expr &e : inputs) {
    Check(e);
    if (nodes_[e.id].needs_grad) n.needs_grad = true;
  }
  if (n.needs_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Expr{this, static_cast<int>(nodes_.size()) - 1};
}

Tensor &Graph::AccumGrad(int id) {
  Node &n = nodes_[id];
  if (n.grad.size() != n.value.size() || !n.grad.SameShape(n.value)) {
    n.grad = Tensor::ZerosLike(n.value);
  }
  return n.grad;
}

void Graph::Backward(Expr loss) {
  Check(loss);
  if (nodes_[loss.id].value.size() != 1) {
    throw ShapeError("loss must be a scalar, got " +
                     nodes_[loss.id].value.ShapeString());
  }
  for (auto &n : nodes_) n.grad = Tensor();
  AccumGrad(loss.id)[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node &n = nodes_[id];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.param != nullptr) {
      n.param->grad.AddInPlace(n.grad);
    } else if (n.backward) {
      n.backward(*this, id);
    }
  }
}

const Tensor &Graph::Value(Expr e) const {
  Check(e);
  return nodes_[e.id].value;
}

const Tensor &Graph::Grad(Expr e) const {
  Check(e);
  static const Tensor kEmpty;
  const Node &n = nodes_[e.id];
  return n.grad.size() ? n.grad : kEmpty;
}

Expr MatMul(Expr a, Expr b) {
  Graph &g = SameGraph(a, b);
  const Tensor &x = a.value();
  const Tensor &y = b.value();
  if (x.cols() != y.rows()) {
    throw ShapeError("matmul: " + x.ShapeString() + " x " + y.ShapeString());
  }
  Tensor out(x.rows(), y.cols());
  out.matrix().noalias() = x.matrix() * y.matrix();
  const int ai = a.id, bi = b.id;
  return g.Record(std::move(out), {a, b}, [ai, bi](Graph &g, int self) {
    const Tensor &gy = g.GradOf(self);
    if (g.NeedsGrad(ai)) {
      g.AccumGrad(ai).matrix().noalias() +=
          gy.matrix() * g.ValueOf(bi).matrix().transpose();
    }
    if (g.NeedsGrad(bi)) {
      g.AccumGrad(bi).matrix().noalias() +=
          g.ValueOf(ai).matrix().transpose() * gy.matrix();
    }
  });
}

Expr Transpose(Expr a) {
  Graph &g = GraphOf(a);
  const Tensor &x = a.value();
  Tensor out(x.cols(), x.rows());
  out.matrix() = x.matrix().transpose();
  const int ai = a.id;
  return g.Record(std::move(out), {a}, [ai](Graph &g, int self) {
    g.AccumGrad(ai).matrix() += g.GradOf(self).matrix().transpose();
  });
}

namespace {

Expr AddSub(Expr a, Expr b, double sign, const char *name) {
  Graph &g = SameGraph(a, b);
  const Tensor &x = a.value();
  const Tensor &y = b.value();
  const Broadcast mode = BinaryShape(x, y, name);
  Tensor out = x;
  if (mode == Broadcast::kSame) {
    for (size_t i = 0; i < out.size(); ++i) out[i] += sign * y[i];
  } else {
    for (int r = 0; r < out.rows(); ++r) {
      for (int c = 0; c < out.cols(); ++c) out(r, c) += sign * y[c];
    }
  }
  const int ai = a.id, bi = b.id;
  return g.Record(std::move(out), {a, b},
                  [ai, bi, mode, sign](Graph &g, int self) {
                    const Tensor &gy = g.GradOf(self);
                    if (g.NeedsGrad(ai)) g.AccumGrad(ai).AddInPlace(gy);
                    if (g.NeedsGrad(bi)) {
                      AccumulateBroadcast(gy, mode, sign, g.AccumGrad(bi));
                    }
                  });
}

}  // namespace

Expr Add(Expr a, Expr b) { return AddSub(a, b, 1.0, "add"); }
Expr Sub(Expr a, Expr b) { return AddSub(a, b, -1.0, "sub"); }

Expr Mul(Expr a, Expr b) {
  Graph &g = SameGraph(a, b);
  const Tensor &x = a.value();
  const Tensor &y = b.value();
  const Broadcast mode = BinaryShape(x, y, "mul");
  Tensor out = x;
  const int cols = x.cols();
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] *= mode == Broadcast::kSame ? y[i] : y[i % cols];
  }
  const int ai = a.id, bi = b.id;
  return g.Record(std::move(out), {a, b}, [ai, bi, mode](Graph &g, int self) {
    const Tensor &gy = g.GradOf(self);
    const Tensor &x = g.ValueOf(ai);
    const Tensor &y = g.ValueOf(bi);
    const int cols = x.cols();
    if (g.NeedsGrad(ai)) {
      Tensor &gx = g.AccumGrad(ai);
      for (size_t i = 0; i < gy.size(); ++i) {
        gx[i] += gy[i] * (mode == Broadcast::kSame ? y[i] : y[i % cols]);
      }
    }
    if (g.NeedsGrad(bi)) {
      Tensor &gb = g.AccumGrad(bi);
      for (size_t i = 0; i < gy.size(); ++i) {
        gb[mode == Broadcast::kSame ? i : i % cols] += gy[i] * x[i];
      }
    }
  });
}

Expr Scale(Expr a, double s) {
  Graph &g = GraphOf(a);
  Tensor out = a.value();
  for (double &v : out.data()) v *= s;
  const int ai = a.id;
  return g.Record(std::move(out), {a}, [ai, s](Graph &g, int self) {
    const Tensor &gy = g.GradOf(self);
    Tensor &gx = g.AccumGrad(ai);
    for (size_t i = 0; i < gy.size(); ++i) gx[i] += s * gy[i];
  });
}

Expr AddConst(Expr a, const Tensor &c) {
  Graph &g = GraphOf(a);
  Tensor out = a.value();
  if (!out.SameShape(c)) {
    throw ShapeError("add_const: " + out.ShapeString() + " vs " +
                     c.ShapeString());
  }
  for (size_t i = 0; i < out.size(); ++i) out[i] += c[i];
  const int ai = a.id;
  return g.Record(std::move(out), {a}, [ai](Graph &g, int self) {
    g.AccumGrad(ai).AddInPlace(g.GradOf(self));
  });
}

Expr Tanh(Expr a) {
  return Unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Expr Sigmoid(Expr a) {
  return Unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Expr Relu(Expr a) {
  return Unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Expr Exp(Expr a) {
  return Unary(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Expr Log(Expr a) {
  return Unary(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

namespace {

// Row-wise log-normalizer that tolerates -inf entries.
void RowLogSoftmax(const Tensor &x, Tensor &out) {
  for (int r = 0; r < x.rows(); ++r) {
    double mx = kNegInf;
    for (int c = 0; c < x.cols(); ++c) mx = std::max(mx, x(r, c));
    if (mx == kNegInf) throw NumericError("softmax over an all -inf row");
    double z = 0.0;
    for (int c = 0; c < x.cols(); ++c) z += std::exp(x(r, c) - mx);
    const double lz = mx + std::log(z);
    for (int c = 0; c < x.cols(); ++c) out(r, c) = x(r, c) - lz;
  }
}

}  // namespace

Expr Softmax(Expr a) {
  Graph &g = GraphOf(a);
  const Tensor &x = a.value();
  Tensor out = Tensor::ZerosLike(x);
  RowLogSoftmax(x, out);
  for (double &v : out.data()) v = std::exp(v);
  const int ai = a.id;
  return g.Record(std::move(out), {a}, [ai](Graph &g, int self) {
    const Tensor &y = g.ValueOf(self);
    const Tensor &gy = g.GradOf(self);
    Tensor &gx = g.AccumGrad(ai);
    for (int r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (int c = 0; c < y.cols(); ++c) dot += gy(r, c) * y(r, c);
      for (int c = 0; c < y.cols(); ++c) gx(r, c) += y(r, c) * (gy(r, c) - dot);
    }
  });
}

Expr LogSoftmax(Expr a) {
  Graph &g = GraphOf(a);
  const Tensor &x = a.value();
  Tensor out = Tensor::ZerosLike(x);
  RowLogSoftmax(x, out);
  const int ai = a.id;
  return g.Record(std::move(out), {a}, [ai](Graph &g, int self) {
    const Tensor &y = g.ValueOf(self);
    const Tensor &gy = g.GradOf(self);
    Tensor &gx = g.AccumGrad(ai);
    for (int r = 0; r < y.rows(); ++r) {
      double total = 0.0;
      for (int c = 0; c < y.cols(); ++c) total += gy(r, c);
      for (int c = 0; c < y.cols(); ++c) {
        gx(r, c) += gy(r, c) - std::exp(y(r, c)) * total;
      }
    }
  });
}

Expr ConcatCols(const std::vector<Expr> &parts) {
  if (parts.empty()) throw ShapeError("concat of nothing");
  Graph &g = GraphOf(parts[0]);
  const int rows = parts[0].rows();
  int cols = 0;
  for (const Expr &p : parts) {
    if (p.graph != &g) throw GraphError("operands belong to different graphs");
    if (p.rows() != rows) throw ShapeError("concat_cols: row mismatch");
    cols += p.cols();
  }
  Tensor out(rows, cols);
  std::vector<int> ids, offsets;
  int off = 0;
  for (const Expr &p : parts) {
    const Tensor &v = p.value();
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < v.cols(); ++c) out(r, off + c) = v(r, c);
    }
    ids.push_back(p.id);
    offsets.push_back(off);
    off += v.cols();
  }
  return g.Record(std::move(out), parts, [ids, offsets](Graph &g, int self) {
    const Tensor &gy = g.GradOf(self);
    for (size_t k = 0; k < ids.size(); ++k) {
      if (!g.NeedsGrad(ids[k])) continue;
      Tensor &gx = g.AccumGrad(ids[k]);
      for (int r = 0; r < gx.rows(); ++r) {
        for (int c = 0; c < gx.cols(); ++c) gx(r, c) += gy(r, offsets[k] + c);
      }
    }
  });
}

Expr ConcatRows(const std::vector<Expr> &parts) {
  if (parts.empty()) throw ShapeError("concat of nothing");
  Graph &g = GraphOf(parts[0]);
  const int cols = parts[0].cols();
  int rows = 0;
  for (const Expr &p : parts) {
    if (p.graph != &g) throw GraphError("operands belong to different graphs");
    if (p.cols() != cols) throw ShapeError("concat_rows: column mismatch");
    rows += p.rows();
  }
  Tensor out(rows, cols);
  std::vector<int> ids, offsets;
  size_t off = 0;
  for (const Expr &p : parts) {
    const Tensor &v = p.value();
    std::copy(v.data().begin(), v.data().end(), out.data().begin() + off);
    ids.push_back(p.id);
    offsets.push_back(static_cast<int>(off));
    off += v.size();
  }
  return g.Record(std::move(out), parts, [ids, offsets](Graph &g, int self) {
    const Tensor &gy = g.GradOf(self);
    for (size_t k = 0; k < ids.size(); ++k) {
      if (!g.NeedsGrad(ids[k])) continue;
      Tensor &gx = g.AccumGrad(ids[k]);
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += gy[offsets[k] + i];
    }
  });
}

Expr SliceCols(Expr a, int begin, int len) {
  Graph &g = GraphOf(a);
  const Tensor &x = a.value();
  if (begin < 0 || len < 0 || begin + len > x.cols()) {
    throw ShapeError("slice_cols out of range on " + x.ShapeString());
  }
  Tensor out(x.rows(), len);
  for (int r = 0; r < x.rows(); ++r) {
    for (int c = 0; c < len; ++c) out(r, c) = x(r, begin + c);
  }
  const int ai = a.id;
  return g.Record(std::move(out), {a}, [ai, begin](Graph &g, int self) {
    const Tensor &gy = g.GradOf(self);
    Tensor &gx = g.AccumGrad(ai);
    for (int r = 0; r < gy.rows(); ++r) {
      for (int c = 0; c < gy.cols(); ++c) gx(r, begin + c) += gy(r, c);
    }
  });
}

Expr SliceRows(Expr a, int begin, int len) {
  Graph &g = GraphOf(a);
  const Tensor &x = a.value();
  if (begin < 0 || len < 0 || begin + len > x.rows()) {
    throw ShapeError("slice_rows out of range on " + x.ShapeString());
  }
  Tensor out(len, x.cols());
  const size_t off = size_t(begin) * x.cols();
  std::copy(x.data().begin() + off, x.data().begin() + off + out.size(),
            out.data().begin());
  const int ai = a.id;
  return g.Record(std::move(out), {a}, [ai, off](Graph &g, int self) {
    const Tensor &gy = g.GradOf(self);
    Tensor &gx = g.AccumGrad(ai);
    for (size_t i = 0; i < gy.size(); ++i) gx[off + i] += gy[i];
  });
}

Expr Sum(Expr a) {
  Graph &g = GraphOf(a);
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const int ai = a.id;
  return g.Record(Tensor::Scalar(s), {a}, [ai](Graph &g, int self) {
    const double gy = g.GradOf(self)[0];
    for (double &v : g.AccumGrad(ai).data()) v += gy;
  });
}

Expr Mean(Expr a) {
  const size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean of an empty tensor");
  return Scale(Sum(a), 1.0 / static_cast<double>(n));
}

Expr SumRows(Expr a) {
  Graph &g = GraphOf(a);
  const Tensor &x = a.value();
  Tensor out(1, x.cols());
  for (int r = 0; r < x.rows(); ++r) {
    for (int c = 0; c < x.cols(); ++c) out[c] += x(r, c);
  }
  const int ai = a.id;
  return g.Record(std::move(out), {a}, [ai](Graph &g, int self) {
    const Tensor &gy = g.GradOf(self);
    Tensor &gx = g.AccumGrad(ai);
    for (int r = 0; r < gx.rows(); ++r) {
      for (int c = 0; c < gx.cols(); ++c) gx(r, c) += gy[c];
    }
  });
}

Expr MeanRows(Expr a) {
  const int rows = a.rows();
  if (rows == 0) throw ShapeError("mean over zero rows");
  return Scale(SumRows(a), 1.0 / rows);
}

Expr Pick(Expr a, std::span<const int> index) {
  Graph &g = GraphOf(a);
  const Tensor &x = a.value();
  if (static_cast<int>(index.size()) != x.rows()) {
    throw ShapeError("pick: index length does not match rows");
  }
  Tensor out(x.rows(), 1);
  for (int r = 0; r < x.rows(); ++r) {
    if (index[r] < 0 || index[r] >= x.cols()) {
      throw ShapeError("pick: index out of range");
    }
    out[r] = x(r, index[r]);
  }
  std::vector<int> idx(index.begin(), index.end());
  const int ai = a.id;
  return g.Record(std::move(out), {a}, [ai, idx](Graph &g, int self) {
    const Tensor &gy = g.GradOf(self);
    Tensor &gx = g.AccumGrad(ai);
    for (size_t r = 0; r < idx.size(); ++r) gx(int(r), idx[r]) += gy[r];
  });
}

Expr Gather(Expr table, int rows, int cols, std::span<const int> index) {
  Graph &g = GraphOf(table);
  const Tensor &t = table.value();
  if (index.size() != size_t(rows) * cols) {
    throw ShapeError("gather: index size does not match output shape");
  }
  Tensor out(rows, cols);
  for (size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || size_t(index[i]) >= t.size()) {
      throw ShapeError("gather: index out of range");
    }
    out[i] = t[index[i]];
  }
  std::vector<int> idx(index.begin(), index.end());
  const int ti = table.id;
  return g.Record(std::move(out), {table}, [ti, idx](Graph &g, int self) {
    const Tensor &gy = g.GradOf(self);
    Tensor &gt = g.AccumGrad(ti);
    for (size_t i = 0; i < idx.size(); ++i) gt[idx[i]] += gy[i];
  });
}

Expr Dropout(Expr a, double rate, Rng &rng) {
  Graph &g = GraphOf(a);
  if (!g.training() || rate <= 0.0) return a;
  if (rate >= 1.0) throw ConfigError("dropout rate must be < 1");
  Tensor mask = Tensor::ZerosLike(a.value());
  const double keep = 1.0 / (1.0 - rate);
  for (double &m : mask.data()) m = rng.Uniform() < rate ? 0.0 : keep;
  return Mul(a, g.Input(std::move(mask)));
}

}  // namespace spad::nn
