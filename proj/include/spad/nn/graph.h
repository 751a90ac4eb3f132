#ifndef SPAD_NN_GRAPH_H_
#define SPAD_NN_GRAPH_H_

#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "spad/base/rng.h"
#include "spad/nn/params.h"
#include "spad/nn/tensor.h"

namespace spad::nn {

class Graph;

// Handle to a node recorded in a Graph.
struct Expr {
  Graph *graph = nullptr;
  int id = -1;

  const Tensor &value() const;
  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }
};

// Records a computation as it is evaluated (define-by-run) and runs
// reverse-mode accumulation over it. A graph is confined to one thread.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph &, int)>;

  // With param_grads false, parameters are treated as constants: Backward()
  // leaves their gradient buffers untouched, so a shared model can be
  // differentiated with respect to Input() leaves from several threads.
  explicit Graph(bool training = false, bool param_grads = true)
      : training_(training), param_grads_(param_grads) {}
  Graph(const Graph &) = delete;
  Graph &operator=(const Graph &) = delete;

  bool training() const { return training_; }

  // Constant leaf. With requires_grad the gradient can be read back with
  // Grad() after Backward().
  Expr Input(Tensor value, bool requires_grad = false);
  // Leaf bound to a parameter; Backward() accumulates into parameter.grad.
  // Repeated calls for the same parameter return the same node.
  Expr Param(Parameter &p);
  // Rows of an embedding table, one per id: [ids.size(), dim].
  Expr Lookup(Parameter &table, std::span<const int> ids);

  // Accumulates d(loss)/d(leaf) into every reachable parameter. The loss
  // must be a scalar recorded in this graph.
  void Backward(Expr loss);

  const Tensor &Value(Expr e) const;
  const Tensor &Grad(Expr e) const;
  size_t NumNodes() const { return nodes_.size(); }

  // Op-implementation interface.
  Expr Record(Tensor value, std::initializer_list<Expr> inputs, BackwardFn fn);
  Expr Record(Tensor value, const std::vector<Expr> &inputs, BackwardFn fn);
  const Tensor &ValueOf(int id) const { return nodes_[id].value; }
  const Tensor &GradOf(int id) const { return nodes_[id].grad; }
  bool NeedsGrad(int id) const { return nodes_[id].needs_grad; }
  // Gradient buffer of a node, zero-initialized on first access.
  Tensor &AccumGrad(int id);
  void Check(Expr e) const;

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    Parameter *param = nullptr;
    bool needs_grad = false;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter *, int> param_nodes_;
  bool training_;
  bool param_grads_;
};

// Primitive operations. Matrices are row-major; "row" operands of shape
// [1, c] broadcast over the rows of the other operand in Add/Sub/Mul.
Expr MatMul(Expr a, Expr b);
Expr Transpose(Expr a);
Expr Add(Expr a, Expr b);
Expr Sub(Expr a, Expr b);
Expr Mul(Expr a, Expr b);
Expr Scale(Expr a, double s);
Expr AddConst(Expr a, const Tensor &c);
Expr Tanh(Expr a);
Expr Sigmoid(Expr a);
Expr Relu(Expr a);
Expr Exp(Expr a);
Expr Log(Expr a);
// Row-wise softmax / log-softmax. Entries equal to -inf get probability 0.
Expr Softmax(Expr a);
Expr LogSoftmax(Expr a);
Expr ConcatCols(const std::vector<Expr> &parts);
Expr ConcatRows(const std::vector<Expr> &parts);
Expr SliceCols(Expr a, int begin, int len);
Expr SliceRows(Expr a, int begin, int len);
Expr Sum(Expr a);
Expr Mean(Expr a);
// Sum over rows: [r, c] -> [1, c].
Expr SumRows(Expr a);
Expr MeanRows(Expr a);
// out[r] = a[r][index[r]], shape [r, 1].
Expr Pick(Expr a, std::span<const int> index);
// out[r][c] = table[index[r * cols + c]] for a [1, k] table.
Expr Gather(Expr table, int rows, int cols, std::span<const int> index);
// Inverted dropout. Identity unless the graph is in training mode.
Expr Dropout(Expr a, double rate, Rng &rng);

}  // namespace spad::nn

#endif  // SPAD_NN_GRAPH_H_
