#include "spad/nn/layers.h"

#include "spad/base/error.h"

namespace spad::nn {

Linear::Linear(ParamStore &store, const std::string &name, int in, int out,
               Rng &rng, bool bias) {
  weight_ = &store.AddGlorot(name + ".w", in, out, rng);
  if (bias) bias_ = &store.AddZeros(name + ".b", 1, out);
}

Linear Linear::Bind(ParamStore &store, const std::string &name, bool bias) {
  Linear l;
  l.weight_ = &store.Get(name + ".w");
  if (bias) l.bias_ = &store.Get(name + ".b");
  return l;
}

Expr Linear::operator()(Graph &g, Expr x) const {
  Expr y = MatMul(x, g.Param(*weight_));
  if (bias_ != nullptr) y = Add(y, g.Param(*bias_));
  return y;
}

int Linear::in() const { return weight_->value.rows(); }
int Linear::out() const { return weight_->value.cols(); }

LstmLayer::LstmLayer(ParamStore &store, const std::string &name, int in,
                     int hidden, Rng &rng)
    : hidden_(hidden) {
  input_weight_ = &store.AddGlorot(name + ".wx", in, 4 * hidden, rng);
  recurrent_weight_ = &store.AddGlorot(name + ".wh", hidden, 4 * hidden, rng);
  Tensor b(1, 4 * hidden);
  for (int i = hidden; i < 2 * hidden; ++i) b[i] = 1.0;  // forget gate
  bias_ = &store.Add(name + ".b", std::move(b));
}

LstmLayer LstmLayer::Bind(ParamStore &store, const std::string &name) {
  LstmLayer l;
  l.input_weight_ = &store.Get(name + ".wx");
  l.recurrent_weight_ = &store.Get(name + ".wh");
  l.bias_ = &store.Get(name + ".b");
  l.hidden_ = l.recurrent_weight_->value.rows();
  return l;
}

LstmState LstmLayer::ZeroState(Graph &g) const {
  return {g.Input(Tensor(1, hidden_)), g.Input(Tensor(1, hidden_))};
}

LstmState LstmLayer::StepFromProjected(Graph &g, Expr projected_row,
                                       const LstmState &prev) const {
  const int h = hidden_;
  Expr pre = Add(projected_row, MatMul(prev.h, g.Param(*recurrent_weight_)));
  Expr in_forget = Sigmoid(SliceCols(pre, 0, 2 * h));
  Expr input_gate = SliceCols(in_forget, 0, h);
  Expr forget_gate = SliceCols(in_forget, h, h);
  Expr cell_in = Tanh(SliceCols(pre, 2 * h, h));
  Expr out_gate = Sigmoid(SliceCols(pre, 3 * h, h));
  Expr c = Add(Mul(forget_gate, prev.c), Mul(input_gate, cell_in));
  return {Mul(out_gate, Tanh(c)), c};
}

LstmState LstmLayer::Step(Graph &g, Expr x_row, const LstmState &prev) const {
  Expr projected =
      Add(MatMul(x_row, g.Param(*input_weight_)), g.Param(*bias_));
  return StepFromProjected(g, projected, prev);
}

Expr LstmLayer::Run(Graph &g, Expr x, bool reverse) const {
  return Run(g, x, reverse, ZeroState(g));
}

Expr LstmLayer::Run(Graph &g, Expr x, bool reverse, const LstmState &initial) const {
  const int n = x.rows();
  if (n == 0) throw ShapeError("LSTM over an empty sequence");
  Expr projected = Add(MatMul(x, g.Param(*input_weight_)), g.Param(*bias_));
  std::vector<Expr> out(n);
  LstmState state = initial;
  for (int k = 0; k < n; ++k) {
    const int t = reverse ? n - 1 - k : k;
    state = StepFromProjected(g, SliceRows(projected, t, 1), state);
    out[t] = state.h;
  }
  return ConcatRows(out);
}

BiLstm::BiLstm(ParamStore &store, const std::string &name, int in, int hidden,
               int layers, Rng &rng) {
  int width = in;
  for (int l = 0; l < layers; ++l) {
    const std::string prefix = name + ".l" + std::to_string(l);
    forward_.emplace_back(store, prefix + ".fw", width, hidden, rng);
    backward_.emplace_back(store, prefix + ".bw", width, hidden, rng);
    width = 2 * hidden;
  }
}

BiLstm BiLstm::Bind(ParamStore &store, const std::string &name, int layers) {
  BiLstm b;
  for (int l = 0; l < layers; ++l) {
    const std::string prefix = name + ".l" + std::to_string(l);
    b.forward_.push_back(LstmLayer::Bind(store, prefix + ".fw"));
    b.backward_.push_back(LstmLayer::Bind(store, prefix + ".bw"));
  }
  return b;
}

Expr BiLstm::operator()(Graph &g, Expr x, double dropout,
                        Rng *dropout_rng) const {
  Expr h = x;
  for (size_t l = 0; l < forward_.size(); ++l) {
    h = ConcatCols({forward_[l].Run(g, h, false), backward_[l].Run(g, h, true)});
    if (dropout_rng != nullptr) h = Dropout(h, dropout, *dropout_rng);
  }
  return h;
}

int BiLstm::output_dim() const {
  return forward_.empty() ? 0 : 2 * forward_.back().hidden();
}

}  // namespace spad::nn
