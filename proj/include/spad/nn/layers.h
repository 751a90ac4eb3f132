#ifndef SPAD_NN_LAYERS_H_
#define SPAD_NN_LAYERS_H_

#include <string>
#include <vector>

#include "spad/base/rng.h"
#include "spad/nn/graph.h"
#include "spad/nn/params.h"

namespace spad::nn {

// y = x W + b over rows of x.
class Linear {
 public:
  Linear() = default;
  Linear(ParamStore &store, const std::string &name, int in, int out,
         Rng &rng, bool bias = true);
  // Rebinds to parameters already present in the store.
  static Linear Bind(ParamStore &store, const std::string &name,
                     bool bias = true);

  Expr operator()(Graph &g, Expr x) const;
  int in() const;
  int out() const;

 private:
  Parameter *weight_ = nullptr;
  Parameter *bias_ = nullptr;
};

struct LstmState {
  Expr h;
  Expr c;
};

// Single-direction LSTM layer with gate order (input, forget, cell, output).
class LstmLayer {
 public:
  LstmLayer() = default;
  LstmLayer(ParamStore &store, const std::string &name, int in, int hidden,
            Rng &rng);
  static LstmLayer Bind(ParamStore &store, const std::string &name);

  int hidden() const { return hidden_; }
  LstmState ZeroState(Graph &g) const;
  LstmState Step(Graph &g, Expr x_row, const LstmState &prev) const;
  // Runs over the rows of x; output rows are aligned with input rows even
  // when reverse is set.
  Expr Run(Graph &g, Expr x, bool reverse) const;
  Expr Run(Graph &g, Expr x, bool reverse, const LstmState &initial) const;

 private:
  LstmState StepFromProjected(Graph &g, Expr projected_row,
                              const LstmState &prev) const;

  Parameter *input_weight_ = nullptr;
  Parameter *recurrent_weight_ = nullptr;
  Parameter *bias_ = nullptr;
  int hidden_ = 0;
};

// Stack of bidirectional LSTM layers; output width is 2 * hidden.
class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(ParamStore &store, const std::string &name, int in, int hidden,
         int layers, Rng &rng);
  static BiLstm Bind(ParamStore &store, const std::string &name, int layers);

  Expr operator()(Graph &g, Expr x, double dropout, Rng *dropout_rng) const;
  int output_dim() const;

 private:
  std::vector<LstmLayer> forward_;
  std::vector<LstmLayer> backward_;
};

}  // namespace spad::nn

#endif  // SPAD_NN_LAYERS_H_
