#include <cmath>

#include <gtest/gtest.h>

#include "spad/base/error.h"
#include "spad/nn/graph.h"
#include "spad/nn/layers.h"
#include "spad/nn/optim.h"

namespace spad::nn {
namespace {

Tensor RandomTensor(int rows, int cols, Rng &rng, double scale = 1.0) {
  Tensor t(rows, cols);
  for (double &v : t.data()) v = rng.Uniform(-scale, scale);
  return t;
}

TEST(TensorTest, ShapeMustMatchData) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
  Tensor t({2, 3}, std::vector<double>(6, 1.0));
  EXPECT_EQ(t.shape(), (std::vector<int>{2, 3}));
  EXPECT_EQ(Tensor::Scalar(2.0).shape(), std::vector<int>{});
}

TEST(BackwardTest, ProductOfScalars) {
  ParamStore store;
  Parameter &x = store.Add("x", Tensor(1, 1, 3.0));
  Parameter &y = store.Add("y", Tensor(1, 1, -2.0));
  Graph g;
  g.Backward(Mul(g.Param(x), g.Param(y)));
  EXPECT_DOUBLE_EQ(x.grad[0], -2.0);
  EXPECT_DOUBLE_EQ(y.grad[0], 3.0);
}

TEST(BackwardTest, TanhOfProduct) {
  ParamStore store;
  Parameter &w = store.Add("w", Tensor(1, 1, 0.7));
  Graph g;
  Expr x = g.Input(Tensor(1, 1, 1.3));
  g.Backward(Tanh(Mul(g.Param(w), x)));
  const double t = std::tanh(0.7 * 1.3);
  EXPECT_NEAR(w.grad[0], (1 - t * t) * 1.3, 1e-15);
}

TEST(BackwardTest, NonScalarLossIsShapeError) {
  ParamStore store;
  Parameter &w = store.Add("w", Tensor(2, 2, 1.0));
  Graph g;
  EXPECT_THROW(g.Backward(g.Param(w)), ShapeError);
}

TEST(BackwardTest, ForeignExpressionIsGraphError) {
  Graph g1, g2;
  Expr a = g1.Input(Tensor(1, 1, 1.0));
  Expr b = g2.Input(Tensor(1, 1, 1.0));
  EXPECT_THROW(Add(a, b), GraphError);
  EXPECT_THROW(g2.Backward(a), GraphError);
}

TEST(BackwardTest, AccumulatorsAreLinear) {
  Rng rng(5);
  ParamStore store;
  Parameter &w = store.Add("w", RandomTensor(3, 4, rng));
  Tensor x = RandomTensor(2, 3, rng);
  auto loss_a = [&](Graph &g) {
    return Sum(Tanh(MatMul(g.Input(x), g.Param(w))));
  };
  auto loss_b = [&](Graph &g) {
    return Sum(Sigmoid(MatMul(g.Input(x), g.Param(w))));
  };
  {
    Graph g;
    g.Backward(Add(loss_a(g), loss_b(g)));
  }
  Tensor joint = w.grad;
  store.ZeroGrad();
  {
    Graph g;
    g.Backward(loss_a(g));
  }
  {
    Graph g;
    g.Backward(loss_b(g));
  }
  for (size_t i = 0; i < joint.size(); ++i) {
    EXPECT_NEAR(joint[i], w.grad[i], 1e-13);
  }
}

TEST(FiniteDiffTest, TwoLayerNetworkTenParams) {
  // 2 -> 2 -> 1 with biases: 6 + 3 = 9 weights, plus a 1x1 output scale.
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    ParamStore store;
    store.Add("w1", RandomTensor(2, 2, rng));
    store.Add("b1", RandomTensor(1, 2, rng));
    store.Add("w2", RandomTensor(2, 1, rng));
    store.Add("b2", RandomTensor(1, 1, rng));
    store.Add("s", RandomTensor(1, 1, rng));
    ASSERT_EQ(store.NumScalars(), 10u);
    Tensor x = RandomTensor(3, 2, rng);
    auto loss = [&](Graph &g) {
      Expr h = Tanh(Add(MatMul(g.Input(x), g.Param(store.Get("w1"))),
                        g.Param(store.Get("b1"))));
      Expr y = Sigmoid(Add(MatMul(h, g.Param(store.Get("w2"))),
                           g.Param(store.Get("b2"))));
      return Mul(Sum(y), g.Param(store.Get("s")));
    };
    EXPECT_LT(FiniteDiffCheck(store, loss, 1e-5), 1e-4) << "seed " << seed;
  }
}

TEST(FiniteDiffTest, LinearFunctionIsExact) {
  const std::vector<double> coef = {1.5, -2.0, 0.25};
  auto f = [&](std::span<const double> x) {
    return coef[0] * x[0] + coef[1] * x[1] + coef[2] * x[2] + 4.0;
  };
  const std::vector<double> point = {0.3, 0.1, -0.7};
  EXPECT_LT(FiniteDiffCheck(f, point, coef, 1e-5), 1e-10);
}

TEST(FiniteDiffTest, SoftmaxCrossEntropy) {
  Rng rng(11);
  ParamStore store;
  store.Add("logits", RandomTensor(4, 6, rng, 3.0));
  const std::vector<int> gold = {0, 5, 2, 3};
  auto loss = [&](Graph &g) {
    return Scale(Sum(Pick(LogSoftmax(g.Param(store.Get("logits"))), gold)),
                 -1.0);
  };
  EXPECT_LT(FiniteDiffCheck(store, loss, 1e-5), 1e-4);
}

// The five-point stencil is exact on quartics; the central one is off by
// h^2 times the third derivative over 6.
TEST(FiniteDiffTest, FourthOrderIsExactOnQuartic) {
  ParamStore store;
  store.Add("w", Tensor(1, 1, 1.0));
  auto loss = [&](Graph &g) {
    Expr w = g.Param(store.Get("w"));
    Expr sq = Mul(w, w);
    return Sum(Mul(sq, sq));
  };
  EXPECT_LT(FiniteDiffCheckFourthOrder(store, loss, 1e-2), 1e-10);
  EXPECT_NEAR(FiniteDiffCheck(store, loss, 1e-2), 1e-4, 1e-8);
  EXPECT_THROW(FiniteDiffCheckFourthOrder(store, loss, 0.0), PreconditionError);
}

TEST(FiniteDiffTest, ZeroStepIsPreconditionError) {
  ParamStore store;
  store.Add("w", Tensor(1, 1, 1.0));
  auto loss = [&](Graph &g) { return Sum(g.Param(store.Get("w"))); };
  EXPECT_THROW(FiniteDiffCheck(store, loss, 0.0), PreconditionError);
}

TEST(FiniteDiffTest, NonFiniteLossIsNumericError) {
  ParamStore store;
  store.Add("w", Tensor(1, 1, -1.0));
  auto loss = [&](Graph &g) { return Sum(Log(g.Param(store.Get("w")))); };
  EXPECT_THROW(FiniteDiffCheck(store, loss, 1e-5), NumericError);
}

// Every primitive in one composite expression.
TEST(FiniteDiffTest, AllPrimitives) {
  Rng rng(3);
  ParamStore store;
  store.Add("a", RandomTensor(3, 4, rng));
  store.Add("b", RandomTensor(4, 3, rng));
  store.Add("row", RandomTensor(1, 3, rng));
  store.Add("table", RandomTensor(5, 3, rng));
  store.Add("bias", RandomTensor(1, 4, rng));
  const std::vector<int> ids = {4, 1, 1};
  const std::vector<int> gather_idx = {0, 3, 2, 1, 1, 0};
  const std::vector<int> pick_idx = {2, 0, 1};
  auto loss = [&](Graph &g) {
    Expr m = MatMul(g.Param(store.Get("a")), g.Param(store.Get("b")));  // 3x3
    Expr e = g.Lookup(store.Get("table"), ids);                         // 3x3
    Expr s = Add(Mul(m, e), g.Param(store.Get("row")));
    Expr t = Sub(Transpose(s), Scale(Relu(e), 0.5));
    Expr cat = ConcatCols({Tanh(t), Sigmoid(SliceCols(t, 1, 2))});  // 3x5
    Expr stack = ConcatRows({cat, SliceRows(cat, 0, 1)});           // 4x5
    Expr sm = Softmax(stack);
    Expr lsm = LogSoftmax(SliceCols(stack, 0, 3));
    Expr pos = Log(Add(Exp(Scale(SliceRows(lsm, 0, 3), 0.1)),
                       g.Input(Tensor(3, 3, 0.5))));
    Expr gathered = Gather(g.Param(store.Get("bias")), 2, 3, gather_idx);
    Expr total = Add(Sum(Mul(sm, sm)), Mean(Pick(pos, pick_idx)));
    total = Add(total, Sum(Mul(gathered, SliceRows(e, 0, 2))));
    total = Add(total, Sum(MeanRows(SumRows(lsm))));
    return total;
  };
  EXPECT_LT(FiniteDiffCheck(store, loss, 1e-5), 1e-4);
}

TEST(FiniteDiffTest, BiLstm) {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    ParamStore store;
    BiLstm lstm(store, "enc", 3, 4, 2, rng);
    Linear out(store, "out", 8, 1, rng);
    Tensor x = RandomTensor(4, 3, rng);
    auto loss = [&](Graph &g) {
      return Sum(Tanh(out(g, lstm(g, g.Input(x), 0.0, nullptr))));
    };
    EXPECT_LT(FiniteDiffCheck(store, loss, 1e-5), 1e-4) << "seed " << seed;
  }
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  Rng rng(2);
  ParamStore store;
  Parameter &w = store.Add("w", RandomTensor(2, 3, rng));
  Tensor before = w.value;
  for (size_t i = 0; i < w.grad.size(); ++i) w.grad[i] = (i % 2 ? 1e-3 : -4.0);
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.epsilon = 1e-300;
  cfg.clip_norm = 0.0;
  AdamState adam(store, cfg);
  adam.Step(store);
  for (size_t i = 0; i < w.value.size(); ++i) {
    const double expected = i % 2 ? -0.01 : 0.01;
    EXPECT_NEAR(w.value[i] - before[i], expected, 1e-15);
    EXPECT_EQ(w.grad[i], 0.0);
  }
  EXPECT_EQ(store.step(), 1);
}

TEST(AdamTest, DefaultLearningRates) {
  EXPECT_EQ(kPretrainLearningRate, 1e-3);
  EXPECT_EQ(kParsingRlLearningRate, 2e-5);
  EXPECT_EQ(kTaggingRlLearningRate, 5e-5);
}

TEST(AdamTest, IdenticalSeedsGiveIdenticalTrajectories) {
  auto run = [] {
    Rng rng(9);
    ParamStore store;
    Linear l(store, "l", 3, 2, rng);
    AdamState adam(store, AdamConfig{});
    Tensor x = RandomTensor(5, 3, rng);
    for (int step = 0; step < 20; ++step) {
      Graph g;
      g.Backward(Sum(Tanh(l(g, g.Input(x)))));
      adam.Step(store);
    }
    std::vector<double> out;
    for (auto *p : store.All()) {
      out.insert(out.end(), p->value.data().begin(), p->value.data().end());
    }
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(AdamTest, RejectsBadBetas) {
  ParamStore store;
  AdamConfig cfg;
  cfg.beta1 = 1.0;
  EXPECT_THROW(AdamState(store, cfg), ConfigError);
}

TEST(ClipTest, GlobalNormIsBounded) {
  ParamStore store;
  Parameter &w = store.Add("w", Tensor(1, 2));
  w.grad[0] = 30.0;
  w.grad[1] = 40.0;
  EXPECT_DOUBLE_EQ(store.ClipGradNorm(5.0), 50.0);
  EXPECT_NEAR(store.GradNorm(), 5.0, 1e-12);
}

TEST(SampleTest, DegenerateDistribution) {
  Rng rng(1);
  const std::vector<double> p = {1.0, 0.0};
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(SampleCategorical(p, rng), 0);
}

TEST(SampleTest, FairCoinFrequency) {
  Rng rng(123);
  const std::vector<double> p = {0.5, 0.5};
  int ones = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ones += SampleCategorical(p, rng);
  EXPECT_NEAR(double(ones) / draws, 0.5, 0.01);
}

TEST(SampleTest, InvalidDistributions) {
  Rng rng(1);
  EXPECT_THROW(SampleCategorical(std::vector<double>{-0.1, 1.1}, rng),
               DistributionError);
  EXPECT_THROW(SampleCategorical(std::vector<double>{0.5, 0.4}, rng),
               DistributionError);
}

TEST(SampleTest, DeterministicGivenStream) {
  const std::vector<double> p = {0.2, 0.3, 0.5};
  Rng a = Rng::Derive(7, "sample"), b = Rng::Derive(7, "sample");
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(SampleCategorical(p, a), SampleCategorical(p, b));
  }
}

TEST(RngTest, LabeledStreamsDiffer) {
  Rng a = Rng::Derive(7, "init"), b = Rng::Derive(7, "dropout");
  EXPECT_NE(a.NextU64(), b.NextU64());
}

TEST(DropoutTest, IdentityAtInference) {
  Rng rng(1);
  Graph g(false);
  Expr x = g.Input(Tensor(2, 2, 1.0));
  EXPECT_EQ(Dropout(x, 0.5, rng).id, x.id);
  Graph t(true);
  Expr y = Dropout(t.Input(Tensor(100, 10, 1.0)), 0.5, rng);
  double total = 0.0;
  for (double v : y.value().data()) {
    EXPECT_TRUE(v == 0.0 || v == 2.0);
    total += v;
  }
  EXPECT_NEAR(total / 1000.0, 1.0, 0.15);
}

}  // namespace
}  // namespace spad::nn
