// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "icdnet/autodiff.hpp"
#include "icdnet/checkpoint.hpp"
#include "icdnet/ops.hpp"
#include "icdnet/optim.hpp"
#include "icdnet/rng.hpp"
#include "icdnet/tensor.hpp"
#include "support.hpp"

using namespace icdnet;
using icdnet::testing::check_leaf_gradients;
using icdnet::testing::random_tensor;

namespace {

constexpr double kOpTol = 1e-4;
constexpr double kLinearTol = 1e-6;

/// Weighted sum with fixed random weights, so every output cell gets a
/// distinct upstream gradient.
Var probe(Graph& g, const Var& x, std::uint64_t seed = 99) {
  Rng rng(seed);
  Tensor w(x.shape());
  for (double& v : w.values()) v = rng.uniform(-1.0, 1.0);
  return sum(mul(x, g.constant(std::move(w))));
}

}  // namespace

TEST(Tensor, ShapeAndAccess) {
  Tensor t = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t.at(1, 2), 6.0);
  EXPECT_EQ(t.mat()(1, 0), 4.0);
  EXPECT_EQ(Tensor::vector({1, 2}).rows(), 1u);
  EXPECT_THROW(Tensor({0, 3}), DimensionError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  EXPECT_THROW(Tensor::matrix({{1, 2}, {3}}), DimensionError);
  EXPECT_TRUE(t.all_finite());
  t[0] = std::nan("");
  EXPECT_FALSE(t.all_finite());
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  Rng a = Rng::stream(5, "init"), b = Rng::stream(5, "init"), c = Rng::stream(5, "dropout");
  std::set<std::uint64_t> firsts;
  for (int i = 0; i < 100; ++i) {
    std::uint64_t x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    firsts.insert(x);
  }
  EXPECT_NE(Rng::stream(5, "init").next_u64(), c.next_u64());
  EXPECT_EQ(firsts.size(), 100u);
}

TEST(Rng, UniformAndBelowRanges) {
  Rng r(1);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) {
    double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ++hist[r.below(7)];
  }
  for (int h : hist) EXPECT_NEAR(h, 10000, 500);
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng r(3);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  r.shuffle(std::span<int>(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_NE(v, sorted);
}

TEST(Autodiff, ChainRuleThroughSharedNode) {
  // f = sum(x * x + x), df/dx = 2x + 1, with x used three times.
  Graph g;
  Var x = g.leaf(Tensor::vector({1.0, -2.0, 0.5}));
  Var f = sum(add(mul(x, x), x));
  g.backward(f);
  EXPECT_DOUBLE_EQ(f.value()[0], 1 + 1 + 4 - 2 + 0.25 + 0.5);
  EXPECT_DOUBLE_EQ(x.grad()[0], 3.0);
  EXPECT_DOUBLE_EQ(x.grad()[1], -3.0);
  EXPECT_DOUBLE_EQ(x.grad()[2], 2.0);
}

TEST(Autodiff, BackwardNeedsScalarRoot) {
  Graph g;
  Var x = g.leaf(Tensor::vector({1.0, 2.0}));
  EXPECT_THROW(g.backward(x), DimensionError);
}

TEST(Autodiff, ConstantsReceiveNoGradient) {
  Graph g;
  Var x = g.leaf(Tensor::vector({1.0, 2.0}));
  Var c = g.constant(Tensor::vector({3.0, 4.0}));
  g.backward(sum(mul(x, c)));
  EXPECT_FALSE(g.has_grad(c.id()));
  EXPECT_DOUBLE_EQ(x.grad()[1], 4.0);
}

TEST(Autodiff, ParametersAccumulateInPlace) {
  ParameterSet ps;
  Parameter& w = ps.add("w", Tensor::vector({2.0}), true);
  for (int i = 0; i < 3; ++i) {
    Graph g;
    g.backward(scale(g.param(w), 1.5));
  }
  EXPECT_DOUBLE_EQ(w.grad[0], 4.5);
  ps.zero_grad();
  EXPECT_DOUBLE_EQ(w.grad[0], 0.0);
  EXPECT_THROW(ps.add("w", Tensor::vector({1.0}), true), Error);
}

TEST(Autodiff, NoGradGraphRecordsNothing) {
  ParameterSet ps;
  Parameter& w = ps.add("w", Tensor::vector({2.0, 1.0}), true);
  Graph g(false);
  Var y = sum(tanh(g.param(w)));
  EXPECT_FALSE(g.requires_grad(y.id()));
  EXPECT_NEAR(y.value()[0], std::tanh(2.0) + std::tanh(1.0), 1e-15);
}

TEST(Ops, MatmulKnownProduct) {
  Graph g;
  Var a = g.leaf(Tensor::matrix({{1, 2}, {3, 4}}));
  Var b = g.leaf(Tensor::matrix({{5}, {6}}));
  Var c = matmul(a, b);
  EXPECT_EQ(c.value(), Tensor::matrix({{17}, {39}}));
  EXPECT_THROW(matmul(b, b), DimensionError);
}

TEST(Ops, MatmulGradientMatchesFiniteDifferences) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    auto r = check_leaf_gradients({random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)},
                                  [](Graph&, const std::vector<Var>& v) { return sum(matmul(v[0], v[1])); });
    EXPECT_LT(r.worst, kLinearTol) << r.where;
  }
}

struct UnaryCase {
  const char* name;
  Var (*fn)(const Var&);
};

class UnaryOpGradient : public ::testing::TestWithParam<UnaryCase> {};

TEST_P(UnaryOpGradient, MatchesFiniteDifferences) {
  Rng rng(2);
  auto fn = GetParam().fn;
  for (int trial = 0; trial < 20; ++trial) {
    Tensor x = random_tensor({3, 5}, rng, -2.0, 2.0);
    for (double& v : x.values())
      if (std::abs(v) < 1e-3) v = 0.5;  // keep relu away from its kink
    auto r = check_leaf_gradients({x}, [fn](Graph& g, const std::vector<Var>& v) { return probe(g, fn(v[0])); });
    EXPECT_LT(r.worst, kOpTol) << GetParam().name << " " << r.where;
  }
}

INSTANTIATE_TEST_SUITE_P(Activations, UnaryOpGradient,
                         ::testing::Values(UnaryCase{"tanh", [](const Var& x) { return tanh(x); }},
                                           UnaryCase{"sigmoid", [](const Var& x) { return sigmoid(x); }},
                                           UnaryCase{"relu", [](const Var& x) { return relu(x); }},
                                           UnaryCase{"softmax", [](const Var& x) { return softmax_rows(x); }},
                                           UnaryCase{"masked_softmax",
                                                     [](const Var& x) { return masked_softmax_rows(x, 3); }},
                                           UnaryCase{"scale", [](const Var& x) { return scale(x, -0.7); }},
                                           UnaryCase{"slice_rows", [](const Var& x) { return slice_rows(x, 1, 3); }},
                                           UnaryCase{"slice_cols", [](const Var& x) { return slice_cols(x, 2, 5); }},
                                           UnaryCase{"reshape", [](const Var& x) { return reshape(x, {5, 3}); }},
                                           UnaryCase{"max_over_time", [](const Var& x) { return max_over_time(x); }}),
                         [](const auto& info) { return std::string(info.param.name); });

TEST(Ops, BinaryOpGradients) {
  Rng rng(3);
  using F = Var (*)(const Var&, const Var&);
  const std::pair<const char*, F> cases[] = {
      {"add", [](const Var& a, const Var& b) { return add(a, b); }},
      {"sub", [](const Var& a, const Var& b) { return sub(a, b); }},
      {"mul", [](const Var& a, const Var& b) { return mul(a, b); }},
  };
  for (auto [name, fn] : cases) {
    for (int trial = 0; trial < 20; ++trial) {
      auto r = check_leaf_gradients({random_tensor({2, 3}, rng), random_tensor({2, 3}, rng)},
                                    [fn](Graph& g, const std::vector<Var>& v) { return probe(g, fn(v[0], v[1])); });
      EXPECT_LT(r.worst, kOpTol) << name << " " << r.where;
    }
  }
}

TEST(Ops, BiasConcatStackGradients) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto r = check_leaf_gradients(
        {random_tensor({4, 3}, rng), random_tensor({3}, rng), random_tensor({4, 2}, rng)},
        [](Graph& g, const std::vector<Var>& v) {
          Var biased = add_bias(v[0], v[1]);
          Var cat = concat_cols({biased, v[2], biased});
          Var stacked = stack_rows({row(cat, 0), row(cat, 3), cat});
          return probe(g, tanh(stacked));
        });
    EXPECT_LT(r.worst, kOpTol) << r.where;
  }
}

TEST(Ops, Conv1dKnownValueAndGradient) {
  // T=3, d=1, k=2, one filter [1, 10]: windows (1,2) and (2,3).
  Graph g;
  Var x = g.leaf(Tensor::matrix({{1}, {2}, {3}}));
  Var w = g.leaf(Tensor::matrix({{1}, {10}}));
  Var b = g.leaf(Tensor::vector({0.5}));
  Var y = conv1d_windows(x, w, b, 2);
  EXPECT_EQ(y.value(), Tensor::matrix({{21.5}, {32.5}}));
  EXPECT_THROW(conv1d_windows(x, w, b, 4), DimensionError);

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto r = check_leaf_gradients({random_tensor({7, 3}, rng), random_tensor({12, 2}, rng), random_tensor({2}, rng)},
                                  [](Graph& g2, const std::vector<Var>& v) {
                                    return probe(g2, conv1d_windows(v[0], v[1], v[2], 4));
                                  });
    EXPECT_LT(r.worst, kOpTol) << r.where;
  }
}

TEST(Ops, MaxOverTimeTiesGoToFirstRow) {
  Graph g;
  Var x = g.leaf(Tensor::matrix({{1, 5}, {1, 2}}));
  Var m = max_over_time(x);
  g.backward(sum(m));
  EXPECT_EQ(m.value(), Tensor::vector({1, 5}));
  EXPECT_EQ(x.grad(), Tensor::matrix({{1, 1}, {0, 0}}));
}

TEST(Ops, MaskedSoftmaxZerosBeyondValid) {
  Graph g;
  Var x = g.leaf(Tensor::matrix({{1, 2, 300, -4}}));
  Var y = masked_softmax_rows(x, 2);
  EXPECT_EQ(y.value()[2], 0.0);
  EXPECT_EQ(y.value()[3], 0.0);
  EXPECT_NEAR(y.value()[0] + y.value()[1], 1.0, 1e-15);
  EXPECT_THROW(masked_softmax_rows(x, 0), IndexError);
  EXPECT_THROW(masked_softmax_rows(x, 5), IndexError);
  Var big = softmax_rows(g.leaf(Tensor::matrix({{1000, 1000}})));
  EXPECT_DOUBLE_EQ(big.value()[0], 0.5);
}

TEST(Ops, SoftmaxJacobianOnFiveVector) {
  Rng rng(6);
  Tensor x = random_tensor({1, 5}, rng);
  Graph g;
  Var y = softmax_rows(g.leaf(x));
  double total = 0;
  for (double v : y.value().values()) total += v;
  EXPECT_NEAR(total, 1.0, 1e-12);
  auto r = check_leaf_gradients({x}, [](Graph& g2, const std::vector<Var>& v) { return probe(g2, softmax_rows(v[0])); });
  EXPECT_LT(r.worst, kOpTol);
}

TEST(Ops, DropoutIsInvertedAndReplayable) {
  Graph g;
  Tensor ones({1, 20000}, 1.0);
  Var x = g.leaf(ones);
  Rng rng(7);
  Var y = dropout(x, 0.5, rng, true);
  double total = 0;
  for (double v : y.value().values()) {
    EXPECT_TRUE(v == 0.0 || v == 2.0);
    total += v;
  }
  EXPECT_NEAR(total / 20000.0, 1.0, 0.03);
  g.backward(sum(y));
  EXPECT_EQ(x.grad(), y.value());
  Var id = dropout(x, 0.5, rng, false);
  EXPECT_EQ(id.id(), x.id());
  EXPECT_THROW(dropout(x, 1.0, rng, true), ConfigError);
}

TEST(Ops, CrossEntropyStableAndMatchesFormula) {
  Graph g;
  Var z = g.leaf(Tensor::matrix({{20.0, -20.0}}));
  Var l = sigmoid_cross_entropy_sum(z, Tensor::matrix({{1.0, 1.0}}));
  EXPECT_NEAR(l.value()[0], std::log1p(std::exp(-20.0)) + 20.0 + std::log1p(std::exp(-20.0)), 1e-12);
  EXPECT_TRUE(std::isfinite(sigmoid_cross_entropy_sum(g.leaf(Tensor::matrix({{-800.0}})), Tensor::matrix({{1.0}}))
                                .value()[0]));
  EXPECT_THROW(sigmoid_cross_entropy_sum(z, Tensor::matrix({{0.5, 1.0}})), ValidationError);
  EXPECT_THROW(sigmoid_cross_entropy_sum(z, Tensor::matrix({{1.0}})), DimensionError);

  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor logits = random_tensor({2, 3}, rng, -3, 3);
    Tensor y({2, 3});
    for (double& v : y.values()) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    double direct = 0;
    for (std::size_t i = 0; i < 6; ++i) {
      double p = 1.0 / (1.0 + std::exp(-logits[i]));
      direct -= y[i] * std::log(p) + (1 - y[i]) * std::log(1 - p);
    }
    Graph g2;
    EXPECT_NEAR(multilabel_cross_entropy(g2.leaf(logits), y).value()[0], direct / 6.0, 1e-12);
    auto r = check_leaf_gradients({logits}, [&y](Graph&, const std::vector<Var>& v) {
      return multilabel_cross_entropy(v[0], y);
    });
    EXPECT_LT(r.worst, kOpTol);
  }
}

TEST(Ops, EmbedGathersRowsAndSkipsPad) {
  Graph g;
  Tensor E = Tensor::matrix({{9, 9}, {1, 2}, {3, 4}});
  Var table = g.leaf(E);
  std::vector<std::int32_t> ids{2, 0, 2, 1};
  Var x = embed(ids, table);
  EXPECT_EQ(x.value(), Tensor::matrix({{3, 4}, {0, 0}, {3, 4}, {1, 2}}));
  g.backward(sum(x));
  EXPECT_EQ(table.grad(), Tensor::matrix({{0, 0}, {1, 1}, {2, 2}}));
  std::vector<std::int32_t> bad{3};
  EXPECT_THROW(embed(bad, table), IndexError);
  std::vector<std::int32_t> all_pad{0, 0};
  EXPECT_EQ(embed(all_pad, table).value(), Tensor({2, 2}));
}

TEST(Ops, L2PenaltyOnlyOnDecayParameters) {
  ParameterSet ps;
  ps.add("w", Tensor::vector({1.0, -2.0}), true);
  ps.add("b", Tensor::vector({5.0}), false);
  EXPECT_DOUBLE_EQ(l2_value(ps, 0.1), 0.5);
  Graph g;
  g.backward(l2_penalty(g, ps, 0.1));
  EXPECT_DOUBLE_EQ(ps["w"].grad[1], -0.4);
  EXPECT_DOUBLE_EQ(ps["b"].grad[0], 0.0);
}

TEST(Adam, MatchesHandComputedUpdates) {
  ParameterSet ps;
  Parameter& w = ps.add("w", Tensor::vector({1.0, -1.0}), true);
  Adam adam(ps, AdamConfig{.learning_rate = 0.1});
  double m = 0, v = 0, x = 1.0;
  for (int t = 1; t <= 5; ++t) {
    const double gr = 2.0 * x;  // d/dx of x^2
    w.grad[0] = gr;
    w.grad[1] = 0.0;
    adam.step(ps);
    m = 0.9 * m + 0.1 * gr;
    v = 0.999 * v + 0.001 * gr * gr;
    x -= 0.1 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    EXPECT_NEAR(w.value[0], x, 1e-14);
    EXPECT_EQ(w.value[1], -1.0);
  }
  EXPECT_EQ(adam.step_count(), 5u);
}

TEST(Adam, MinimizesQuadratic) {
  ParameterSet ps;
  Parameter& w = ps.add("w", Tensor::vector({3.0, -4.0}), true);
  Adam adam(ps, AdamConfig{.learning_rate = 0.05});
  for (int i = 0; i < 2000; ++i) {
    ps.zero_grad();
    Graph g;
    Var p = g.param(w);
    g.backward(sum(mul(p, p)));
    adam.step(ps);
  }
  EXPECT_NEAR(w.value[0], 0.0, 1e-3);
  EXPECT_NEAR(w.value[1], 0.0, 1e-3);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  ParameterSet ps;
  ps.add("a", Tensor::matrix({{1.0 / 3.0, -0.0}, {1e-300, 7}}), true);
  ps.add("b.c", Tensor::vector({std::nextafter(1.0, 2.0)}), false);
  CheckpointHeader h{"cnn", 0xdeadbeefcafef00dULL, 42};
  icdnet::testing::TempDir dir("ck");
  save_checkpoint(dir / "m.bin", h, ps);
  LoadedCheckpoint ck = load_checkpoint(dir / "m.bin");
  EXPECT_EQ(ck.header.variant, "cnn");
  EXPECT_EQ(ck.header.config_hash, h.config_hash);
  EXPECT_EQ(ck.header.seed, 42u);
  ParameterSet restored;
  restored.add("a", Tensor({2, 2}), true);
  restored.add("b.c", Tensor({1}), false);
  restore_parameters(ck, restored);
  EXPECT_EQ(restored, ps);
  EXPECT_EQ(std::signbit(restored["a"].value[1]), true);
}

TEST(Checkpoint, RejectsCorruptionAndMismatch) {
  ParameterSet ps;
  ps.add("a", Tensor::vector({1, 2}), true);
  std::string bytes = encode_checkpoint({"cnn", 1, 2}, ps);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3), "t"), Error);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad, "t"), Error);
  ParameterSet other;
  other.add("a", Tensor::vector({1, 2, 3}), true);
  EXPECT_THROW(restore_parameters(decode_checkpoint(bytes, "t"), other), Error);
  ParameterSet renamed;
  renamed.add("z", Tensor::vector({1, 2}), true);
  EXPECT_THROW(restore_parameters(decode_checkpoint(bytes, "t"), renamed), Error);
  try {
    load_checkpoint("/nonexistent/dir/checkpoint.bin");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/checkpoint.bin"), std::string::npos);
  }
}
