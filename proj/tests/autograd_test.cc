//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/autograd.h"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "smited/error.h"
#include "smited/gradcheck.h"
#include "smited/gradsuite.h"
#include "smited/optim.h"

namespace smited {
namespace {

Tensor random_tensor(Rng &rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double &v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// A fixed random projection turns any op output into a scalar whose
// gradient reaches every output coordinate with a distinct weight.
Var project(Tape &tape, const Var &y, std::uint64_t seed) {
  Rng rng(seed ^ 0xABCDEFULL);
  const Var w = tape.constant(random_tensor(rng, y.shape()));
  return ad::sum(ad::mul(y, w));
}

TEST(ForwardTest, SoftmaxValues) {
  const Tensor s = softmax_rows(Tensor::row({1.0, 2.0, 3.0}));
  EXPECT_NEAR(s[0], 0.09003, 1e-5);
  EXPECT_NEAR(s[1], 0.24473, 1e-5);
  EXPECT_NEAR(s[2], 0.66524, 1e-5);
}

TEST(ForwardTest, SoftmaxRowsSumToOne) {
  Rng rng(2);
  const Tensor s = softmax_rows(random_tensor(rng, {20, 13}, -30, 30));
  for (std::size_t r = 0; r < 20; ++r) {
    double total = 0;
    for (double v : s.row_span(r)) total += v;
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(ForwardTest, Gelu) {
  EXPECT_EQ(gelu_value(0.0), 0.0);
  EXPECT_NEAR(gelu_value(1.0), 0.841192, 1e-6);
  EXPECT_NEAR(gelu_value(-1.0), -0.158808, 1e-6);
}

TEST(ForwardTest, LayerNormStatistics) {
  Tape tape;
  Rng rng(3);
  const std::size_t n = 8, m = 17;
  const Var x = tape.constant(random_tensor(rng, {n, m}, -5, 5));
  const Var y = ad::layernorm(x, tape.constant(Tensor({m}, 1.0)),
                              tape.constant(Tensor({m}, 0.0)));
  for (std::size_t r = 0; r < n; ++r) {
    double mu = 0, var = 0;
    for (double v : y.value().row_span(r)) mu += v;
    mu /= m;
    for (double v : y.value().row_span(r)) var += (v - mu) * (v - mu);
    var /= m;
    EXPECT_LT(std::abs(mu), 1e-9);
    EXPECT_NEAR(var, 1.0, 1e-4);  // eps in the denominator
  }
  const Var c = ad::layernorm(tape.constant(Tensor({1, 5}, 3.0)),
                              tape.constant(Tensor({5}, 1.0)),
                              tape.constant(Tensor({5}, 0.0)));
  for (double v : c.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(ForwardTest, LayerNormVarianceWithoutEps) {
  Tape tape;
  Rng rng(4);
  const Var x = tape.constant(random_tensor(rng, {4, 32}, -5, 5));
  const Var y = ad::layernorm(x, tape.constant(Tensor({32}, 1.0)),
                              tape.constant(Tensor({32}, 0.0)), 0.0);
  for (std::size_t r = 0; r < 4; ++r) {
    double var = 0, mu = 0;
    for (double v : y.value().row_span(r)) mu += v / 32;
    for (double v : y.value().row_span(r)) var += (v - mu) * (v - mu) / 32;
    EXPECT_NEAR(var, 1.0, 1e-6);
  }
}

TEST(ForwardTest, ShapeMismatchNamesShapes) {
  Tape tape;
  const Var a = tape.constant(Tensor({2, 3}));
  const Var b = tape.constant(Tensor({2, 3}));
  try {
    ad::matmul(a, b);
    FAIL();
  } catch (const NumericalError &e) {
    EXPECT_EQ(e.kind(), "ShapeMismatch");
    EXPECT_NE(std::string(e.what()).find("[2, 3]"), std::string::npos);
  }
  EXPECT_THROW(ad::add(a, tape.constant(Tensor({3, 2}))), NumericalError);
}

TEST(ForwardTest, UniformCrossEntropyIsLogV) {
  for (std::size_t v : {2u, 7u, 50u, 2993u}) {
    Tape tape;
    const Var logits = tape.constant(Tensor({3, v}, 0.25));
    const std::vector<int> targets = {0, 1, static_cast<int>(v - 1)};
    EXPECT_NEAR(ad::cross_entropy(logits, targets).value()[0],
                std::log(static_cast<double>(v)), 1e-6);
  }
}

TEST(BackwardTest, SumAndMeanDistributeExactly) {
  Tape tape;
  const Var x = tape.variable(Tensor({3, 4}, 2.0));
  tape.backward(ad::sum(x));
  const Tensor gx = tape.grad(x);
  for (double g : gx.data()) EXPECT_EQ(g, 1.0);
  Tape tape2;
  const Var y = tape2.variable(Tensor({2, 4}, 2.0));
  tape2.backward(ad::mean(y));
  const Tensor gy = tape2.grad(y);
  for (double g : gy.data()) EXPECT_EQ(g, 1.0 / 8.0);
}

TEST(BackwardTest, ZeroWeightCrossEntropyHasNoGradient) {
  Tape tape;
  Rng rng(1);
  const Var x = tape.variable(random_tensor(rng, {3, 5}));
  const std::vector<int> targets = {1, 2, 3};
  const std::vector<double> weights = {0, 0, 0};
  const Var loss = ad::cross_entropy(x, targets, weights);
  EXPECT_EQ(loss.value()[0], 0.0);
  tape.backward(loss);
  const Tensor gx = tape.grad(x);
  for (double g : gx.data()) EXPECT_EQ(g, 0.0);
}

TEST(GradCheckTest, SpecExamples) {
  Rng rng(0);
  const Tensor x = random_tensor(rng, {3, 3});
  EXPECT_LT(grad_check([](Tape &, const Var &v) { return ad::sum(ad::mul(v, v)); },
                       x, 1e-5)
                .max_relative_error,
            1e-6);
  const std::vector<int> targets = {0, 2, 1};
  EXPECT_LT(grad_check([&](Tape &, const Var &v) {
                         return ad::cross_entropy(v, targets);
                       },
                       x)
                .max_relative_error,
            1e-4);
  const Tensor w = random_tensor(rng, {3, 2});
  const Tensor t = random_tensor(rng, {3, 2});
  EXPECT_LT(grad_check([&](Tape &tape, const Var &v) {
                         const Var ln = ad::layernorm(
                             v, tape.constant(Tensor({3}, 1.3)),
                             tape.constant(Tensor({3}, 0.1)));
                         return ad::mse(ad::matmul(ln, tape.constant(w)),
                                        tape.constant(t));
                       },
                       x)
                .max_relative_error,
            1e-4);
}

// Every differentiable op, checked on a fresh random shape per seed.
class OpGradTest : public ::testing::TestWithParam<std::uint64_t> { };

constexpr double kOpTolerance = 1e-4;

TEST_P(OpGradTest, AllOps) {
  const std::uint64_t seed = GetParam();
  Rng rng(seed);
  const std::size_t n = 1 + rng.below(5), m = 1 + rng.below(5), k = 1 + rng.below(4);
  const Tensor a = random_tensor(rng, {n, m});
  const Tensor b = random_tensor(rng, {m, k});
  const Tensor c = random_tensor(rng, {n, m});
  const Tensor bt = random_tensor(rng, {k, m});
  const Tensor bias = random_tensor(rng, {m});
  const Tensor denom = random_tensor(rng, {n, 1}, 0.5, 2.0);
  std::vector<int> ids;
  for (std::size_t i = 0; i < k + 2; ++i) ids.push_back(static_cast<int>(rng.below(n)));
  std::vector<int> targets;
  std::vector<double> weights;
  for (std::size_t i = 0; i < n; ++i) {
    targets.push_back(static_cast<int>(rng.below(m)));
    weights.push_back(rng.below(3) == 0 ? 0.0 : rng.uniform(0.5, 1.5));
  }
  weights[0] = 1.0;

  using Fn = std::function<Var(Tape &, const Var &)>;
  const std::vector<std::pair<std::string, Fn>> cases = {
      {"matmul_left", [&](Tape &t, const Var &x) { return ad::matmul(x, t.constant(b)); }},
      {"matmul_right", [&](Tape &t, const Var &x) {
         return ad::matmul(ad::transpose(t.constant(c)), x);
       }},
      {"matmul_nt", [&](Tape &t, const Var &x) { return ad::matmul_nt(x, t.constant(bt)); }},
      {"matmul_nt_right", [&](Tape &t, const Var &x) {
         return ad::matmul_nt(t.constant(c), x);
       }},
      {"add", [&](Tape &t, const Var &x) { return ad::add(x, ad::mul(x, t.constant(c))); }},
      {"sub", [&](Tape &t, const Var &x) { return ad::sub(t.constant(c), ad::mul(x, x)); }},
      {"mul", [&](Tape &t, const Var &x) { return ad::mul(x, t.constant(c)); }},
      {"scale", [&](Tape &, const Var &x) { return ad::scale(x, -2.5); }},
      {"add_bias", [&](Tape &t, const Var &x) { return ad::add_bias(t.constant(c), ad::slice_rows(x, 0, 1)); }},
      {"div_rows", [&](Tape &t, const Var &x) {
         return ad::div_rows(x, t.constant(denom));
       }},
      {"div_rows_denominator", [&](Tape &t, const Var &x) {
         return ad::div_rows(t.constant(c), ad::add(ad::slice_cols(ad::mul(x, x), 0, 1),
                                                     t.constant(denom)));
       }},
      {"clamp_min", [&](Tape &, const Var &x) { return ad::clamp_min(x, 0.05); }},
      {"exp", [&](Tape &, const Var &x) { return ad::exp(x); }},
      {"transpose", [&](Tape &, const Var &x) { return ad::transpose(x); }},
      {"reshape", [&](Tape &, const Var &x) { return ad::reshape(x, {m, n}); }},
      {"concat_rows", [&](Tape &t, const Var &x) {
         const Var parts[] = {x, t.constant(c), ad::scale(x, 3.0)};
         return ad::concat(parts, 0);
       }},
      {"concat_cols", [&](Tape &t, const Var &x) {
         const Var parts[] = {t.constant(c), x};
         return ad::concat(parts, 1);
       }},
      {"slice_rows", [&](Tape &, const Var &x) { return ad::slice_rows(x, n / 2, n); }},
      {"slice_cols", [&](Tape &, const Var &x) { return ad::slice_cols(x, 0, (m + 1) / 2); }},
      {"sum", [&](Tape &, const Var &x) { return ad::sum(ad::mul(x, x)); }},
      {"mean", [&](Tape &, const Var &x) { return ad::mean(ad::exp(x)); }},
      {"sum_rows", [&](Tape &, const Var &x) { return ad::sum_rows(x); }},
      {"weighted_mean_rows", [&](Tape &, const Var &x) {
         return ad::weighted_mean_rows(x, weights);
       }},
      {"embedding", [&](Tape &, const Var &x) { return ad::embedding(x, ids); }},
      {"softmax", [&](Tape &, const Var &x) { return ad::softmax(ad::scale(x, 3.0)); }},
      {"gelu", [&](Tape &, const Var &x) { return ad::gelu(ad::scale(x, 2.0)); }},
      {"layernorm_x", [&](Tape &t, const Var &x) {
         return ad::layernorm(ad::scale(x, 2.0), t.constant(bias),
                              t.constant(Tensor({m}, 0.3)));
       }},
      {"layernorm_affine", [&](Tape &t, const Var &x) {
         const Var g = ad::reshape(ad::slice_rows(x, 0, 1), {m});
         const Var s = ad::reshape(ad::slice_rows(x, n - 1, n), {m});
         return ad::layernorm(t.constant(c), g, s);
       }},
      {"cross_entropy", [&](Tape &, const Var &x) {
         return ad::cross_entropy(ad::scale(x, 2.0), targets, weights);
       }},
      {"mse", [&](Tape &t, const Var &x) { return ad::mse(x, t.constant(c)); }},
  };
  for (const auto &[name, op] : cases) {
    const GradCheckResult r = grad_check(
        [&, op = op](Tape &t, const Var &x) {
          const Var y = op(t, x);
          return y.value().size() == 1 ? y : project(t, y, seed);
        },
        a);
    EXPECT_LT(r.max_relative_error, kOpTolerance) << name << " seed " << seed;
    EXPECT_EQ(r.coordinates_checked, a.size());
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, OpGradTest, ::testing::Range<std::uint64_t>(0, 24));

TEST(ParameterGradTest, MatchesFiniteDifferences) {
  ParameterSet params;
  Rng rng(8);
  const std::size_t w = params.add("w", random_tensor(rng, {4, 3}));
  const std::size_t b = params.add("b", random_tensor(rng, {3}));
  params.add("frozen", random_tensor(rng, {3, 3}), false);
  const Tensor x = random_tensor(rng, {5, 4});
  const std::vector<int> y = {0, 2, 1, 1, 0};
  const auto loss = [&](Tape &t) {
    const Var h = ad::add_bias(ad::matmul(t.constant(x), t.parameter(params, w)),
                               t.parameter(params, b));
    return ad::cross_entropy(ad::matmul(ad::gelu(h), t.parameter(params, 2)), y);
  };
  const GradCheckResult r = grad_check_parameters(params, loss);
  EXPECT_LT(r.max_relative_error, 1e-5);
  EXPECT_EQ(r.coordinates_checked, 15u);
}

TEST(AdamTest, ZeroGradientLeavesParameters) {
  ParameterSet params;
  params.add("p", Tensor({3}, 1.5));
  Gradients grads(1);
  grads[0] = Tensor({3}, 0.0);
  AdamState state;
  adam_step(params, grads, state, {});
  for (double v : params[0].value.data()) EXPECT_EQ(v, 1.5);
}

TEST(AdamTest, SingleStepByHand) {
  ParameterSet params;
  params.add("p", Tensor::row({1.0, -2.0}));
  Gradients grads(1);
  grads[0] = Tensor::row({0.5, -0.25});
  AdamState state;
  state.first_moment = {Tensor::row({0.1, 0.2})};
  state.second_moment = {Tensor::row({0.01, 0.04})};
  state.step = 2;
  AdamSettings s;
  s.lr = 0.01;
  adam_step(params, grads, state, s);
  const double b1 = 0.9, b2 = 0.999;
  const double t = 3;
  const double g[2] = {0.5, -0.25}, m0[2] = {0.1, 0.2}, v0[2] = {0.01, 0.04},
               p0[2] = {1.0, -2.0};
  for (int i = 0; i < 2; ++i) {
    const double m = b1 * m0[i] + (1 - b1) * g[i];
    const double v = b2 * v0[i] + (1 - b2) * g[i] * g[i];
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    EXPECT_NEAR(params[0].value[i], p0[i] - 0.01 * mh / (std::sqrt(vh) + 1e-8), 1e-10);
  }
  EXPECT_EQ(state.step, 3);
}

TEST(AdamTest, ConstantGradientStepApproachesLr) {
  ParameterSet params;
  params.add("p", Tensor::row({0.0, 0.0}));
  Gradients grads(1);
  grads[0] = Tensor::row({3.0, -0.02});
  AdamState state;
  AdamSettings s;
  s.lr = 1e-3;
  Tensor before = params[0].value;
  for (int step = 0; step < 500; ++step) {
    before = params[0].value;
    adam_step(params, grads, state, s);
  }
  EXPECT_NEAR(params[0].value[0] - before[0], -1e-3, 1e-8);
  EXPECT_NEAR(params[0].value[1] - before[1], 1e-3, 1e-8);
}

TEST(AdamTest, FrozenParametersSkipped) {
  ParameterSet params;
  params.add("p", Tensor({2}, 1.0), false);
  Gradients grads(1);
  grads[0] = Tensor({2}, 1.0);
  AdamState state;
  adam_step(params, grads, state, {});
  EXPECT_EQ(params[0].value, Tensor({2}, 1.0));
}

TEST(AdamTest, ShapeMismatch) {
  ParameterSet params;
  params.add("p", Tensor({2}, 1.0));
  Gradients grads(1);
  grads[0] = Tensor({3}, 1.0);
  AdamState state;
  EXPECT_THROW(adam_step(params, grads, state, {}), NumericalError);
}

TEST(GradientSuiteTest, EveryEntryWithinTolerance) {
  const auto entries = gradient_suite(2, 40);
  std::set<std::string> names;
  for (const auto &e : entries) {
    names.insert(e.name);
    EXPECT_LT(e.result.max_relative_error, 1e-3) << e.name << " seed " << e.seed;
    EXPECT_GT(e.result.coordinates_checked, 0u) << e.name;
  }
  EXPECT_EQ(entries.size(), 2 * names.size());
  EXPECT_TRUE(names.count("model_end_to_end"));
  EXPECT_TRUE(names.count("linear_attention"));
}

}  // namespace
}  // namespace smited
