//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/gradsuite.h"

#include <functional>
#include <utility>

#include "smited/attention.h"
#include "smited/autograd.h"
#include "smited/rng.h"
#include "smited/tokenizer.h"

namespace smited {

namespace {

Tensor random_tensor(Rng &rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double &v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Fixed random weights give every output coordinate its own gradient.
Var project(Tape &tape, const Var &y, std::uint64_t seed) {
  if (y.value().size() == 1) return y;
  Rng rng(seed ^ 0xABCDEFULL);
  return ad::sum(ad::mul(y, tape.constant(random_tensor(rng, y.shape()))));
}

constexpr const char *kSuiteMolecules[] = {
    "CC(=O)Oc1ccccc1C(=O)O", "CCO", "c1ccc2ccccc2c1", "CN1C=NC2=C1C(=O)N(C(=O)N2C)C",
    "OCC(O)CO", "N#Cc1ccccc1", "ClC(Cl)Cl", "CC(C)(C)O"};

Vocabulary suite_vocab() {
  return Vocabulary(std::vector<std::string>{"C", "O", "N", "Cl", "c", "(", ")",
                                             "=", "#", "1", "2"});
}

void op_cases(std::uint64_t seed, std::vector<GradSuiteEntry> &out) {
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
      {"matmul", [&](Tape &t, const Var &x) { return ad::matmul(x, t.constant(b)); }},
      {"matmul_right", [&](Tape &t, const Var &x) {
         return ad::matmul(ad::transpose(t.constant(c)), x);
       }},
      {"matmul_nt", [&](Tape &t, const Var &x) { return ad::matmul_nt(x, t.constant(bt)); }},
      {"matmul_nt_right", [&](Tape &t, const Var &x) { return ad::matmul_nt(t.constant(c), x); }},
      {"add", [&](Tape &t, const Var &x) { return ad::add(x, ad::mul(x, t.constant(c))); }},
      {"sub", [&](Tape &t, const Var &x) { return ad::sub(t.constant(c), ad::mul(x, x)); }},
      {"mul", [&](Tape &t, const Var &x) { return ad::mul(x, t.constant(c)); }},
      {"scale", [&](Tape &, const Var &x) { return ad::scale(x, -2.5); }},
      {"add_bias", [&](Tape &t, const Var &x) {
         return ad::add_bias(t.constant(c), ad::reshape(ad::slice_rows(x, 0, 1), {m}));
       }},
      {"div_rows", [&](Tape &t, const Var &x) { return ad::div_rows(x, t.constant(denom)); }},
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
      {"weighted_mean_rows", [&](Tape &, const Var &x) { return ad::weighted_mean_rows(x, weights); }},
      {"embedding", [&](Tape &, const Var &x) { return ad::embedding(x, ids); }},
      {"softmax", [&](Tape &, const Var &x) { return ad::softmax(ad::scale(x, 3.0)); }},
      {"gelu", [&](Tape &, const Var &x) { return ad::gelu(ad::scale(x, 2.0)); }},
      {"layernorm", [&](Tape &t, const Var &x) {
         return ad::layernorm(ad::scale(x, 2.0), t.constant(bias), t.constant(Tensor({m}, 0.3)));
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
      {"dropout", [&](Tape &, const Var &x) {
         Rng mask_rng(seed + 99);  // same mask on every evaluation
         return ad::dropout(x, 0.3, mask_rng);
       }},
  };
  for (const auto &[name, op] : cases) {
    const GradCheckResult r = grad_check(
        [&, op = op](Tape &t, const Var &x) { return project(t, op(t, x), seed); }, a);
    out.push_back({name, seed, r});
  }

  // Attention ops on their own shapes: heads of even width.
  const std::size_t heads = 1 + rng.below(2), d = 2 * (1 + rng.below(3));
  const std::size_t rows = 1 + rng.below(6), feats = 1 + rng.below(8);
  const Tensor u = random_tensor(rng, {rows, heads * d});
  out.push_back({"rotary", seed, grad_check([&](Tape &t, const Var &x) {
                   return project(t, ad::rotary(x, heads), seed);
                 }, u)});
  const Tensor p = random_feature_projection(feats, d, rng);
  const Tensor q = random_tensor(rng, {rows, d});
  std::vector<double> mask(rows, 1.0);
  if (rows > 1) mask[rng.below(rows)] = 0.0;
  out.push_back({"random_features", seed, grad_check([&](Tape &t, const Var &x) {
                   return project(t, ad::random_features(x, p, mask, FeatureStabilizer::kNone),
                                  seed);
                 }, q)});
  const Tensor kk = random_tensor(rng, {rows, d});
  const Tensor wv = random_tensor(rng, {d, 3});
  out.push_back({"linear_attention", seed, grad_check([&](Tape &t, const Var &x) {
                   const Var o = linear_attention(x, ad::add(x, t.constant(kk)),
                                                  ad::matmul(x, t.constant(wv)), p, mask);
                   return project(t, o, seed);
                 }, q)});
}

void model_case(std::uint64_t seed, std::vector<GradSuiteEntry> &out) {
  Model model = Model::create(gradient_suite_model_config(), suite_vocab(), seed);
  Rng rng(seed ^ 0x5EEDULL);
  const char *smiles = kSuiteMolecules[rng.below(std::size(kSuiteMolecules))];
  const std::size_t d = model.config().max_len;
  const std::vector<int> ids = encode(tokenize(smiles), model.vocab(), d);
  std::vector<int> corrupted = ids;
  std::vector<double> mlm_weights(d, 0.0);
  const std::size_t tokens = tokenize(smiles).tokens.size();
  for (std::size_t i = 1; i <= tokens; ++i) {
    if (!rng.bernoulli(0.3)) continue;
    corrupted[i] = rng.bernoulli(0.5) ? Vocabulary::kMask
                                      : Vocabulary::kSpecialCount +
                                            static_cast<int>(rng.below(model.vocab().size() -
                                                                       Vocabulary::kSpecialCount));
    mlm_weights[i] = 1.0;
  }
  mlm_weights[1] = 1.0;
  const std::vector<double> rec_weights = pad_mask(ids);
  const auto loss = [&](Tape &t) {
    Forward f(t, model);
    const Var mlm = ad::cross_entropy(f.lm_head(f.encode_tokens(corrupted)), ids, mlm_weights);
    const Var rec = ad::cross_entropy(
        f.lm_head(f.latent_decode(f.latent_encode(f.encode_tokens(ids)))), ids, rec_weights);
    return ad::add(mlm, rec);
  };
  out.push_back({"model_end_to_end", seed,
                 grad_check_parameters(model.params(), loss, 1e-5, 2, seed)});
}

}  // namespace

ModelConfig gradient_suite_model_config() {
  ModelConfig c;
  c.vocab_size = suite_vocab().size();
  c.max_len = 32;
  c.hidden = 64;
  c.heads = 4;
  c.layers = 2;
  c.features = 32;
  c.ffn_dim = 128;
  return c;
}

std::vector<GradSuiteEntry> gradient_suite(std::size_t cases, std::uint64_t seed,
                                           bool include_model) {
  std::vector<GradSuiteEntry> out;
  for (std::size_t i = 0; i < cases; ++i) {
    op_cases(seed + i, out);
    if (include_model) model_case(seed + i, out);
  }
  return out;
}

}  // namespace smited
