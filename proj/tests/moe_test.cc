//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "smited/error.h"
#include "smited/moe.h"

namespace smited {
namespace {

TEST(GateTest, TopTwoOfFour) {
  const GateDecision d = top_k_gate(std::vector<double>{1, 2, 3, 4}, 2);
  EXPECT_EQ(d.experts, (std::vector<std::size_t>{3, 2}));
  EXPECT_NEAR(d.weights[0], 0.7311, 1e-4);
  EXPECT_NEAR(d.weights[1], 0.2689, 1e-4);
}

TEST(GateTest, FullSoftmaxWhenKEqualsN) {
  const std::vector<double> logits{0.3, -1.0, 2.0};
  const GateDecision d = top_k_gate(logits, 3);
  const Tensor p = softmax_rows(Tensor({1, 3}, logits));
  ASSERT_EQ(d.experts, (std::vector<std::size_t>{2, 0, 1}));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(d.weights[j], p[d.experts[j]], 1e-15);
}

TEST(GateTest, TiesGoToLowerIndex) {
  const GateDecision d = top_k_gate(std::vector<double>{1.5, 1.5, 1.5, 1.5}, 2);
  EXPECT_EQ(d.experts, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(d.weights, (std::vector<double>{0.5, 0.5}));
  const GateDecision e = top_k_gate(std::vector<double>{0, 2, 1, 2}, 3);
  EXPECT_EQ(e.experts, (std::vector<std::size_t>{1, 3, 2}));
}

TEST(GateTest, Errors) {
  try {
    top_k_gate(std::vector<double>{1, 2}, 3);
    FAIL();
  } catch (const UsageError &e) {
    EXPECT_EQ(e.kind(), "KTooLarge");
  }
  EXPECT_THROW(top_k_gate(std::vector<double>{1, 2}, 0), UsageError);
  EXPECT_THROW(gate(std::vector<double>{1, 2}, Tensor({3, 2}), 1), NumericalError);
}

// k nonzero weights summing to one; shift leaves indices and weights,
// positive scale leaves indices.
TEST(GateTest, InvariantsOnRandomLogits) {
  Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.below(10), k = 1 + rng.below(n);
    std::vector<double> logits(n);
    for (double &v : logits) v = trial % 3 == 0 ? static_cast<double>(rng.below(3)) : rng.normal();
    const GateDecision d = top_k_gate(logits, k);
    ASSERT_EQ(d.experts.size(), k);
    double total = 0.0;
    for (double w : d.weights) {
      EXPECT_GT(w, 0.0);
      total += w;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
    for (std::size_t j = 1; j < k; ++j) {
      const double a = logits[d.experts[j - 1]], b = logits[d.experts[j]];
      EXPECT_TRUE(a > b || (a == b && d.experts[j - 1] < d.experts[j]));
    }
    // Integer-valued shifts and power-of-two scales keep the logits exact.
    const double shift = static_cast<double>(rng.below(200)) - 100.0;
    const double scale = std::ldexp(1.0, static_cast<int>(rng.below(9)) - 4);
    std::vector<double> shifted = logits, scaled = logits;
    for (double &v : shifted) v += shift;
    for (double &v : scaled) v *= scale;
    const GateDecision ds = top_k_gate(shifted, k);
    EXPECT_EQ(ds.experts, d.experts);
    for (std::size_t j = 0; j < k; ++j) EXPECT_NEAR(ds.weights[j], d.weights[j], 1e-12);
    EXPECT_EQ(top_k_gate(scaled, k).experts, d.experts);
    std::vector<double> stretched = logits;
    const double c = rng.uniform(0.01, 50.0);
    for (double &v : stretched) v *= c;
    EXPECT_EQ(top_k_gate(stretched, k).experts, d.experts);
  }
}

TEST(GateTest, DifferentiableWeightsMatch) {
  Rng rng(2);
  Tensor x({1, 4}), wg({4, 5});
  for (double &v : x.data()) v = rng.normal();
  for (double &v : wg.data()) v = rng.normal();
  const GateDecision d = gate(x.data(), wg, 3);
  Tape tape;
  const Tensor w = gate_weights(tape.constant(x), tape.constant(wg), d.experts).value();
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(w[j], d.weights[j], 1e-14);
}

ModelConfig tiny_config() {
  ModelConfig c;
  c.vocab_size = 8;
  c.max_len = 8;
  c.hidden = 8;
  c.heads = 2;
  c.layers = 1;
  c.ffn_dim = 16;
  c.features = 4;
  return c;
}

Vocabulary tiny_vocab() { return Vocabulary(std::vector<std::string>{"C", "O", "N"}); }

std::vector<Model> experts(std::size_t n) {
  std::vector<Model> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(Model::create(tiny_config(), tiny_vocab(), 10 + i));
  return out;
}

TEST(MixtureTest, SingleExpertIsThatExpert) {
  const MixtureOfExperts moe(experts(1), Tensor({8, 1}, 0.3), 1);
  const auto ids = encode(tokenize("CCO"), tiny_vocab(), 8);
  EXPECT_EQ(moe.mix(ids), embed_ids(moe.expert(0), ids, EmbedMode::kMeanPool));
  const Head head = Head::create(TaskKind::kRegress, 8, 4, 1, 1);
  EXPECT_EQ(head.predict(moe.mix(ids)),
            head.predict(embed_ids(moe.expert(0), ids, EmbedMode::kMeanPool)));
}

TEST(MixtureTest, IdenticalExpertsGiveThatEmbedding) {
  std::vector<Model> same;
  for (int i = 0; i < 3; ++i) same.push_back(Model::create(tiny_config(), tiny_vocab(), 5));
  Rng rng(1);
  Tensor wg({8, 3});
  for (double &v : wg.data()) v = rng.normal();
  const MixtureOfExperts moe(std::move(same), wg, 2, 1, EmbedMode::kLatent);
  for (const char *s : {"CCO", "OCN", "N"}) {
    const auto ids = encode(tokenize(s), tiny_vocab(), 8);
    const Tensor y = moe.mix(ids);
    const Tensor e = embed_ids(moe.expert(0), ids, EmbedMode::kLatent);
    for (std::size_t c = 0; c < 8; ++c) EXPECT_NEAR(y[c], e[c], 1e-12);
  }
}

TEST(MixtureTest, InactiveExpertsDoNotMatter) {
  Rng rng(7);
  Tensor wg({8, 4});
  for (double &v : wg.data()) v = rng.normal();
  MixtureOfExperts moe(experts(4), wg, 2);
  for (const char *s : {"CCO", "OCN", "CC(C)N", "C1CC1"}) {
    const auto ids = encode(tokenize(s), tiny_vocab(), 8);
    GateDecision d;
    const Tensor before = moe.mix(ids, &d);
    for (std::size_t i = 0; i < moe.size(); ++i) {
      if (std::find(d.experts.begin(), d.experts.end(), i) != d.experts.end()) continue;
      if (i == moe.router()) continue;
      for (Parameter &p : moe.expert(i).params()) {
        for (double &v : p.value.data()) v += rng.normal();
      }
    }
    GateDecision after_d;
    EXPECT_EQ(moe.mix(ids, &after_d), before) << s;
    EXPECT_EQ(after_d.experts, d.experts);
  }
}

TEST(MixtureTest, ConfigMismatch) {
  std::vector<Model> mixed = experts(1);
  ModelConfig other = tiny_config();
  other.features = 6;
  mixed.push_back(Model::create(other, tiny_vocab(), 1));
  EXPECT_THROW(MixtureOfExperts(std::move(mixed), Tensor({8, 2}), 1), DataError);
  EXPECT_THROW(MixtureOfExperts(experts(2), Tensor({8, 3}), 1), DataError);
  EXPECT_THROW(MixtureOfExperts(experts(2), Tensor({8, 2}), 3), UsageError);
}

// Expert 0 carries the target on cluster A, expert 1 on cluster B, expert
// 2 never does. The gate sees only the cluster position.
struct Synthetic {
  Tensor x, labels;
  std::vector<Tensor> tables;
  std::vector<int> cluster;
};

Synthetic two_clusters(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Synthetic s{Tensor({n, 4}), Tensor({n, 1}), {}, {}};
  for (int e = 0; e < 3; ++e) s.tables.emplace_back(Shape{n, 3});
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 2);
    s.cluster.push_back(c);
    const double sign = c == 0 ? 1.0 : -1.0;
    s.x.at(i, 0) = sign * 2.0 + 0.3 * rng.normal();
    s.x.at(i, 1) = 1.0;
    s.x.at(i, 2) = 0.3 * rng.normal();
    s.x.at(i, 3) = 0.3 * rng.normal();
    const double t = rng.normal();
    s.labels[i] = t;
    for (int e = 0; e < 3; ++e) {
      s.tables[e].at(i, 0) = e == c ? t : rng.normal();
      s.tables[e].at(i, 1) = rng.normal() * 0.1;
      s.tables[e].at(i, 2) = 1.0;
    }
  }
  return s;
}

TEST(MoeFinetuneTest, LearnsClusterRouting) {
  const Synthetic s = two_clusters(200, 3);
  FinetuneSettings settings;
  settings.epochs = 150;
  settings.batch_size = 20;
  settings.lr = 1e-2;
  settings.hidden = 8;
  settings.seed = 2;
  const MoeFinetuneResult r = moe_finetune(s.x, s.tables, s.labels, 2, settings);
  EXPECT_LT(r.epoch_loss.back(), 0.3 * r.epoch_loss.front());
  const Synthetic test = two_clusters(200, 99);
  std::size_t hits[2] = {0, 0}, totals[2] = {0, 0};
  for (std::size_t i = 0; i < 200; ++i) {
    const GateDecision d = gate(test.x.row_span(i), r.wg, 2);
    totals[test.cluster[i]] += 1;
    hits[test.cluster[i]] += d.experts[0] == static_cast<std::size_t>(test.cluster[i]);
  }
  EXPECT_GE(static_cast<double>(hits[0]) / static_cast<double>(totals[0]), 0.9);
  EXPECT_GE(static_cast<double>(hits[1]) / static_cast<double>(totals[1]), 0.9);
}

TEST(MoeFinetuneTest, SeededDeterminism) {
  const Synthetic s = two_clusters(40, 3);
  FinetuneSettings settings;
  settings.epochs = 3;
  settings.batch_size = 8;
  settings.seed = 4;
  const MoeFinetuneResult a = moe_finetune(s.x, s.tables, s.labels, 2, settings);
  const MoeFinetuneResult b = moe_finetune(s.x, s.tables, s.labels, 2, settings);
  EXPECT_EQ(a.wg, b.wg);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
}

TEST(MoeFinetuneTest, ModelWrapperAndFiles) {
  MixtureOfExperts moe(experts(3), Tensor({8, 3}), 2);
  const std::vector<std::string> smiles{"CCO", "OCN", "CN", "OO"};
  const auto ids = encode_corpus(smiles, tiny_vocab(), 8);
  FinetuneSettings settings;
  settings.epochs = 2;
  settings.batch_size = 2;
  const MoeFinetuneResult r =
      moe_finetune(moe, ids, Tensor({4, 1}, std::vector<double>{0, 1, 2, 3}), settings);
  moe.set_wg(r.wg);

  const auto dir = std::filesystem::temp_directory_path() / "smited_moe_test";
  std::filesystem::create_directories(dir);
  save_gate(r.wg, dir / "gate.ckpt");
  EXPECT_EQ(load_gate(dir / "gate.ckpt"), r.wg);
  MoeManifest m;
  m.experts = {"a.ckpt", "b.ckpt", "c.ckpt"};
  m.k = 2;
  m.gate = "gate.ckpt";
  write_moe_manifest(m, dir / "moe.json");
  const MoeManifest back = read_moe_manifest(dir / "moe.json");
  EXPECT_EQ(back.experts.size(), 3u);
  EXPECT_EQ(back.experts[1], dir / "b.ckpt");
  EXPECT_EQ(back.gate, dir / "gate.ckpt");
  EXPECT_EQ(back.k, 2u);
  m.k = 4;
  write_moe_manifest(m, dir / "bad.json");
  EXPECT_THROW(read_moe_manifest(dir / "bad.json"), UsageError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace smited
