//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "smited/error.h"
#include "smited/finetune.h"
#include "smited/metrics.h"

namespace smited {
namespace {

// Counts ordered positive/negative pairs directly.
double brute_force_auc(const std::vector<double> &s, const std::vector<double> &y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1.0 || y[j] != 0.0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

TEST(MetricsTest, AucExample) {
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.1, 0.4, 0.35, 0.8},
                           std::vector<double>{0, 0, 1, 1}),
                   0.75);
  EXPECT_EQ(roc_auc(std::vector<double>{0.1, 0.2, 0.7, 0.9},
                    std::vector<double>{0, 0, 1, 1}),
            1.0);
  EXPECT_EQ(roc_auc(std::vector<double>{0.5, 0.5}, std::vector<double>{0, 1}), 0.5);
}

TEST(MetricsTest, AucMatchesPairCounting) {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.below(99);
    std::vector<double> s(n), y(n);
    const bool coarse = trial % 2 == 0;  // many ties
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = coarse ? static_cast<double>(rng.below(5)) : rng.normal();
      y[i] = rng.bernoulli(0.4) ? 1.0 : 0.0;
    }
    y[0] = 0.0;
    y[1] = 1.0;
    EXPECT_NEAR(roc_auc(s, y), brute_force_auc(s, y), 1e-12) << "trial " << trial;
  }
}

TEST(MetricsTest, AucErrors) {
  try {
    roc_auc(std::vector<double>{0.2, 0.3}, std::vector<double>{1, 1});
    FAIL();
  } catch (const DataError &e) {
    EXPECT_EQ(e.kind(), "SingleClass");
  }
  EXPECT_THROW(roc_auc(std::vector<double>{0.2}, std::vector<double>{1, 0}), DataError);
}

TEST(MetricsTest, RmseAndMae) {
  const std::vector<double> t{1.0, -2.0, 3.5};
  EXPECT_EQ(rmse(t, t), 0.0);
  EXPECT_EQ(mae(t, t), 0.0);
  const std::vector<double> p{2.0, -2.0, 1.5};
  EXPECT_DOUBLE_EQ(rmse(p, t), std::sqrt(5.0 / 3.0));
  EXPECT_DOUBLE_EQ(mae(p, t), 1.0);
  EXPECT_THROW(rmse(p, std::vector<double>{1.0}), DataError);
  EXPECT_THROW(mae({}, {}), DataError);
}

// Two clusters either side of the line x + 2y = 0.5 with a margin.
void separable(std::size_t n, Tensor &x, Tensor &y) {
  Rng rng(3);
  x = Tensor({n, 2});
  y = Tensor({n, 1});
  for (std::size_t i = 0; i < n;) {
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    const double side = a + 2 * b - 0.5;
    if (std::abs(side) < 0.3) continue;
    x.at(i, 0) = a;
    x.at(i, 1) = b;
    y[i] = side > 0 ? 1.0 : 0.0;
    ++i;
  }
}

TEST(FinetuneTest, SeparableDataIsLearned) {
  Tensor x, y;
  separable(80, x, y);
  FinetuneSettings s;
  s.task = TaskKind::kClassify;
  s.epochs = 300;
  s.batch_size = 16;
  s.lr = 1e-2;
  s.hidden = 8;
  s.seed = 5;
  const FinetuneResult r = finetune_frozen(x, y, s);
  EXPECT_LT(r.epoch_loss.back(), r.epoch_loss.front());
  const Tensor p = r.head.predict(x);
  std::size_t correct = 0;
  std::vector<double> scores;
  for (std::size_t i = 0; i < 80; ++i) {
    correct += (p.at(i, 1) > 0.5) == (y[i] == 1.0);
    scores.push_back(p.at(i, 1));
  }
  EXPECT_EQ(correct, 80u);
  EXPECT_EQ(roc_auc(scores, y.data()), 1.0);
}

TEST(FinetuneTest, ConstantRegressionConverges) {
  Rng rng(1);
  Tensor x({40, 3}), y({40, 1}, 2.5);
  for (double &v : x.data()) v = rng.normal();
  FinetuneSettings s;
  s.epochs = 2000;
  s.batch_size = 40;
  s.lr = 1e-2;
  const FinetuneResult r = finetune_frozen(x, y, s);
  const Tensor p = r.head.predict(x);
  const double initial = std::sqrt(r.epoch_loss.front());
  EXPECT_LT(rmse(p.data(), y.data()), 1e-2);
  EXPECT_LT(rmse(p.data(), y.data()), 1e-2 * initial);
}

TEST(FinetuneTest, SeededDeterminism) {
  Tensor x, y;
  separable(30, x, y);
  FinetuneSettings s;
  s.task = TaskKind::kClassify;
  s.epochs = 5;
  s.batch_size = 7;
  s.seed = 9;
  const FinetuneResult a = finetune_frozen(x, y, s), b = finetune_frozen(x, y, s);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(a.head.params()[i].value, b.head.params()[i].value);
}

TEST(FinetuneTest, LabelShapeMismatch) {
  Tensor x({4, 2});
  FinetuneSettings s;
  auto kind = [&](const Tensor &labels) {
    try {
      finetune_frozen(x, labels, s);
    } catch (const DataError &e) {
      return e.kind();
    }
    return std::string("none");
  };
  EXPECT_EQ(kind(Tensor({3, 1})), "LabelShapeMismatch");
  EXPECT_EQ(kind(Tensor({4})), "LabelShapeMismatch");
  s.task = TaskKind::kClassify;
  EXPECT_EQ(kind(Tensor({4, 2})), "LabelShapeMismatch");
  EXPECT_EQ(kind(Tensor({4, 1}, 0.5)), "LabelShapeMismatch");
  s.classes = 2;
  EXPECT_EQ(kind(Tensor({4, 1}, 3.0)), "LabelShapeMismatch");
}

ModelConfig tiny_config(std::size_t vocab) {
  ModelConfig c;
  c.vocab_size = vocab;
  c.max_len = 8;
  c.hidden = 16;
  c.heads = 2;
  c.layers = 1;
  c.ffn_dim = 24;
  c.features = 8;
  return c;
}

TEST(FinetuneTest, EndToEndUpdatesEncoder) {
  Vocabulary vocab(std::vector<std::string>{"C", "O", "N"});
  Model model = Model::create(tiny_config(8), vocab, 2);
  const Model before = model;
  const std::vector<std::string> smiles{"CCO", "CCN", "OCO", "NCN", "CCC", "OO"};
  const auto ids = encode_corpus(smiles, vocab, 8);
  Tensor y({6, 1}, std::vector<double>{1, 0, 1, 0, 0, 1});
  FinetuneSettings s;
  s.task = TaskKind::kClassify;
  s.epochs = 60;
  s.batch_size = 3;
  s.lr = 3e-3;
  const FinetuneResult r = finetune_end_to_end(model, ids, y, EmbedMode::kMeanPool, s);
  EXPECT_LT(r.epoch_loss.back(), 0.5 * r.epoch_loss.front());
  EXPECT_NE(model.params()[model.ids().embedding].value,
            before.params()[before.ids().embedding].value);
  const Tensor p = r.head.predict(embed_all(model, ids, EmbedMode::kMeanPool));
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(p.at(i, 1) > 0.5, y[i] == 1.0) << smiles[i];
}

TEST(FinetuneTest, HeadCheckpointRoundTrip) {
  const Head h = Head::create(TaskKind::kRegress, 5, 7, 3, 4);
  const auto path = std::filesystem::temp_directory_path() / "smited_head_test.ckpt";
  h.save(path);
  const Head g = Head::load(path);
  std::filesystem::remove(path);
  EXPECT_EQ(g.task(), TaskKind::kRegress);
  EXPECT_EQ(g.outputs(), 3u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(g.params()[i].value, h.params()[i].value);
  EXPECT_THROW(Model::from_checkpoint(h.to_checkpoint()), DataError);
}

TEST(LabeledCsvTest, ParsesAndRejects) {
  std::istringstream ok("id,smiles,logp\n1,CCO,0.5\n2,c1ccccc1,2.25\n");
  const LabeledData d = read_labeled_csv(ok);
  EXPECT_EQ(d.smiles, (std::vector<std::string>{"CCO", "c1ccccc1"}));
  EXPECT_EQ(d.targets, (std::vector<std::string>{"id", "logp"}));
  EXPECT_EQ(d.labels.shape(), (Shape{2, 2}));
  EXPECT_EQ(d.labels.at(1, 1), 2.25);
  std::istringstream no_smiles("a,b\n1,2\n"), bad("smiles,y\nCCO,x\n"),
      ragged("smiles,y\nCCO,1,2\n");
  EXPECT_THROW(read_labeled_csv(no_smiles), DataError);
  EXPECT_THROW(read_labeled_csv(bad), DataError);
  EXPECT_THROW(read_labeled_csv(ragged), DataError);
}

}  // namespace
}  // namespace smited
