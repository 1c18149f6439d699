//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/training.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <thread>

#include "smited/error.h"

namespace smited {
namespace {

constexpr double kFracTolerance = 1e-9;

std::size_t argmax(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) -
                                  row.begin());
}

// One item's contribution: its loss values by objective and its gradients.
struct ItemResult {
  double mlm = 0.0;
  double reconstruction = 0.0;
  Gradients grads;
};

struct StepPlan {
  bool mlm = false;
  bool reconstruction = false;
  bool freeze_encoder = false;
  double mlm_weight = 1.0;
  double reconstruction_weight = 1.0;
};

ItemResult run_item(const Model &model, std::span<const int> ids,
                    const MaskedSequence &masked, const StepPlan &plan,
                    Rng rng) {
  ItemResult result;
  result.grads = Gradients(model.params().size());
  Tape tape;
  ForwardOptions options;
  options.training = true;
  options.rng = &rng;
  Var total;
  if (plan.mlm) {
    Forward f(tape, model, options);
    const Var loss = mlm_loss(f.lm_head(f.encode_tokens(masked.ids)), ids,
                              masked.target_mask);
    result.mlm = loss.value()[0];
    total = ad::scale(loss, plan.mlm_weight);
  }
  if (plan.reconstruction) {
    options.freeze_encoder = plan.freeze_encoder;
    Forward f(tape, model, options);
    const Var loss = reconstruction_loss(f, ids);
    result.reconstruction = loss.value()[0];
    const Var weighted = ad::scale(loss, plan.reconstruction_weight);
    total = total.valid() ? ad::add(total, weighted) : weighted;
  }
  if (total.requires_grad()) {
    tape.backward(total);
    tape.collect(result.grads);
  }
  return result;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void MaskingPolicy::validate() const {
  auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!in_unit(select_frac) || !in_unit(mask_frac) || !in_unit(random_frac) ||
      !in_unit(keep_frac) ||
      std::abs(mask_frac + random_frac + keep_frac - 1.0) > kFracTolerance) {
    throw UsageError("InvalidConfig",
                     "masking fractions must lie in [0,1] with mask+random+keep = 1");
  }
}

MaskedSequence apply_masking(std::span<const int> ids,
                             const MaskingPolicy &policy,
                             std::size_t vocab_size, Rng &rng) {
  MaskedSequence out{std::vector<int>(ids.begin(), ids.end()),
                     std::vector<double>(ids.size(), 0.0),
                     std::vector<MaskAction>(ids.size(), MaskAction::kNone)};
  const std::size_t first_regular = Vocabulary::kSpecialCount;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (Vocabulary::is_special(ids[i])) continue;
    if (!rng.bernoulli(policy.select_frac)) continue;
    out.target_mask[i] = 1.0;
    const double u = rng.uniform();
    if (u < policy.mask_frac) {
      out.actions[i] = MaskAction::kMask;
      out.ids[i] = Vocabulary::kMask;
    } else if (u < policy.mask_frac + policy.random_frac &&
               vocab_size > first_regular) {
      out.actions[i] = MaskAction::kRandom;
      out.ids[i] =
          static_cast<int>(first_regular + rng.below(vocab_size - first_regular));
    } else {
      out.actions[i] = MaskAction::kKeep;
    }
  }
  return out;
}

Var mlm_loss(const Var &logits, std::span<const int> targets,
             std::span<const double> target_mask) {
  return ad::cross_entropy(logits, targets, target_mask);
}

Var reconstruction_loss(Forward &forward, std::span<const int> ids) {
  const Var states = forward.encode_tokens(ids);
  const Var logits =
      forward.lm_head(forward.latent_decode(forward.latent_encode(states)));
  const std::vector<double> weights = pad_mask(ids);
  return ad::cross_entropy(logits, ids, weights);
}

std::vector<std::vector<int>> encode_corpus(std::span<const std::string> smiles,
                                            const Vocabulary &vocab,
                                            std::size_t max_len) {
  std::vector<std::vector<int>> out;
  out.reserve(smiles.size());
  for (const std::string &s : smiles) out.push_back(encode(tokenize(s), vocab, max_len));
  return out;
}

std::vector<LossRecord> pretrain(
    Model &model, std::span<const std::vector<int>> corpus,
    const TrainSettings &settings,
    const std::function<void(const LossRecord &)> &on_record) {
  settings.masking.validate();
  const PretrainSchedule &schedule = settings.schedule;
  if (corpus.empty()) throw DataError("EmptyCorpus", "no training sequences");
  if (settings.batch_size == 0) throw UsageError("InvalidConfig", "batch_size must be positive");
  if (!(schedule.encoder_frac >= 0.0 && schedule.encoder_frac <= 1.0)) {
    throw UsageError("InvalidConfig", "encoder_frac must lie in [0, 1]");
  }
  const ModelConfig &config = model.config();
  for (const auto &ids : corpus) {
    if (ids.size() != config.max_len) {
      throw DataError("CorpusVocabMismatch", "sequence length differs from max_len");
    }
    for (int id : ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= config.vocab_size) {
        throw DataError("CorpusVocabMismatch",
                        "token id " + std::to_string(id) + " outside the vocabulary");
      }
    }
  }
  Rng order_rng(settings.seed);
  Rng route_rng = order_rng.fork(1);
  Rng mask_rng = order_rng.fork(2);
  Rng dropout_rng = order_rng.fork(3);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();
  auto next_index = [&]() {
    if (cursor == order.size()) {
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[order_rng.below(i)]);
      }
      cursor = 0;
    }
    return order[cursor++];
  };

  AdamState state;
  std::vector<LossRecord> log;
  const std::size_t total_steps = schedule.phase1_steps + schedule.phase2_steps;
  const std::size_t threads = std::max<std::size_t>(1, settings.threads);
  for (std::size_t step = 0; step < total_steps; ++step) {
    const int phase = step < schedule.phase1_steps ? 1 : 2;
    StepPlan plan;
    if (phase == 1) {
      plan.mlm = route_rng.bernoulli(schedule.encoder_frac);
      plan.reconstruction = !plan.mlm;
      plan.freeze_encoder = true;
    } else {
      plan.mlm = plan.reconstruction = true;
      plan.mlm_weight = schedule.mlm_weight;
      plan.reconstruction_weight = schedule.reconstruction_weight;
    }
    const std::size_t b = settings.batch_size;
    std::vector<std::size_t> items(b);
    std::vector<MaskedSequence> masked(b);
    std::vector<Rng> item_rngs;
    for (std::size_t i = 0; i < b; ++i) {
      items[i] = next_index();
      masked[i] = apply_masking(corpus[items[i]], settings.masking,
                                config.vocab_size, mask_rng);
      item_rngs.push_back(dropout_rng.fork(i));
    }
    std::vector<ItemResult> results(b);
    auto work = [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        results[i] = run_item(model, corpus[items[i]], masked[i], plan, item_rngs[i]);
      }
    };
    if (threads == 1 || b == 1) {
      work(0, b);
    } else {
      std::vector<std::thread> pool;
      const std::size_t chunk = (b + threads - 1) / threads;
      for (std::size_t begin = 0; begin < b; begin += chunk) {
        pool.emplace_back(work, begin, std::min(b, begin + chunk));
      }
      for (std::thread &t : pool) t.join();
    }
    Gradients grads(model.params().size());
    double mlm = 0.0, rec = 0.0;
    for (const ItemResult &r : results) {
      grads.accumulate(r.grads);
      mlm += r.mlm;
      rec += r.reconstruction;
    }
    const double inv = 1.0 / static_cast<double>(b);
    grads.scale(inv);
    AdamSettings adam = settings.adam;
    adam.lr *= schedule.lr_scale(step);
    adam_step(model.params(), grads, state, adam);
    auto emit = [&](const char *objective, double value) {
      log.push_back({step, phase, objective, value * inv});
      if (on_record) on_record(log.back());
    };
    if (plan.mlm) emit("mlm", mlm);
    if (plan.reconstruction) emit("reconstruction", rec);
  }
  return log;
}

double PretrainSchedule::lr_scale(std::size_t step) const {
  const double total = static_cast<double>(phase1_steps + phase2_steps);
  const double start = decay_start * total;
  const double t = static_cast<double>(step);
  if (t < start || total - 1.0 <= start) return 1.0;
  const double frac = std::min(1.0, (t - start) / (total - 1.0 - start));
  return 1.0 + (final_lr_scale - 1.0) * frac;
}

void write_loss_log(std::span<const LossRecord> log, std::ostream &out) {
  out << "step,phase,objective,loss\n";
  for (const LossRecord &r : log) {
    out << r.step << ',' << r.phase << ',' << r.objective << ','
        << format_double(r.loss) << '\n';
  }
}

EmbedMode parse_embed_mode(std::string_view name) {
  if (name == "latent") return EmbedMode::kLatent;
  if (name == "mean_pool" || name == "mean-pool") return EmbedMode::kMeanPool;
  throw UsageError("unknown embedding mode '" + std::string(name) +
                   "' (expected latent or mean_pool)");
}

std::string_view embed_mode_name(EmbedMode mode) {
  return mode == EmbedMode::kLatent ? "latent" : "mean_pool";
}

Tensor embed_ids(const Model &model, std::span<const int> ids, EmbedMode mode) {
  Tape tape;
  Forward f(tape, model, {.no_grad = true});
  const Var states = f.encode_tokens(ids);
  if (mode == EmbedMode::kLatent) return f.latent_encode(states).value();
  const std::vector<double> weights = pad_mask(ids);
  return ad::weighted_mean_rows(states, weights).value();
}

Tensor embed(const Model &model, std::string_view smiles, EmbedMode mode) {
  const auto ids = encode(tokenize(smiles), model.vocab(), model.config().max_len);
  return embed_ids(model, ids, mode);
}

std::string greedy_decode(const Model &model, const Tensor &z) {
  Tape tape;
  Forward f(tape, model, {.no_grad = true});
  const Tensor logits = f.lm_head(f.latent_decode(tape.constant(z))).value();
  std::string out;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const int id = static_cast<int>(argmax(logits.row_span(r)));
    if (id == Vocabulary::kEos) break;
    if (Vocabulary::is_special(id)) continue;
    out += model.vocab().token_of(id);
  }
  return out;
}

double masked_token_accuracy(const Model &model,
                             std::span<const std::vector<int>> corpus,
                             const MaskingPolicy &policy, std::uint64_t seed,
                             std::size_t passes) {
  Rng rng(seed);
  std::size_t selected = 0, correct = 0;
  for (std::size_t pass = 0; pass < passes; ++pass) {
    for (const auto &ids : corpus) {
      const MaskedSequence masked =
          apply_masking(ids, policy, model.config().vocab_size, rng);
      if (std::none_of(masked.target_mask.begin(), masked.target_mask.end(),
                       [](double w) { return w != 0.0; })) {
        continue;
      }
      Tape tape;
      Forward f(tape, model, {.no_grad = true});
      const Tensor logits = f.lm_head(f.encode_tokens(masked.ids)).value();
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (masked.target_mask[i] == 0.0) continue;
        ++selected;
        if (static_cast<int>(argmax(logits.row_span(i))) == ids[i]) ++correct;
      }
    }
  }
  return selected ? static_cast<double>(correct) / static_cast<double>(selected) : 0.0;
}

double reconstruction_exact_match(const Model &model,
                                  std::span<const std::string> smiles) {
  if (smiles.empty()) return 0.0;
  std::size_t hits = 0;
  for (const std::string &s : smiles) {
    if (greedy_decode(model, embed(model, s, EmbedMode::kLatent)) == s) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(smiles.size());
}

}  // namespace smited
