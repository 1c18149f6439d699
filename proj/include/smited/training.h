//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SMITED_TRAINING_H_
#define SMITED_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "smited/model.h"
#include "smited/optim.h"

namespace smited {

struct MaskingPolicy {
  double select_frac = 0.15;
  double mask_frac = 0.80;
  double random_frac = 0.10;
  double keep_frac = 0.10;

  // Throws UsageError("InvalidConfig").
  void validate() const;
};

enum class MaskAction : std::uint8_t { kNone, kMask, kRandom, kKeep };

struct MaskedSequence {
  std::vector<int> ids;             // corrupted input
  std::vector<double> target_mask;  // 1 at selected positions
  std::vector<MaskAction> actions;
};

// Specials are never selected. Random replacements are drawn uniformly
// from the non-special ids [5, vocab_size).
MaskedSequence apply_masking(std::span<const int> ids,
                             const MaskingPolicy &policy,
                             std::size_t vocab_size, Rng &rng);

// Mean cross-entropy over positions with target_mask != 0; zero (with zero
// gradient) when nothing is selected.
Var mlm_loss(const Var &logits, std::span<const int> targets,
             std::span<const double> target_mask);

// Cross-entropy of head(decode(encode(states(ids)))) against ids, averaged
// over non-pad positions.
Var reconstruction_loss(Forward &forward, std::span<const int> ids);

struct PretrainSchedule {
  std::size_t phase1_steps = 400;
  std::size_t phase2_steps = 1600;
  double encoder_frac = 0.95;  // phase-1 share of masked-LM batches
  double mlm_weight = 1.0;     // phase-2 loss weights
  double reconstruction_weight = 1.0;
  // Learning rate is constant until decay_start (fraction of all steps),
  // then falls linearly to lr * final_lr_scale at the last step.
  double decay_start = 1.0;
  double final_lr_scale = 1.0;

  double lr_scale(std::size_t step) const;
};

struct TrainSettings {
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  AdamSettings adam{.lr = 1e-3, .round_to_f32 = true};
  MaskingPolicy masking;
  PretrainSchedule schedule;
};

struct LossRecord {
  std::size_t step = 0;
  int phase = 1;
  std::string objective;  // "mlm" or "reconstruction"
  double loss = 0.0;
};

// Encodes every SMILES to D framed ids. Throws TooLong and parse errors.
std::vector<std::vector<int>> encode_corpus(std::span<const std::string> smiles,
                                            const Vocabulary &vocab,
                                            std::size_t max_len);

// Two-phase pre-training. Phase 1 routes each batch to the masked-LM
// objective with probability encoder_frac, otherwise to reconstruction
// with the token encoder held constant; phase 2 trains the weighted sum of
// both on every batch. Per-item gradients are reduced in item order, so
// the log depends on the seed but not on the thread count.
std::vector<LossRecord> pretrain(
    Model &model, std::span<const std::vector<int>> corpus,
    const TrainSettings &settings,
    const std::function<void(const LossRecord &)> &on_record = {});

// CSV "step,phase,objective,loss" with round-trip precision.
void write_loss_log(std::span<const LossRecord> log, std::ostream &out);

enum class EmbedMode { kLatent, kMeanPool };
EmbedMode parse_embed_mode(std::string_view name);
std::string_view embed_mode_name(EmbedMode mode);

// [1, L] molecule embedding in eval mode.
Tensor embed_ids(const Model &model, std::span<const int> ids, EmbedMode mode);
Tensor embed(const Model &model, std::string_view smiles, EmbedMode mode);

// latent_decode -> head -> argmax per position. Tokens are read up to the
// first [EOS]; other specials are skipped.
std::string greedy_decode(const Model &model, const Tensor &z);

// Fraction of selected tokens predicted exactly, over `passes` seeded
// maskings of the corpus.
double masked_token_accuracy(const Model &model,
                             std::span<const std::vector<int>> corpus,
                             const MaskingPolicy &policy, std::uint64_t seed,
                             std::size_t passes = 10);

// Fraction of SMILES reproduced exactly by greedy_decode(embed(s, latent)).
double reconstruction_exact_match(const Model &model,
                                  std::span<const std::string> smiles);

}  // namespace smited

#endif  // SMITED_TRAINING_H_
